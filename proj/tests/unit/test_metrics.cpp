// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "helpers.hpp"
#include "ronorm/metrics.hpp"

using namespace ronorm;
using ronorm::testing::random_tensor;

namespace
{

SnapshotTensor vector_tensor(std::initializer_list<double> v)
{
  SnapshotTensor t(1, static_cast<int>(v.size()), 1, 1);
  std::copy(v.begin(), v.end(), t.data().begin());
  return t;
}

}  // namespace

TEST_SUITE("metrics")
{
  TEST_CASE("e_l2 examples")
  {
    const SnapshotTensor truth = random_tensor(4, 5, 3, 2, 1);
    CHECK(e_l2(truth, truth) == 0.0);
    SnapshotTensor zero(4, 5, 3, 2);
    CHECK(e_l2(zero, truth) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e_l2(vector_tensor({3.0, 0.0}), vector_tensor({3.0, 4.0})) ==
          doctest::Approx(0.8).epsilon(1e-15));
  }

  TEST_CASE("e_l2 is scale invariant")
  {
    const SnapshotTensor truth = random_tensor(3, 6, 4, 1, 2);
    const SnapshotTensor pred = random_tensor(3, 6, 4, 1, 3);
    const double base = e_l2(pred, truth);
    for (double g : {-3.0, 1e-4, 250.0})
    {
      SnapshotTensor p = pred;
      SnapshotTensor t = truth;
      for (auto &v : p.data())
      {
        v *= g;
      }
      for (auto &v : t.data())
      {
        v *= g;
      }
      CHECK(std::abs(e_l2(p, t) - base) <= 1e-12);
    }
  }

  TEST_CASE("zero-norm truth samples are skipped in evaluation")
  {
    const std::vector<double> truth{0.0, 0.0, 1.0, 0.0};
    const std::vector<double> pred{1.0, 0.0, 0.5, 0.0};
    const RelativeL2 r = relative_l2(pred, truth, 2, ZeroNormPolicy::Skip);
    CHECK(r.skipped == 1);
    CHECK(r.value == doctest::Approx(0.5));
    CHECK_THROWS_AS(relative_l2(pred, truth, 2, ZeroNormPolicy::Error), DataError);
  }

  TEST_CASE("mme examples")
  {
    SnapshotTensor truth(2, 2, 1, 1);
    SnapshotTensor pred(2, 2, 1, 1);
    pred(0, 1, 0, 0) = 0.2;
    pred(1, 0, 0, 0) = -0.4;
    CHECK(mme(pred, truth) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(mme(truth, truth) == 0.0);
    CHECK(mme(vector_tensor({-0.7, 0.1}), vector_tensor({0.0, 0.0})) == doctest::Approx(0.7));
    CHECK_THROWS_AS(mme(SnapshotTensor(1, 3, 1, 1), SnapshotTensor(1, 2, 1, 1)), DimensionError);
  }

  TEST_CASE("mme is positive unless exact")
  {
    const SnapshotTensor truth = random_tensor(3, 4, 4, 1, 5);
    SnapshotTensor pred = truth;
    pred(2, 3, 1, 0) += 1e-9;
    CHECK(mme(pred, truth) > 0.0);
  }

  TEST_CASE("max error distribution")
  {
    const SnapshotTensor truth = random_tensor(5, 4, 3, 1, 6);
    const SnapshotTensor pred = random_tensor(5, 4, 3, 1, 7);
    const auto d = max_error_distribution(pred, truth);
    CHECK(d.size() == 5);
    CHECK(std::is_sorted(d.begin(), d.end()));
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) / 5.0 == doctest::Approx(mme(pred, truth)));
    const auto zero = max_error_distribution(truth, truth);
    CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));
    const auto one = max_error_distribution(pred.slice(1, 1), truth.slice(1, 1));
    CHECK(one.front() == doctest::Approx(mme(pred.slice(1, 1), truth.slice(1, 1))));
  }

  TEST_CASE("error histogram")
  {
    const SnapshotTensor truth = random_tensor(3, 30, 20, 1, 8);
    HistogramSpec spec;
    spec.n_space_pts = 10;
    spec.n_time_pts = 5;
    spec.seed = 4;
    spec.max_error = 2.0;
    spec.threshold = 2.0;

    const ErrorHistogram exact = error_histogram(truth, truth, spec);
    CHECK(exact.total == 3 * 10 * 5);
    CHECK(exact.counts[0] == exact.total);

    SnapshotTensor shifted = truth;
    for (auto &v : shifted.data())
    {
      v += 1.0;
    }
    const ErrorHistogram h = error_histogram(shifted, truth, spec);
    CHECK(h.fraction_below == 1.0);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), 0L) == h.total);
    CHECK(h.edges.size() == h.counts.size() + 1);

    const SnapshotTensor pred = random_tensor(3, 30, 20, 1, 9);
    const ErrorHistogram a = error_histogram(pred, truth, spec);
    const ErrorHistogram b = error_histogram(pred, truth, spec);
    CHECK(a.counts == b.counts);
    CHECK(std::accumulate(a.counts.begin(), a.counts.end(), 0L) == a.total);

    spec.n_space_pts = 0;
    CHECK_THROWS_AS(error_histogram(pred, truth, spec), DataError);
  }

  TEST_CASE("mean and population std")
  {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const MeanStd ms = mean_std(v);
    CHECK(ms.mean == 2.5);
    CHECK(ms.std == doctest::Approx(std::sqrt(1.25)));
    CHECK(format_mean_std({0.12345, 0.01}) == "0.123 (0.010)");
  }

  TEST_CASE("report files")
  {
    const SnapshotTensor truth = random_tensor(4, 8, 6, 1, 10);
    const SnapshotTensor pred = random_tensor(4, 8, 6, 1, 11);
    HistogramSpec spec;
    spec.n_space_pts = 4;
    spec.n_time_pts = 3;
    EvalReport r = evaluate(pred, truth, spec);
    CHECK(r.e_l2.mean == doctest::Approx(e_l2(pred, truth)));
    CHECK(r.mme.mean == doctest::Approx(mme(pred, truth)));
    CHECK(r.per_sample_max_errors.size() == 4);
    r.parameter_count = 42;
    const auto dir = ronorm::testing::temp_dir("metrics_report");
    write_report(r, dir, "cafe");
    const json j = read_json(dir / "eval_report.json");
    CHECK(j.at("config_hash") == "cafe");
    CHECK(j.at("parameter_count") == 42);
    std::ifstream csv(dir / "error_histogram.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "# config_hash: cafe");
    CHECK(std::filesystem::exists(dir / "max_error_distribution.csv"));
  }
}
