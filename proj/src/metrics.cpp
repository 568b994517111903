// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

namespace ronorm
{

namespace
{

void check_same_shape(const SnapshotTensor &a, const SnapshotTensor &b)
{
  if (a.samples() != b.samples() || a.nx() != b.nx() || a.nt() != b.nt() ||
      a.channels() != b.channels())
  {
    throw DimensionError("prediction and truth shapes differ");
  }
}

std::vector<double> per_sample_max(const SnapshotTensor &pred, const SnapshotTensor &truth)
{
  check_same_shape(pred, truth);
  const std::size_t stride = truth.sample_size();
  std::vector<double> out(truth.samples(), 0.0);
  for (int i = 0; i < truth.samples(); ++i)
  {
    double m = 0.0;
    for (std::size_t j = 0; j < stride; ++j)
    {
      m = std::max(m, std::abs(pred.data()[i * stride + j] - truth.data()[i * stride + j]));
    }
    out[i] = m;
  }
  return out;
}

std::vector<int> choose_indices(int n, int count, std::mt19937_64 &rng)
{
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (count >= n)
  {
    return all;
  }
  // Partial Fisher-Yates.
  for (int i = 0; i < count; ++i)
  {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(count);
  return all;
}

}  // namespace

RelativeL2 relative_l2(std::span<const double> pred, std::span<const double> truth,
                       std::size_t sample_size, ZeroNormPolicy policy)
{
  if (pred.size() != truth.size() || sample_size == 0 || truth.size() % sample_size != 0)
  {
    throw DimensionError("relative L2: prediction and truth sizes differ");
  }
  const std::size_t n = truth.size() / sample_size;
  RelativeL2 result;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t p = 0; p < n; ++p)
  {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = p * sample_size; j < (p + 1) * sample_size; ++j)
    {
      const double r = pred[j] - truth[j];
      num += r * r;
      den += truth[j] * truth[j];
    }
    if (den == 0.0)
    {
      if (policy == ZeroNormPolicy::Error)
      {
        throw DataError("truth sample " + std::to_string(p) + " has zero norm");
      }
      ++result.skipped;
      std::cerr << "warning: relative L2 skipped zero-norm truth sample " << p << '\n';
      continue;
    }
    sum += std::sqrt(num) / std::sqrt(den);
    ++used;
  }
  result.value = used ? sum / static_cast<double>(used) : 0.0;
  return result;
}

double e_l2(const SnapshotTensor &pred, const SnapshotTensor &truth)
{
  check_same_shape(pred, truth);
  return relative_l2(pred.data(), truth.data(), truth.sample_size(), ZeroNormPolicy::Skip).value;
}

double mme(const SnapshotTensor &pred, const SnapshotTensor &truth)
{
  const auto m = per_sample_max(pred, truth);
  return std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
}

std::vector<double> max_error_distribution(const SnapshotTensor &pred, const SnapshotTensor &truth)
{
  auto m = per_sample_max(pred, truth);
  std::sort(m.begin(), m.end());
  return m;
}

ErrorHistogram error_histogram(const SnapshotTensor &pred, const SnapshotTensor &truth,
                               const HistogramSpec &spec)
{
  check_same_shape(pred, truth);
  if (spec.n_space_pts < 1 || spec.n_time_pts < 1 || spec.n_bins < 1 || !(spec.max_error > 0.0))
  {
    throw DataError("error histogram: empty point selection or bin range");
  }
  ErrorHistogram h;
  h.threshold = spec.threshold;
  h.edges.resize(spec.n_bins + 1);
  for (int b = 0; b <= spec.n_bins; ++b)
  {
    h.edges[b] = spec.max_error * b / spec.n_bins;
  }
  h.counts.assign(spec.n_bins, 0);

  std::mt19937_64 rng(spec.seed);
  long below = 0;
  for (int i = 0; i < truth.samples(); ++i)
  {
    const auto xs = choose_indices(truth.nx(), spec.n_space_pts, rng);
    const auto ts = choose_indices(truth.nt(), spec.n_time_pts, rng);
    for (int x : xs)
    {
      for (int t : ts)
      {
        for (int c = 0; c < truth.channels(); ++c)
        {
          const double e = std::abs(pred(i, x, t, c) - truth(i, x, t, c));
          int bin = static_cast<int>(e / spec.max_error * spec.n_bins);
          bin = std::clamp(bin, 0, spec.n_bins - 1);
          ++h.counts[bin];
          ++h.total;
          below += e < spec.threshold ? 1 : 0;
        }
      }
    }
  }
  if (h.total == 0)
  {
    throw DataError("error histogram: no points selected");
  }
  h.fraction_below = static_cast<double>(below) / static_cast<double>(h.total);
  return h;
}

MeanStd mean_std(std::span<const double> values)
{
  MeanStd ms;
  if (values.empty())
  {
    return ms;
  }
  ms.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double var = 0.0;
  for (double v : values)
  {
    var += (v - ms.mean) * (v - ms.mean);
  }
  ms.std = std::sqrt(var / values.size());
  return ms;
}

std::string format_mean_std(const MeanStd &ms, int decimals)
{
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.*f (%.*f)", decimals, ms.mean, decimals, ms.std);
  return buf;
}

EvalReport evaluate(const SnapshotTensor &pred, const SnapshotTensor &truth,
                    const HistogramSpec &spec)
{
  check_same_shape(pred, truth);
  EvalReport r;
  const auto l2 =
      relative_l2(pred.data(), truth.data(), truth.sample_size(), ZeroNormPolicy::Skip);
  r.e_l2 = {l2.value, 0.0};
  r.skipped_samples = l2.skipped;
  r.mme = {mme(pred, truth), 0.0};
  r.per_sample_max_errors = max_error_distribution(pred, truth);
  r.histogram = error_histogram(pred, truth, spec);
  return r;
}

json to_json(const EvalReport &r)
{
  return {{"e_l2", {{"mean", r.e_l2.mean}, {"std", r.e_l2.std}}},
          {"mme", {{"mean", r.mme.mean}, {"std", r.mme.std}}},
          {"e_l2_percent", format_mean_std({100.0 * r.e_l2.mean, 100.0 * r.e_l2.std})},
          {"mme_formatted", format_mean_std(r.mme)},
          {"skipped_samples", r.skipped_samples},
          {"per_sample_max_errors", r.per_sample_max_errors},
          {"histogram",
           {{"edges", r.histogram.edges},
            {"counts", r.histogram.counts},
            {"total", r.histogram.total},
            {"threshold", r.histogram.threshold},
            {"fraction_below", r.histogram.fraction_below}}},
          {"wall_clock_s", r.wall_clock_s},
          {"parameter_count", r.parameter_count}};
}

void write_report(const EvalReport &report, const std::filesystem::path &dir,
                  const std::string &config_hash)
{
  std::filesystem::create_directories(dir);
  json j = to_json(report);
  j["config_hash"] = config_hash;
  write_json(j, dir / "eval_report.json");

  std::ofstream hist(dir / "error_histogram.csv");
  hist << "# config_hash: " << config_hash << '\n' << "bin_lo,bin_hi,count\n";
  hist.precision(17);
  for (std::size_t b = 0; b < report.histogram.counts.size(); ++b)
  {
    hist << report.histogram.edges[b] << ',' << report.histogram.edges[b + 1] << ','
         << report.histogram.counts[b] << '\n';
  }
  std::ofstream dist(dir / "max_error_distribution.csv");
  dist << "# config_hash: " << config_hash << '\n' << "rank,max_abs_error\n";
  dist.precision(17);
  for (std::size_t i = 0; i < report.per_sample_max_errors.size(); ++i)
  {
    dist << i << ',' << report.per_sample_max_errors[i] << '\n';
  }
}

}  // namespace ronorm
