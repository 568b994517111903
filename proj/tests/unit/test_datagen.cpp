// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "helpers.hpp"
#include "ronorm/datagen.hpp"

using namespace ronorm;
using ronorm::testing::data_dir;

namespace
{

const TriMesh &plate()
{
  static const TriMesh m = load_mesh(data_dir() / "meshes" / "l_plate.msh");
  return m;
}

const MeshOperators &plate_ops()
{
  static const MeshOperators ops = assemble_operators(plate());
  return ops;
}

const EigenBasis &plate_basis()
{
  static const EigenBasis b = compute_lbo_basis(plate_ops().stiffness, plate_ops().lumped_mass, 12);
  return b;
}

std::string slurp(const std::filesystem::path &p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double m_norm(const MeshOperators &ops, const Eigen::VectorXd &v)
{
  return std::sqrt(v.cwiseAbs2().dot(ops.lumped_mass));
}

}  // namespace

TEST_SUITE("datagen")
{
  TEST_CASE("grf from zero noise is zero")
  {
    GrfSpec spec;
    const std::vector<double> zeros(plate_basis().size(), 0.0);
    CHECK(grf_from_noise(plate_basis(), spec, zeros).cwiseAbs().maxCoeff() == 0.0);
    const std::vector<double> short_noise(3, 1.0);
    CHECK_THROWS_AS(grf_from_noise(plate_basis(), spec, short_noise), DimensionError);
  }

  TEST_CASE("grf coefficient variance")
  {
    const EigenBasis &b = plate_basis();
    GrfSpec spec;
    spec.alpha = 1.5;
    spec.tau = 2.0;
    const int draws = 10000;
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(b.size());
    for (int s = 0; s < draws; ++s)
    {
      spec.seed = static_cast<std::uint64_t>(s);
      const Eigen::VectorXd c = project(sample_grf(b, spec), b);
      sq += c.cwiseAbs2();
    }
    for (int k = 0; k < b.size(); ++k)
    {
      const double expected = std::pow(b.values[k] + spec.tau * spec.tau, -spec.alpha);
      INFO("mode " << k);
      CHECK(std::abs(sq[k] / draws - expected) <= 0.05 * expected);
    }
  }

  TEST_CASE("smoother fields put less energy in high modes")
  {
    const EigenBasis &b = plate_basis();
    auto high_fraction = [&](double alpha)
    {
      GrfSpec spec;
      spec.alpha = alpha;
      spec.tau = 1.0;
      double total = 0.0;
      for (int s = 0; s < 100; ++s)
      {
        spec.seed = 500 + s;
        const Eigen::VectorXd c = project(sample_grf(b, spec), b);
        total += c.tail(6).squaredNorm() / c.squaredNorm();
      }
      return total / 100;
    };
    CHECK(high_fraction(3.0) < high_fraction(1.0));
  }

  TEST_CASE("grf options")
  {
    GrfSpec spec;
    spec.zero_mean = true;
    spec.amplitude = 2.0;
    spec.n_modes = 5;
    const Eigen::VectorXd s = grf_std(plate_basis(), spec);
    CHECK(s.size() == 5);
    CHECK(s[0] == 0.0);
    CHECK(s[1] == doctest::Approx(2.0 * std::pow(plate_basis().values[1] + 9.0, -1.5)));
    const Eigen::VectorXd f = sample_grf(plate_basis(), spec);
    CHECK(std::abs(f.dot(plate_ops().lumped_mass)) <= 1e-10);
    spec.n_modes = 99;
    CHECK_THROWS_AS(sample_grf(plate_basis(), spec), ConfigError);
    GrfSpec bad;
    bad.alpha = -1.0;
    CHECK_THROWS_AS(bad.validate(4), ConfigError);
  }

  TEST_CASE("heat: constant field is an equilibrium")
  {
    PdeRun run{0.01, 40, 1.0};
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(plate_ops().stiffness.n, 2.5);
    const Eigen::MatrixXd T = solve_heat(plate_ops(), c, {}, run);
    CHECK(T.cols() == 40);
    CHECK((T.array() - 2.5).abs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("heat: mass is conserved without sources")
  {
    PdeRun run{0.005, 60, 0.7};
    GrfSpec spec;
    spec.seed = 4;
    const Eigen::VectorXd ic = sample_grf(plate_basis(), spec);
    const Eigen::MatrixXd T = solve_heat(plate_ops(), ic, {}, run);
    const double m0 = ic.dot(plate_ops().lumped_mass);
    for (int n = 0; n < T.cols(); ++n)
    {
      CHECK(std::abs(T.col(n).dot(plate_ops().lumped_mass) - m0) <= 1e-8);
    }
  }

  TEST_CASE("heat: eigenfunction decays at the implicit Euler rate")
  {
    PdeRun run{0.002, 30, 1.3};
    const EigenBasis &b = plate_basis();
    for (int k : {1, 4, 9})
    {
      const Eigen::MatrixXd T = solve_heat(plate_ops(), b.vectors.col(k), {}, run);
      const double factor = 1.0 / (1.0 + run.dt * run.coefficient * b.values[k]);
      for (int n = 0; n < run.n_t; ++n)
      {
        const Eigen::VectorXd expected = std::pow(factor, n + 1) * b.vectors.col(k);
        CHECK((T.col(n) - expected).cwiseAbs().maxCoeff() <= 1e-8);
      }
    }
  }

  TEST_CASE("heat: maximum bound with sources")
  {
    std::mt19937_64 rng(9);
    const int n = plate_ops().stiffness.n;
    const Eigen::VectorXd ic = ronorm::testing::random_matrix(n, 1, rng);
    for (double dt : {1e-4, 1e-2, 1.0})
    {
      PdeRun run{dt, 20, 1.0};
      const Eigen::MatrixXd s = ronorm::testing::random_matrix(n, 20, rng);
      const Eigen::MatrixXd T = solve_heat(plate_ops(), ic, s, run);
      double bound = ic.cwiseAbs().maxCoeff();
      for (int step = 0; step < 20; ++step)
      {
        bound += dt * s.col(step).cwiseAbs().maxCoeff();
        CHECK(T.col(step).cwiseAbs().maxCoeff() <= bound + 1e-12);
      }
    }
    CHECK_THROWS_AS(solve_heat(plate_ops(), Eigen::VectorXd::Zero(3), {}, PdeRun{}), DimensionError);
  }

  TEST_CASE("wave: zero source gives zero")
  {
    const PdeRun run{0.05, 100, 0.1};
    const std::vector<double> signal(100, 0.0);
    const Eigen::MatrixXd u = solve_wave(plate_ops(), center_node(plate()), signal, run);
    CHECK(u.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("wave: energy drift over 500 steps")
  {
    const PdeRun run{0.05, 500, 0.1};
    GrfSpec spec;
    spec.seed = 2;
    for (const Eigen::VectorXd &u0 :
         {Eigen::VectorXd(plate_basis().vectors.col(5)), sample_grf(plate_basis(), spec)})
    {
      const Eigen::MatrixXd u = solve_wave_general(plate_ops(), u0, {}, run);
      const double e0 = wave_energy(plate_ops(), u0, u.col(0), run);
      double drift = 0.0;
      for (int n = 0; n + 1 < run.n_t; ++n)
      {
        drift = std::max(drift, std::abs(wave_energy(plate_ops(), u.col(n), u.col(n + 1), run) - e0));
      }
      CHECK(e0 > 0.0);
      CHECK(drift / e0 < 0.01);
    }
  }

  TEST_CASE("wave: superposition")
  {
    const PdeRun run{0.05, 80, 0.1};
    std::vector<double> s1(80);
    std::vector<double> s2(80);
    std::vector<double> sum(80);
    for (int t = 0; t < 80; ++t)
    {
      s1[t] = std::sin(0.3 * t);
      s2[t] = 0.5 * std::cos(0.11 * t * t);
      sum[t] = s1[t] + s2[t];
    }
    const int node = center_node(plate());
    const Eigen::MatrixXd u1 = solve_wave(plate_ops(), node, s1, run);
    const Eigen::MatrixXd u2 = solve_wave(plate_ops(), node, s2, run);
    const Eigen::MatrixXd u12 = solve_wave(plate_ops(), node, sum, run);
    CHECK((u12 - u1 - u2).cwiseAbs().maxCoeff() <= 1e-9);
  }

  TEST_CASE("wave: second order in time")
  {
    const EigenBasis &b = plate_basis();
    const Eigen::VectorXd u0 = b.vectors.col(3);
    const double t_end = 4.0;
    auto final_state = [&](double dt)
    {
      const int steps = static_cast<int>(std::lround(t_end / dt));
      return Eigen::VectorXd(solve_wave_general(plate_ops(), u0, {}, PdeRun{dt, steps, 0.1}).col(steps - 1));
    };
    const double dt = 0.04;
    const Eigen::VectorXd ref = final_state(dt / 8);
    const double e1 = m_norm(plate_ops(), final_state(dt) - ref);
    const double e2 = m_norm(plate_ops(), final_state(dt / 2) - ref);
    const double ratio = e1 / e2;
    MESSAGE("refinement ratio " << ratio);
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
  }

  TEST_CASE("wave: unstable step is rejected")
  {
    const double lmax = estimate_lambda_max(plate_ops());
    CHECK(lmax > 100.0);
    const double limit = 2.0 / std::sqrt(0.1 * lmax);
    CHECK_NOTHROW(check_wave_stability(plate_ops(), PdeRun{0.5 * limit, 10, 0.1}));
    CHECK_THROWS_AS(check_wave_stability(plate_ops(), PdeRun{1.5 * limit, 10, 0.1}), NumericsError);
    const std::vector<double> signal(10, 1.0);
    CHECK_THROWS_AS(solve_wave(plate_ops(), 0, signal, PdeRun{1.5 * limit, 10, 0.1}), NumericsError);
  }

  TEST_CASE("smoke dataset on the triangle mesh")
  {
    const TriMesh tri = load_mesh(data_dir() / "meshes" / "triangle.msh");
    const MeshOperators ops = assemble_operators(tri);
    DatasetSpec spec = default_dataset_spec(DataCase::HeatIc);
    spec.n_train = 2;
    spec.n_test = 1;
    spec.mesh_path = "triangle.msh";
    const DatasetPair pair = build_dataset(spec, tri, ops);
    const auto dir = ronorm::testing::temp_dir("datagen_smoke");
    write_dataset_pair(pair, spec, tri, dir);
    for (const auto *f : {"header.json", "a.bin", "u.bin"})
    {
      CHECK(std::filesystem::exists(dir / "train" / f));
      CHECK(std::filesystem::exists(dir / "test" / f));
    }
    json h;
    const Dataset train = read_dataset(dir / "train", &h);
    CHECK(h.at("N") == 2);
    CHECK(h.at("n_x") == 3);
    CHECK(h.at("n_t") == spec.run.n_t);
    CHECK(h.at("split") == "train");
    CHECK(h.at("mapping_kind") == "increase_from_space");
    CHECK(read_dataset(dir / "test").a.samples() == 1);
    CHECK(train.u.data() == pair.train.u.data());
    CHECK(std::filesystem::file_size(dir / "train" / "u.bin") == 2u * 3u * spec.run.n_t * 8u);
  }

  TEST_CASE("same seed gives identical files")
  {
    DatasetSpec spec = default_dataset_spec(DataCase::HeatLayout);
    spec.n_train = 3;
    spec.n_test = 2;
    spec.seed = 17;
    const auto d1 = ronorm::testing::temp_dir("datagen_seed1");
    const auto d2 = ronorm::testing::temp_dir("datagen_seed2");
    write_dataset_pair(build_dataset(spec, plate(), plate_ops()), spec, plate(), d1);
    write_dataset_pair(build_dataset(spec, plate(), plate_ops()), spec, plate(), d2);
    for (const auto *split : {"train", "test"})
    {
      for (const auto *f : {"header.json", "a.bin", "u.bin"})
      {
        CHECK(slurp(d1 / split / f) == slurp(d2 / split / f));
      }
    }
    spec.seed = 18;
    const DatasetPair other = build_dataset(spec, plate(), plate_ops());
    CHECK(other.train.a.data() != read_dataset(d1 / "train").a.data());
  }

  TEST_CASE("samples depend only on their own index")
  {
    DatasetSpec spec = default_dataset_spec(DataCase::WaveForward);
    spec.seed = 3;
    const Dataset all = generate_samples(spec, plate(), plate_ops(), "train", 0, 4);
    const Dataset tail = generate_samples(spec, plate(), plate_ops(), "train", 2, 2);
    CHECK(all.a.slice(2, 2).data() == tail.a.data());
    CHECK(all.u.slice(2, 2).data() == tail.u.data());
    const Dataset test = generate_samples(spec, plate(), plate_ops(), "test", 0, 1);
    CHECK(test.a.slice(0, 1).data() != all.a.slice(0, 1).data());
  }

  TEST_CASE("every case regenerates from its stored inputs")
  {
    for (DataCase c : {DataCase::HeatIc, DataCase::HeatLayout, DataCase::WaveForward,
                       DataCase::WaveInverse, DataCase::HeatToFinal})
    {
      DatasetSpec spec = default_dataset_spec(c);
      spec.n_train = 3;
      spec.n_test = 1;
      spec.seed = 5;
      const DatasetPair pair = build_dataset(spec, plate(), plate_ops());
      INFO(to_string(c));
      CHECK(pair.train.kind == mapping_kind_for(c));
      pair.train.check();
      CHECK(pair.train.u.data() != std::vector<double>(pair.train.u.data().size(), 0.0));
      CHECK(regeneration_error(pair.train, spec, plate(), plate_ops()) <= 1e-9);
      CHECK(regeneration_error(pair.test, spec, plate(), plate_ops()) <= 1e-9);
    }
  }

  TEST_CASE("dataset spec json and errors")
  {
    DatasetSpec spec = default_dataset_spec(DataCase::WaveInverse);
    spec.n_train = 7;
    spec.mesh_path = "m.msh";
    const DatasetSpec back = dataset_spec_from_json(to_json(spec));
    CHECK(to_json(back) == to_json(spec));
    CHECK(back.data_case == DataCase::WaveInverse);
    CHECK_THROWS_AS(dataset_spec_from_json(json{{"n_train", 3}}), ConfigError);
    CHECK_THROWS_AS(data_case_from_string("burgers"), ConfigError);
    CHECK_THROWS_AS(read_dataset("/nonexistent/dataset"), DataError);

    const auto dir = ronorm::testing::temp_dir("datagen_truncated");
    DatasetSpec small = default_dataset_spec(DataCase::HeatIc);
    small.n_train = 2;
    small.n_test = 1;
    write_dataset_pair(build_dataset(small, plate(), plate_ops()), small, plate(), dir);
    std::filesystem::resize_file(dir / "train" / "u.bin", 16);
    CHECK_THROWS_AS(read_dataset(dir / "train"), DataError);
  }
}
