// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "ronorm/spectral.hpp"

using namespace ronorm;
using ronorm::testing::data_dir;

namespace
{

const MeshOperators &plate_ops()
{
  static const MeshOperators ops = assemble_operators(load_mesh(data_dir() / "meshes" / "l_plate.msh"));
  return ops;
}

double max_orthonormality_error(const EigenBasis &b)
{
  return (b.gram() - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("spectral")
{
  TEST_CASE("lbo eigenpairs satisfy the generalized problem")
  {
    const auto &ops = plate_ops();
    const EigenBasis b = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 40);
    CHECK(b.kind == BasisKind::Lbo);
    CHECK(b.size() == 40);
    const Eigen::MatrixXd L = ops.stiffness.to_dense();
    for (int i = 0; i < b.size(); ++i)
    {
      const Eigen::VectorXd r =
          L * b.vectors.col(i) - b.values[i] * ops.lumped_mass.cwiseProduct(b.vectors.col(i));
      CHECK(r.cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + b.values[i]));
      if (i > 0)
      {
        CHECK(b.values[i] >= b.values[i - 1]);
      }
    }
    CHECK(b.values[0] <= 1e-9);
    CHECK(max_orthonormality_error(b) <= 1e-8);
  }

  TEST_CASE("lbo eigenvalues match a generalized dense solver")
  {
    const auto &ops = plate_ops();
    const EigenBasis b = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 20);
    const Eigen::MatrixXd M = ops.lumped_mass.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> oracle(ops.stiffness.to_dense(), M);
    for (int i = 1; i < 20; ++i)
    {
      CHECK(b.values[i] == doctest::Approx(oracle.eigenvalues()[i]).epsilon(1e-9));
    }
  }

  TEST_CASE("constant mode")
  {
    const auto &ops = plate_ops();
    const EigenBasis b = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 1);
    const Eigen::VectorXd phi = b.vectors.col(0);
    CHECK(phi.maxCoeff() - phi.minCoeff() <= 1e-9);
    CHECK(phi[0] > 0);
    CHECK(phi[0] * phi[0] * ops.lumped_mass.sum() == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("thin strip reproduces the continuum Neumann eigenvalue pi^2")
  {
    const TriMesh strip = ronorm::testing::grid_mesh(101, 2, 1.0, 0.01);
    const MeshOperators ops = assemble_operators(strip);
    const EigenBasis b = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 3);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(std::abs(b.values[1] - pi2) / pi2 <= 0.02);
    CHECK(std::abs(b.values[2] - 4 * pi2) / (4 * pi2) <= 0.02);
  }

  TEST_CASE("sign convention and determinism")
  {
    const TriMesh square = ronorm::testing::grid_mesh(9, 9, 1.0, 1.0);
    const MeshOperators ops = assemble_operators(square);
    // The square has repeated eigenvalues; the result must still be deterministic.
    const EigenBasis a = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 12);
    const EigenBasis b = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 12);
    CHECK(a.vectors == b.vectors);
    CHECK(a.values == b.values);
    CHECK(a.id() == b.id());
    CHECK(max_orthonormality_error(a) <= 1e-8);
    for (int j = 0; j < a.size(); ++j)
    {
      for (int i = 0; i < a.num_points(); ++i)
      {
        if (std::abs(a.vectors(i, j)) > 1e-10)
        {
          CHECK(a.vectors(i, j) > 0);
          break;
        }
      }
    }
  }

  TEST_CASE("lbo errors")
  {
    const auto &ops = plate_ops();
    CHECK_THROWS_AS(compute_lbo_basis(ops.stiffness, ops.lumped_mass, 0), Error);
    CHECK_THROWS_AS(compute_lbo_basis(ops.stiffness, ops.lumped_mass, ops.stiffness.n + 1), Error);
    Eigen::VectorXd bad = ops.lumped_mass;
    bad[3] = 0.0;
    CHECK_THROWS_AS(compute_lbo_basis(ops.stiffness, bad, 4), Error);
  }

  TEST_CASE("fourier basis")
  {
    const EigenBasis one = fourier_time_basis(100, 1);
    CHECK(one.vectors.cwiseAbs().minCoeff() == doctest::Approx(1.0));
    CHECK(one.vectors.maxCoeff() == doctest::Approx(1.0));

    const EigenBasis full = fourier_time_basis(100, 100);
    CHECK(max_orthonormality_error(full) <= 1e-10);
    for (int i = 1; i < full.size(); ++i)
    {
      CHECK(full.values[i] >= full.values[i - 1]);
    }

    const EigenBasis five = fourier_time_basis(100, 5, 2.0);
    Eigen::MatrixXd f(100, 1);
    for (int t = 0; t < 100; ++t)
    {
      f(t, 0) = std::cos(2.0 * std::numbers::pi * (2.0 * t / 100) / 2.0);
    }
    const Eigen::MatrixXd c = project(f, five);
    // Column 1 is the frequency-1 cosine, normalized by sqrt(2).
    CHECK(c(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    for (int k : {0, 2, 3, 4})
    {
      CHECK(std::abs(c(k, 0)) <= 1e-12);
    }
    const double w1 = 2.0 * std::numbers::pi / 2.0;
    CHECK(five.values[1] == doctest::Approx(w1 * w1));
    CHECK(five.values[2] == doctest::Approx(w1 * w1));
    CHECK_THROWS_AS(fourier_time_basis(10, 11), Error);
  }

  TEST_CASE("project and reconstruct")
  {
    const auto &ops = plate_ops();
    const int n = ops.stiffness.n;
    const EigenBasis full = compute_lbo_basis(ops.stiffness, ops.lumped_mass, n);

    CHECK((project(full.vectors.col(3), full) - Eigen::VectorXd::Unit(n, 3)).cwiseAbs().maxCoeff() <=
          1e-8);
    CHECK(project(Eigen::MatrixXd::Zero(n, 2), full).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(11);
    const Eigen::MatrixXd f = ronorm::testing::random_matrix(n, 2, rng);
    const Eigen::MatrixXd c = project(f, full);
    // Coefficients of a complete basis solve Phi c = f.
    const Eigen::MatrixXd c_oracle = full.vectors.partialPivLu().solve(f);
    CHECK((c - c_oracle).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((reconstruct(c, full) - f).cwiseAbs().maxCoeff() <= 1e-8);

    const Eigen::MatrixXd e1 = reconstruct(Eigen::VectorXd::Unit(n, 0), full);
    CHECK(e1.maxCoeff() - e1.minCoeff() <= 1e-9);
    CHECK(reconstruct(Eigen::MatrixXd::Zero(n, 1), full).cwiseAbs().maxCoeff() == 0.0);

    const EigenBasis part = full.truncated(25);
    const Eigen::MatrixXd coeffs = ronorm::testing::random_matrix(25, 3, rng);
    CHECK((project(reconstruct(coeffs, part), part) - coeffs).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("truncation error is non-increasing in k")
  {
    const auto &ops = plate_ops();
    const EigenBasis full = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 60);
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd f = ronorm::testing::random_matrix(ops.stiffness.n, 1, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 60; k += 3)
    {
      const EigenBasis b = full.truncated(k);
      const Eigen::VectorXd r = f - reconstruct(project(f, b), b);
      const double err = r.cwiseAbs2().dot(ops.lumped_mass);
      CHECK(err <= prev + 1e-12);
      prev = err;
    }
  }

  TEST_CASE("dimension mismatch is reported")
  {
    const EigenBasis b = fourier_time_basis(10, 4);
    CHECK_THROWS_AS(project(Eigen::MatrixXd::Zero(9, 1), b), DimensionError);
    CHECK_THROWS_AS(reconstruct(Eigen::MatrixXd::Zero(3, 1), b), DimensionError);
  }

  TEST_CASE("basis cache round trip")
  {
    const auto &ops = plate_ops();
    const EigenBasis b = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 8);
    const auto dir = ronorm::testing::temp_dir("basis_cache");
    save_basis(b, dir / "lbo.basis");
    const EigenBasis back = load_basis(dir / "lbo.basis");
    CHECK(back.kind == b.kind);
    CHECK(back.vectors == b.vectors);
    CHECK(back.values == b.values);
    CHECK(back.weights == b.weights);
    CHECK(back.id() == b.id());
    CHECK(b.truncated(7).id() != b.id());
  }
}
