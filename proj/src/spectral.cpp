// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ronorm/hash.hpp"
#include "ronorm/io.hpp"

namespace ronorm
{

std::string to_string(BasisKind kind)
{
  switch (kind)
  {
    case BasisKind::Lbo:
      return "lbo";
    case BasisKind::Fourier:
      return "fourier";
    case BasisKind::Pod:
      return "pod";
  }
  return "unknown";
}

BasisKind basis_kind_from_string(const std::string &s)
{
  if (s == "lbo")
  {
    return BasisKind::Lbo;
  }
  if (s == "fourier")
  {
    return BasisKind::Fourier;
  }
  if (s == "pod")
  {
    return BasisKind::Pod;
  }
  throw DataError("unknown basis kind '" + s + "'");
}

std::string EigenBasis::id() const
{
  Fnv1a h;
  h.update(to_string(kind));
  h.update_value(static_cast<std::int64_t>(vectors.rows()));
  h.update_value(static_cast<std::int64_t>(vectors.cols()));
  h.update(std::span<const double>(vectors.data(), static_cast<std::size_t>(vectors.size())));
  h.update(std::span<const double>(weights.data(), static_cast<std::size_t>(weights.size())));
  return to_string(kind) + ":" + to_hex(h.digest());
}

EigenBasis EigenBasis::truncated(int k) const
{
  if (k < 1 || k > size())
  {
    throw DimensionError("cannot truncate a " + std::to_string(size()) + "-column basis to " +
                         std::to_string(k));
  }
  EigenBasis out = *this;
  out.vectors = vectors.leftCols(k);
  out.values = values.head(k);
  return out;
}

Eigen::MatrixXd EigenBasis::gram() const
{
  return vectors.transpose() * weights.asDiagonal() * vectors;
}

void normalize_signs(Eigen::MatrixXd &vectors)
{
  for (Eigen::Index j = 0; j < vectors.cols(); ++j)
  {
    for (Eigen::Index i = 0; i < vectors.rows(); ++i)
    {
      if (std::abs(vectors(i, j)) > 1e-10)
      {
        if (vectors(i, j) < 0.0)
        {
          vectors.col(j) *= -1.0;
        }
        break;
      }
    }
  }
}

EigenBasis compute_lbo_basis(const SparseSymMatrix &stiffness, const Eigen::VectorXd &lumped_mass,
                             int k)
{
  const int n = stiffness.n;
  if (lumped_mass.size() != n)
  {
    throw DimensionError("lumped mass length does not match stiffness dimension");
  }
  if (k < 1 || k > n)
  {
    throw DimensionError("requested " + std::to_string(k) + " LBO modes from a " +
                         std::to_string(n) + "-point mesh");
  }
  if ((lumped_mass.array() <= 0.0).any())
  {
    throw NumericsError("lumped mass must be strictly positive");
  }

  const Eigen::VectorXd inv_sqrt_m = lumped_mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd B = inv_sqrt_m.asDiagonal() * stiffness.to_dense() * inv_sqrt_m.asDiagonal();
  // Exact symmetry so the tridiagonal reduction sees a symmetric input.
  B = 0.5 * (B + B.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
  if (solver.info() != Eigen::Success)
  {
    throw NumericsError("symmetric eigensolver did not converge");
  }

  Eigen::MatrixXd phi = inv_sqrt_m.asDiagonal() * solver.eigenvectors();
  Eigen::VectorXd lambda = solver.eigenvalues();
  normalize_signs(phi);

  // Eigenvalues come out ascending; inside a numerically repeated cluster the
  // columns are ordered lexicographically so the result does not depend on
  // the solver's arbitrary choice of eigenspace basis ordering.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  int start = 0;
  while (start < n)
  {
    int stop = start + 1;
    while (stop < n && lambda(stop) - lambda(start) <= 1e-10 * scale)
    {
      ++stop;
    }
    if (stop - start > 1)
    {
      std::sort(order.begin() + start, order.begin() + stop, [&](int a, int b) {
        for (int i = 0; i < n; ++i)
        {
          const double da = phi(i, a);
          const double db = phi(i, b);
          if (std::abs(da - db) > 1e-12)
          {
            return da < db;
          }
        }
        return a < b;
      });
    }
    start = stop;
  }

  EigenBasis basis;
  basis.kind = BasisKind::Lbo;
  basis.vectors.resize(n, k);
  basis.values.resize(k);
  for (int j = 0; j < k; ++j)
  {
    basis.vectors.col(j) = phi.col(order[j]);
    basis.values(j) = std::max(0.0, lambda(order[j]));
  }
  basis.weights = lumped_mass;
  return basis;
}

EigenBasis fourier_time_basis(int n_t, int k, double period)
{
  if (n_t < 1 || k < 1 || k > n_t)
  {
    throw DimensionError("fourier basis needs 1 <= k <= n_t (got k=" + std::to_string(k) +
                         ", n_t=" + std::to_string(n_t) + ")");
  }
  if (!(period > 0.0))
  {
    throw DimensionError("fourier basis period must be positive");
  }
  EigenBasis basis;
  basis.kind = BasisKind::Fourier;
  basis.vectors.resize(n_t, k);
  basis.values.resize(k);
  basis.weights = Eigen::VectorXd::Constant(n_t, 1.0 / n_t);

  const double two_pi = 2.0 * std::numbers::pi;
  for (int col = 0; col < k; ++col)
  {
    const int freq = (col + 1) / 2;
    const bool is_cos = col == 0 || col % 2 == 1;
    const bool nyquist = 2 * freq == n_t;
    const double norm = (col == 0 || nyquist) ? 1.0 : std::sqrt(2.0);
    for (int p = 0; p < n_t; ++p)
    {
      const double arg = two_pi * freq * p / n_t;
      basis.vectors(p, col) = norm * (is_cos ? std::cos(arg) : std::sin(arg));
    }
    const double omega = two_pi * freq / period;
    basis.values(col) = omega * omega;
  }
  normalize_signs(basis.vectors);
  return basis;
}

Eigen::MatrixXd project(const Eigen::Ref<const Eigen::MatrixXd> &field, const EigenBasis &basis)
{
  if (field.rows() != basis.num_points())
  {
    throw DimensionError("project: field has " + std::to_string(field.rows()) +
                         " points, basis has " + std::to_string(basis.num_points()));
  }
  return basis.vectors.transpose() * (basis.weights.asDiagonal() * field);
}

Eigen::MatrixXd reconstruct(const Eigen::Ref<const Eigen::MatrixXd> &coefficients,
                            const EigenBasis &basis)
{
  if (coefficients.rows() != basis.size())
  {
    throw DimensionError("reconstruct: " + std::to_string(coefficients.rows()) +
                         " coefficient rows for a " + std::to_string(basis.size()) +
                         "-column basis");
  }
  return basis.vectors * coefficients;
}

void save_basis(const EigenBasis &basis, const std::filesystem::path &path)
{
  BlobFile file;
  file.header = {{"kind", to_string(basis.kind)},
                 {"k", basis.size()},
                 {"n_points", basis.num_points()},
                 {"checksum", basis.source_checksum}};
  file.add("vectors", std::span<const double>(basis.vectors.data(), basis.vectors.size()));
  file.add("values", std::span<const double>(basis.values.data(), basis.values.size()));
  file.add("weights", std::span<const double>(basis.weights.data(), basis.weights.size()));
  write_blob_file(file, path);
}

EigenBasis load_basis(const std::filesystem::path &path)
{
  const BlobFile file = read_blob_file(path);
  EigenBasis basis;
  try
  {
    basis.kind = basis_kind_from_string(file.header.at("kind").get<std::string>());
    const int k = file.header.at("k").get<int>();
    const int n = file.header.at("n_points").get<int>();
    basis.source_checksum = file.header.value("checksum", "");
    const auto &vec = file.blob("vectors");
    const auto &val = file.blob("values");
    const auto &w = file.blob("weights");
    if (vec.size() != static_cast<std::size_t>(n) * k || val.size() != static_cast<std::size_t>(k) ||
        w.size() != static_cast<std::size_t>(n))
    {
      throw DataError("basis blob sizes disagree with header in " + path.string());
    }
    basis.vectors = Eigen::Map<const Eigen::MatrixXd>(vec.data(), n, k);
    basis.values = Eigen::Map<const Eigen::VectorXd>(val.data(), k);
    basis.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
  }
  catch (const json::exception &e)
  {
    throw DataError("bad basis header in " + path.string() + ": " + e.what());
  }
  return basis;
}

}  // namespace ronorm
