// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "ronorm/mesh.hpp"

namespace ronorm
{

enum class BasisKind
{
  Lbo,
  Fourier,
  Pod,
};

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string &s);

/// Ordered basis sampled at grid points, orthonormal under
/// <f, g> = sum_p weights_p f_p g_p.
///
/// `values` are eigenvalues (ascending) for lbo/fourier and singular values
/// (descending) for pod. The first entry of each column with magnitude above
/// 1e-10 is positive.
struct EigenBasis
{
  BasisKind kind = BasisKind::Lbo;
  Eigen::MatrixXd vectors;  // n_points x k
  Eigen::VectorXd values;   // k
  Eigen::VectorXd weights;  // n_points
  /// Content checksum of the source mesh or data, for cache files.
  std::string source_checksum;

  int num_points() const { return static_cast<int>(vectors.rows()); }
  int size() const { return static_cast<int>(vectors.cols()); }

  /// Stable identifier derived from the kind and the basis content.
  std::string id() const;

  /// Leading `k` columns (and values) of this basis.
  EigenBasis truncated(int k) const;

  /// Gram matrix Phi^T diag(w) Phi.
  Eigen::MatrixXd gram() const;
};

/// Solves L phi = lambda M phi for the k smallest eigenpairs with the dense
/// symmetric solver applied to M^{-1/2} L M^{-1/2}.
EigenBasis compute_lbo_basis(const SparseSymMatrix &stiffness, const Eigen::VectorXd &lumped_mass,
                             int k);

/// Real Fourier family on n_t uniform samples of [0, period): constant, then
/// (cos, sin) pairs of increasing frequency; orthonormal under weights 1/n_t.
EigenBasis fourier_time_basis(int n_t, int k, double period = 1.0);

/// Coefficients (k x c) of `field` (n_points x c) under the basis inner product.
Eigen::MatrixXd project(const Eigen::Ref<const Eigen::MatrixXd> &field, const EigenBasis &basis);

/// Field (n_points x c) = sum_i coefficients(i, :) phi_i.
Eigen::MatrixXd reconstruct(const Eigen::Ref<const Eigen::MatrixXd> &coefficients,
                            const EigenBasis &basis);

/// Flips column signs so the first entry with |v| > 1e-10 is positive.
void normalize_signs(Eigen::MatrixXd &vectors);

void save_basis(const EigenBasis &basis, const std::filesystem::path &path);
EigenBasis load_basis(const std::filesystem::path &path);

}  // namespace ronorm
