// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ronorm/spectral.hpp"

namespace ronorm
{

enum class Axis
{
  Space,
  Time,
};

std::string to_string(Axis axis);
Axis axis_from_string(const std::string &s);

/// Sampled function dataset, row-major N x n_x x n_t x channels.
/// Purely spatial data has n_t = 1, purely temporal data has n_x = 1.
class SnapshotTensor
{
public:
  SnapshotTensor() = default;
  SnapshotTensor(int n_samples, int n_x, int n_t, int channels, double dt = 1.0);

  int samples() const { return n_samples_; }
  int nx() const { return n_x_; }
  int nt() const { return n_t_; }
  int channels() const { return channels_; }
  double dt() const { return dt_; }
  void set_dt(double dt) { dt_ = dt; }

  std::size_t index(int i, int x, int t, int c) const
  {
    return ((static_cast<std::size_t>(i) * n_x_ + x) * n_t_ + t) * channels_ + c;
  }
  double &operator()(int i, int x, int t, int c) { return data_[index(i, x, t, c)]; }
  double operator()(int i, int x, int t, int c) const { return data_[index(i, x, t, c)]; }

  std::vector<double> &data() { return data_; }
  const std::vector<double> &data() const { return data_; }
  std::size_t sample_size() const
  {
    return static_cast<std::size_t>(n_x_) * n_t_ * channels_;
  }

  /// Sample `i` with one row per point of `row_axis` and columns
  /// (channel, other-axis index) in channel-major order: c * n_other + j.
  Eigen::MatrixXd axis_matrix(int i, Axis row_axis) const;
  void set_axis_matrix(int i, Axis row_axis, const Eigen::Ref<const Eigen::MatrixXd> &m);

  /// Samples [begin, begin + count) as a new tensor.
  SnapshotTensor slice(int begin, int count) const;

  /// Throws DataError on non-finite entries or empty dimensions.
  void validate() const;

  static inline const std::array<std::string, 4> axis_labels{"sample", "space", "time",
                                                             "channel"};

private:
  int n_samples_ = 0;
  int n_x_ = 0;
  int n_t_ = 0;
  int channels_ = 0;
  double dt_ = 1.0;
  std::vector<double> data_;
};

/// Basis coefficients of every trajectory along the reduced axis:
/// N x n_pts x (d * channels), channel-major (coefficient c * d + k).
struct WeightField
{
  int n_samples = 0;
  int n_pts = 0;
  int width = 0;  // d * channels
  Axis reduced_axis = Axis::Time;
  std::string basis_ref;
  double dt = 1.0;
  std::vector<double> data;

  double &operator()(int i, int p, int j)
  {
    return data[(static_cast<std::size_t>(i) * n_pts + p) * width + j];
  }
  double operator()(int i, int p, int j) const
  {
    return data[(static_cast<std::size_t>(i) * n_pts + p) * width + j];
  }

  /// Sample `i` as an n_pts x width matrix.
  Eigen::MatrixXd sample_matrix(int i) const;
};

/// Non-centred POD along `reduce_axis`: eigenvectors of the trajectory Gram
/// matrix, returned with singular values (descending) and unit weights.
EigenBasis compute_pod_basis(const SnapshotTensor &snapshots, Axis reduce_axis, int k);

/// Smallest d whose leading singular values carry at least `threshold` of the
/// total energy sum(values^2).
int energy_truncation(const Eigen::Ref<const Eigen::VectorXd> &values, double threshold);

WeightField encode_unequal(const SnapshotTensor &snapshots, const EigenBasis &basis,
                           Axis reduce_axis);
SnapshotTensor decode_unequal(const WeightField &weights, const EigenBasis &basis);

/// Per-sample decode operator: for a network output on the kept axis of shape
/// n_pts x (d * channels), right-multiplying by this (d*channels) x
/// (n_axis * channels) block matrix yields the trajectories laid out as
/// n_pts x (n_axis * channels) with channel-major columns.
Eigen::MatrixXd decode_matrix(const EigenBasis &basis, int channels);

void save_weight_field(const WeightField &w, const std::filesystem::path &path);
WeightField load_weight_field(const std::filesystem::path &path);

}  // namespace ronorm
