// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/reduction.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "ronorm/io.hpp"

namespace ronorm
{

std::string to_string(Axis axis)
{
  return axis == Axis::Space ? "space" : "time";
}

Axis axis_from_string(const std::string &s)
{
  if (s == "space")
  {
    return Axis::Space;
  }
  if (s == "time")
  {
    return Axis::Time;
  }
  throw ConfigError("unknown axis '" + s + "' (expected space or time)");
}

SnapshotTensor::SnapshotTensor(int n_samples, int n_x, int n_t, int channels, double dt)
  : n_samples_(n_samples), n_x_(n_x), n_t_(n_t), channels_(channels), dt_(dt)
{
  if (n_samples < 1 || n_x < 1 || n_t < 1 || channels < 1)
  {
    throw DimensionError("snapshot tensor dimensions must all be >= 1");
  }
  data_.assign(static_cast<std::size_t>(n_samples) * n_x * n_t * channels, 0.0);
}

Eigen::MatrixXd SnapshotTensor::axis_matrix(int i, Axis row_axis) const
{
  const bool rows_space = row_axis == Axis::Space;
  const int n_rows = rows_space ? n_x_ : n_t_;
  const int n_other = rows_space ? n_t_ : n_x_;
  Eigen::MatrixXd m(n_rows, n_other * channels_);
  for (int r = 0; r < n_rows; ++r)
  {
    for (int j = 0; j < n_other; ++j)
    {
      const int x = rows_space ? r : j;
      const int t = rows_space ? j : r;
      for (int c = 0; c < channels_; ++c)
      {
        m(r, c * n_other + j) = (*this)(i, x, t, c);
      }
    }
  }
  return m;
}

void SnapshotTensor::set_axis_matrix(int i, Axis row_axis,
                                     const Eigen::Ref<const Eigen::MatrixXd> &m)
{
  const bool rows_space = row_axis == Axis::Space;
  const int n_rows = rows_space ? n_x_ : n_t_;
  const int n_other = rows_space ? n_t_ : n_x_;
  if (m.rows() != n_rows || m.cols() != n_other * channels_)
  {
    throw DimensionError("set_axis_matrix: shape mismatch");
  }
  for (int r = 0; r < n_rows; ++r)
  {
    for (int j = 0; j < n_other; ++j)
    {
      const int x = rows_space ? r : j;
      const int t = rows_space ? j : r;
      for (int c = 0; c < channels_; ++c)
      {
        (*this)(i, x, t, c) = m(r, c * n_other + j);
      }
    }
  }
}

SnapshotTensor SnapshotTensor::slice(int begin, int count) const
{
  if (begin < 0 || count < 1 || begin + count > n_samples_)
  {
    throw DimensionError("slice out of range");
  }
  SnapshotTensor out(count, n_x_, n_t_, channels_, dt_);
  const auto stride = sample_size();
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
            data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * stride),
            out.data_.begin());
  return out;
}

void SnapshotTensor::validate() const
{
  if (n_samples_ < 1 || n_x_ < 1 || n_t_ < 1 || channels_ < 1)
  {
    throw DataError("snapshot tensor has an empty dimension");
  }
  if (data_.size() != static_cast<std::size_t>(n_samples_) * sample_size())
  {
    throw DataError("snapshot tensor storage does not match its shape");
  }
  for (double v : data_)
  {
    if (!std::isfinite(v))
    {
      throw DataError("snapshot tensor contains non-finite values");
    }
  }
}

Eigen::MatrixXd WeightField::sample_matrix(int i) const
{
  Eigen::MatrixXd m(n_pts, width);
  for (int p = 0; p < n_pts; ++p)
  {
    for (int j = 0; j < width; ++j)
    {
      m(p, j) = (*this)(i, p, j);
    }
  }
  return m;
}

namespace
{

Axis kept_axis(Axis reduced)
{
  return reduced == Axis::Time ? Axis::Space : Axis::Time;
}

int axis_length(const SnapshotTensor &s, Axis axis)
{
  return axis == Axis::Space ? s.nx() : s.nt();
}

void check_basis_for_axis(const EigenBasis &basis, Axis axis, int axis_len)
{
  if (basis.num_points() != axis_len)
  {
    throw DimensionError("basis has " + std::to_string(basis.num_points()) +
                         " points but the " + to_string(axis) + " axis has " +
                         std::to_string(axis_len));
  }
  if (basis.weights.size() != axis_len)
  {
    throw DimensionError("basis weights do not match its point count");
  }
  if (basis.kind == BasisKind::Lbo && axis != Axis::Space)
  {
    throw DimensionError("an LBO basis can only reduce the space axis");
  }
  if (basis.kind == BasisKind::Fourier && axis != Axis::Time)
  {
    throw DimensionError("a Fourier basis can only reduce the time axis");
  }
}

}  // namespace

EigenBasis compute_pod_basis(const SnapshotTensor &snapshots, Axis reduce_axis, int k)
{
  snapshots.validate();
  const int n_axis = axis_length(snapshots, reduce_axis);
  if (k < 1 || k > n_axis)
  {
    throw DimensionError("POD: requested " + std::to_string(k) + " modes along an axis of length " +
                         std::to_string(n_axis));
  }
  const Axis other = kept_axis(reduce_axis);
  const int n_other = axis_length(snapshots, other);
  const int channels = snapshots.channels();

  // Trajectories from every sample, kept-axis point and channel are pooled.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_axis, n_axis);
  for (int i = 0; i < snapshots.samples(); ++i)
  {
    const Eigen::MatrixXd m = snapshots.axis_matrix(i, other);
    for (int c = 0; c < channels; ++c)
    {
      gram.selfadjointView<Eigen::Lower>().rankUpdate(
          m.middleCols(static_cast<Eigen::Index>(c) * n_axis, n_axis).transpose());
    }
  }
  const double n_traj = static_cast<double>(snapshots.samples()) * n_other * channels;
  Eigen::MatrixXd cov = gram.selfadjointView<Eigen::Lower>();
  cov /= n_traj;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
  {
    throw NumericsError("POD eigensolver did not converge");
  }

  EigenBasis basis;
  basis.kind = BasisKind::Pod;
  basis.vectors.resize(n_axis, k);
  basis.values.resize(k);
  for (int j = 0; j < k; ++j)
  {
    const int src = n_axis - 1 - j;
    basis.vectors.col(j) = solver.eigenvectors().col(src);
    basis.values(j) = std::sqrt(std::max(0.0, solver.eigenvalues()(src)) * n_traj);
  }
  normalize_signs(basis.vectors);
  basis.weights = Eigen::VectorXd::Ones(n_axis);
  return basis;
}

int energy_truncation(const Eigen::Ref<const Eigen::VectorXd> &values, double threshold)
{
  if (!(threshold > 0.0 && threshold < 1.0))
  {
    throw DataError("energy threshold must lie in (0, 1)");
  }
  if (values.size() == 0)
  {
    throw DataError("energy truncation on an empty spectrum");
  }
  for (Eigen::Index i = 0; i < values.size(); ++i)
  {
    if (!(values(i) >= 0.0))
    {
      throw DataError("singular values must be non-negative");
    }
    if (i > 0 && values(i) > values(i - 1))
    {
      throw DataError("singular values must be sorted in descending order");
    }
  }
  const double total = values.squaredNorm();
  if (total <= 0.0)
  {
    throw DataError("energy truncation on an all-zero spectrum");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
  {
    acc += values(i) * values(i);
    if (acc / total >= threshold)
    {
      return static_cast<int>(i + 1);
    }
  }
  return static_cast<int>(values.size());
}

WeightField encode_unequal(const SnapshotTensor &snapshots, const EigenBasis &basis,
                           Axis reduce_axis)
{
  const int n_axis = axis_length(snapshots, reduce_axis);
  check_basis_for_axis(basis, reduce_axis, n_axis);
  const Axis kept = kept_axis(reduce_axis);
  const int channels = snapshots.channels();
  const int d = basis.size();

  WeightField w;
  w.n_samples = snapshots.samples();
  w.n_pts = axis_length(snapshots, kept);
  w.width = d * channels;
  w.reduced_axis = reduce_axis;
  w.basis_ref = basis.id();
  w.dt = snapshots.dt();
  w.data.assign(static_cast<std::size_t>(w.n_samples) * w.n_pts * w.width, 0.0);

  const Eigen::MatrixXd weighted = basis.weights.asDiagonal() * basis.vectors;
  for (int i = 0; i < w.n_samples; ++i)
  {
    const Eigen::MatrixXd m = snapshots.axis_matrix(i, kept);
    for (int c = 0; c < channels; ++c)
    {
      const Eigen::MatrixXd coeffs =
          m.middleCols(static_cast<Eigen::Index>(c) * n_axis, n_axis) * weighted;
      for (int p = 0; p < w.n_pts; ++p)
      {
        for (int k = 0; k < d; ++k)
        {
          w(i, p, c * d + k) = coeffs(p, k);
        }
      }
    }
  }
  return w;
}

Eigen::MatrixXd decode_matrix(const EigenBasis &basis, int channels)
{
  const int d = basis.size();
  const int n_axis = basis.num_points();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * channels,
                                            static_cast<Eigen::Index>(n_axis) * channels);
  for (int c = 0; c < channels; ++c)
  {
    D.block(static_cast<Eigen::Index>(c) * d, static_cast<Eigen::Index>(c) * n_axis, d, n_axis) =
        basis.vectors.transpose();
  }
  return D;
}

SnapshotTensor decode_unequal(const WeightField &weights, const EigenBasis &basis)
{
  if (weights.basis_ref != basis.id())
  {
    throw DimensionError("weight field was encoded with basis " + weights.basis_ref +
                         ", not " + basis.id());
  }
  const int d = basis.size();
  if (weights.width % d != 0 || weights.width == 0)
  {
    throw DimensionError("weight width " + std::to_string(weights.width) +
                         " is not a multiple of the basis size " + std::to_string(d));
  }
  const int channels = weights.width / d;
  const int n_axis = basis.num_points();
  const Axis kept = kept_axis(weights.reduced_axis);
  const bool time_reduced = weights.reduced_axis == Axis::Time;
  SnapshotTensor out(weights.n_samples, time_reduced ? weights.n_pts : n_axis,
                     time_reduced ? n_axis : weights.n_pts, channels, weights.dt);
  const Eigen::MatrixXd D = decode_matrix(basis, channels);
  for (int i = 0; i < weights.n_samples; ++i)
  {
    out.set_axis_matrix(i, kept, weights.sample_matrix(i) * D);
  }
  return out;
}

void save_weight_field(const WeightField &w, const std::filesystem::path &path)
{
  BlobFile file;
  file.header = {{"kind", "weight_field"},
                 {"N", w.n_samples},
                 {"n_pts", w.n_pts},
                 {"width", w.width},
                 {"reduced_axis", to_string(w.reduced_axis)},
                 {"basis_ref", w.basis_ref},
                 {"dt", w.dt}};
  file.add("w", w.data);
  write_blob_file(file, path);
}

WeightField load_weight_field(const std::filesystem::path &path)
{
  const BlobFile file = read_blob_file(path);
  WeightField w;
  try
  {
    w.n_samples = file.header.at("N").get<int>();
    w.n_pts = file.header.at("n_pts").get<int>();
    w.width = file.header.at("width").get<int>();
    w.reduced_axis = axis_from_string(file.header.at("reduced_axis").get<std::string>());
    w.basis_ref = file.header.at("basis_ref").get<std::string>();
    w.dt = file.header.at("dt").get<double>();
  }
  catch (const json::exception &e)
  {
    throw DataError("bad weight-field header in " + path.string() + ": " + e.what());
  }
  w.data = file.blob("w");
  if (w.data.size() != static_cast<std::size_t>(w.n_samples) * w.n_pts * w.width)
  {
    throw DataError("weight-field blob size disagrees with header in " + path.string());
  }
  return w;
}

}  // namespace ronorm
