// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ronorm/io.hpp"
#include "ronorm/spectral.hpp"

namespace ronorm
{

enum class Activation
{
  Gelu,
  Relu,
  Identity,
};

std::string to_string(Activation act);
Activation activation_from_string(const std::string &s);

/// Elementwise activation and its derivative.
Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd &z);
Eigen::MatrixXd activate_derivative(Activation act, const Eigen::MatrixXd &z);

/// Values sampled on the points of a mesh or time axis; one column per channel.
struct NodalField
{
  Eigen::MatrixXd values;
  std::string domain_ref;
};

struct NormShape
{
  int c_in = 1;
  int c_out = 1;
  int width = 16;        // d_w
  int proj_width = 128;  // hidden width of the projection network
  int n_layers = 4;
  int modes = 32;  // d_M, retained spectral modes
  Activation activation = Activation::Gelu;
};

/// One L-layer: pointwise W, constant bias b, and one d_w x d_w channel-mixing
/// matrix per retained mode.
struct LLayerParams
{
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  std::vector<Eigen::MatrixXd> K;
};

struct NormParams
{
  NormShape shape;
  std::uint64_t seed = 0;

  Eigen::MatrixXd lift_w;  // width x c_in
  Eigen::VectorXd lift_b;
  std::vector<LLayerParams> layers;
  Eigen::MatrixXd proj1_w;  // proj_width x width
  Eigen::VectorXd proj1_b;
  Eigen::MatrixXd proj2_w;  // c_out x proj_width
  Eigen::VectorXd proj2_b;

  /// Every tensor as a flat span, in a fixed order (lift, layers, projection).
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::vector<std::string> tensor_names() const;

  /// Same shapes, all entries zero.
  NormParams zeros_like() const;
  bool all_finite() const;
};

/// Deterministic in `seed`: affine weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// mode matrices ~ N(0, 1/(width * modes)) (variance), biases zero.
NormParams init_params(std::uint64_t seed, const NormShape &shape);

std::size_t parameter_count(const NormShape &shape);
std::size_t parameter_count(const NormParams &params);

/// Precomputed analysis (Phi^T diag(w)) and synthesis (Phi) matrices for the
/// retained modes of a basis.
struct SpectralPair
{
  Eigen::MatrixXd analysis;   // modes x n_points
  Eigen::MatrixXd synthesis;  // n_points x modes
  std::string domain_ref;

  explicit SpectralPair(const EigenBasis &basis);
  int modes() const { return static_cast<int>(synthesis.cols()); }
  int num_points() const { return static_cast<int>(synthesis.rows()); }
};

/// Laplacian kernel integral operator: project, mix channels per mode, reconstruct.
Eigen::MatrixXd spectral_conv(const Eigen::MatrixXd &v, const std::vector<Eigen::MatrixXd> &K,
                              const SpectralPair &spectral);
NodalField spectral_conv(const NodalField &v, const std::vector<Eigen::MatrixXd> &K,
                         const EigenBasis &basis);

/// Intermediate values kept for the reverse pass.
struct ForwardTape
{
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> hidden;  // hidden[0] = lifted, hidden[l+1] = after layer l
  std::vector<Eigen::MatrixXd> pre_act;
  std::vector<Eigen::MatrixXd> coeffs;  // projected coefficients per layer (modes x width)
  Eigen::MatrixXd proj_pre;
  Eigen::MatrixXd proj_hidden;
  Eigen::MatrixXd output;
};

Eigen::MatrixXd forward(const NormParams &params, const Eigen::MatrixXd &input,
                        const SpectralPair &spectral, ForwardTape *tape = nullptr);
NodalField forward(const NormParams &params, const NodalField &input, const EigenBasis &basis);

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
/// Returns d(loss)/d(input).
Eigen::MatrixXd backward(const NormParams &params, const ForwardTape &tape,
                         const Eigen::MatrixXd &d_output, const SpectralPair &spectral,
                         NormParams &grads);

/// Checkpoint: JSON header (shapes, seed, extra metadata) and one blob per tensor.
void save_params(const NormParams &params, const std::filesystem::path &path,
                 const json &extra = json::object());
NormParams load_params(const std::filesystem::path &path, json *extra = nullptr);

}  // namespace ronorm
