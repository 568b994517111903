// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ronorm/norm_net.hpp"
#include "ronorm/reduction.hpp"
#include "ronorm/train.hpp"

namespace ronorm
{

struct FcLayer
{
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

/// Fully connected network; the activation follows every layer but the last.
struct FcParams
{
  std::vector<FcLayer> layers;
  Activation activation = Activation::Gelu;

  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  FcParams zeros_like() const;
  int input_size() const;
  int output_size() const;
};

/// `dims` = {in, hidden..., out}; weights U(+-1/sqrt(fan_in)), zero biases.
FcParams init_fc(std::uint64_t seed, std::span<const int> dims, Activation act);
std::size_t parameter_count(const FcParams &params);

struct FcTape
{
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
};

/// Rows of `x` are samples.
Eigen::MatrixXd fc_forward(const FcParams &params, const Eigen::MatrixXd &x, FcTape *tape = nullptr);
/// Accumulates into `grads`; returns d loss / d x.
Eigen::MatrixXd fc_backward(const FcParams &params, const FcTape &tape, const Eigen::MatrixXd &d_out,
                            FcParams &grads);

/// Non-centred PCA of the flattened per-sample vectors (space and time
/// jointly). Unit weights; values are singular values of the snapshot matrix.
EigenBasis pca_flatten_basis(const SnapshotTensor &side, int k);

/// Flattened PCA coefficients, one row per sample.
Eigen::MatrixXd pca_encode(const SnapshotTensor &side, const EigenBasis &basis);
SnapshotTensor pca_decode(const Eigen::MatrixXd &coefficients, const EigenBasis &basis,
                          const SnapshotTensor &shape_like);

struct PcaNetConfig
{
  TrainConfig train;  // epochs, batch, lr schedule, seed, activation, eval cadence
  int k_in = 32;
  int k_out = 32;
  std::vector<int> hidden{256, 256, 256, 256};
};

json to_json(const PcaNetConfig &c);
PcaNetConfig pca_net_config_from_json(const json &j);

struct PcaNetModel
{
  EigenBasis in_basis;
  EigenBasis out_basis;
  FcParams net;
};

struct PcaNetResult
{
  PcaNetModel model;
  TrainingLog log;
};

/// Bases from the training split; the net maps input to output coefficients.
PcaNetResult train_pca_net(const Dataset &train, const Dataset &test, const PcaNetConfig &config,
                           const EpochCallback &on_epoch = {});
SnapshotTensor predict_pca_net(const PcaNetModel &model, const SnapshotTensor &a,
                               const SnapshotTensor &u_shape_like);

void save_pca_net(const PcaNetModel &model, const std::filesystem::path &path, const json &extra);
PcaNetModel load_pca_net(const std::filesystem::path &path, json *extra = nullptr);

struct SvdDecayReport
{
  Eigen::VectorXd separate;  // POD along one axis
  Eigen::VectorXd overall;   // flattened PCA
  int k99_separate = 0;
  int k99_overall = 0;
};

SvdDecayReport svd_decay_report(const SnapshotTensor &data, Axis reduce_axis);
/// Writes separate.csv, overall.csv (index, singular value) and svd_report.json.
void write_svd_report(const SvdDecayReport &report, const std::filesystem::path &dir,
                      const std::string &config_hash);

}  // namespace ronorm
