// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ronorm/mesh.hpp"
#include "ronorm/metrics.hpp"
#include "ronorm/norm_net.hpp"
#include "ronorm/reduction.hpp"

namespace ronorm
{

/// The four unequal-domain mapping categories.
enum class MappingKind
{
  IncreaseFromSpace,  // a(x)   -> u(x,t)
  IncreaseFromTime,   // a(t)   -> u(x,t)
  DecreaseToSpace,    // a(x,t) -> u(x)
  DecreaseToTime,     // a(x,t) -> u(t)
};

std::string to_string(MappingKind kind);
MappingKind mapping_kind_from_string(const std::string &s);
bool is_increase(MappingKind kind);
/// Axis the same-domain network operates on.
Axis network_axis(MappingKind kind);
/// Extra axis removed by the unequal-domain encoder/decoder.
Axis reduced_axis(MappingKind kind);

enum class Reconstruction
{
  Online,
  Offline,
};

enum class BasisFamily
{
  Pod,
  Intrinsic,
};

std::string to_string(Reconstruction r);
Reconstruction reconstruction_from_string(const std::string &s);
std::string to_string(BasisFamily f);
BasisFamily basis_family_from_string(const std::string &s);

struct TrainConfig
{
  int epochs = 500;
  int batch_size = 50;
  double lr = 0.01;
  int step_lr_every = 100;
  double step_lr_gamma = 0.5;
  Reconstruction reconstruction = Reconstruction::Online;
  int truncated_modes = 32;  // d
  int lmodes = 32;           // d_M
  int width = 16;            // d_w
  int n_layers = 4;
  int proj_width = 128;
  Activation activation = Activation::Gelu;
  BasisFamily basis_family = BasisFamily::Pod;
  std::uint64_t seed = 0;
  bool standardize_inputs = false;
  /// Evaluate the test split every this many epochs (and at the last epoch).
  int eval_every = 1;

  void validate() const;
};

json to_json(const TrainConfig &c);
TrainConfig train_config_from_json(const json &j);

/// Learning rate in effect during `epoch`: lr * gamma^floor(epoch / every).
double scheduled_lr(const TrainConfig &config, int epoch);

struct AdamState
{
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam_state(const std::vector<std::span<const double>> &params);
void adam_step(const std::vector<std::span<double>> &params,
               const std::vector<std::span<const double>> &grads, AdamState &state, double lr);

/// Mean per-sample relative L2 over a batch; zero-norm truth is an error.
double relative_l2_loss(std::span<const Eigen::MatrixXd> pred,
                        std::span<const Eigen::MatrixXd> truth);

/// Input/output pair for one mapping. Spatial-only data has n_t = 1 and
/// temporal-only data has n_x = 1.
struct Dataset
{
  MappingKind kind = MappingKind::IncreaseFromSpace;
  SnapshotTensor a;
  SnapshotTensor u;

  /// Throws DataError if the a/u shapes do not fit `kind`.
  void check() const;
};

/// Bases that turn an unequal-domain mapping into a same-domain one.
struct RoNormProblem
{
  MappingKind kind = MappingKind::IncreaseFromSpace;
  EigenBasis reduction_basis;  // extra axis, d columns
  EigenBasis domain_basis;     // network axis, d_M columns
  int c_in = 1;
  int c_out = 1;
};

/// Output-side (increase) or input-side (decrease) basis from the training split
/// (pod) or from the domain (intrinsic), plus the network's own spectral basis.
/// `ops` is required whenever an LBO basis is needed.
RoNormProblem prepare_problem(const Dataset &train, const TrainConfig &config,
                              const MeshOperators *ops);

/// Network-ready samples. `decode` maps network outputs to targets for online
/// reconstruction (empty otherwise).
struct NetworkSamples
{
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> targets;
  Eigen::MatrixXd decode;
};

NetworkSamples make_network_samples(const Dataset &data, const RoNormProblem &problem,
                                    Reconstruction reconstruction);

struct RoNormModel
{
  NormParams params;
  Eigen::VectorXd input_shift;  // per input channel
  Eigen::VectorXd input_scale;
};

/// Loss of the composed pipeline on `batch` and its exact gradient, accumulated
/// into `grads` (which is zeroed first).
double backward(const RoNormModel &model, const NetworkSamples &samples,
                std::span<const int> batch, const SpectralPair &spectral, NormParams &grads);

/// Field-space predictions (same shape as the dataset outputs) for inputs `a`.
SnapshotTensor predict(const RoNormModel &model, const RoNormProblem &problem,
                       const SnapshotTensor &a, const SnapshotTensor &u_shape_like);

struct EpochRecord
{
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double test_e_l2 = 0.0;
  double test_mme = 0.0;
  double wall_clock_s = 0.0;
};

struct TrainingLog
{
  std::vector<EpochRecord> epochs;
  void write_csv(const std::filesystem::path &path, const std::string &config_hash = "") const;
};

struct TrainResult
{
  RoNormModel model;
  TrainingLog log;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

/// Increase-domain training. Online: loss on F_D(G(a)) against u. Offline:
/// loss on G(a) against F_E(u).
TrainResult train_increase(const Dataset &train, const Dataset &test, const RoNormProblem &problem,
                           const TrainConfig &config, const EpochCallback &on_epoch = {});

/// Decrease-domain training: inputs encoded once, network maps weights to u.
TrainResult train_decrease(const Dataset &train, const Dataset &test, const RoNormProblem &problem,
                           const TrainConfig &config, const EpochCallback &on_epoch = {});

void save_model(const RoNormModel &model, const std::filesystem::path &path, const json &extra);
RoNormModel load_model(const std::filesystem::path &path, json *extra = nullptr);

}  // namespace ronorm
