// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace ronorm
{

std::string to_string(MappingKind kind)
{
  switch (kind)
  {
    case MappingKind::IncreaseFromSpace:
      return "increase_from_space";
    case MappingKind::IncreaseFromTime:
      return "increase_from_time";
    case MappingKind::DecreaseToSpace:
      return "decrease_to_space";
    case MappingKind::DecreaseToTime:
      return "decrease_to_time";
  }
  return "unknown";
}

MappingKind mapping_kind_from_string(const std::string &s)
{
  for (auto k : {MappingKind::IncreaseFromSpace, MappingKind::IncreaseFromTime,
                 MappingKind::DecreaseToSpace, MappingKind::DecreaseToTime})
  {
    if (to_string(k) == s)
    {
      return k;
    }
  }
  throw ConfigError("unknown mapping kind '" + s + "'");
}

bool is_increase(MappingKind kind)
{
  return kind == MappingKind::IncreaseFromSpace || kind == MappingKind::IncreaseFromTime;
}

Axis network_axis(MappingKind kind)
{
  return (kind == MappingKind::IncreaseFromSpace || kind == MappingKind::DecreaseToSpace)
             ? Axis::Space
             : Axis::Time;
}

Axis reduced_axis(MappingKind kind)
{
  return network_axis(kind) == Axis::Space ? Axis::Time : Axis::Space;
}

std::string to_string(Reconstruction r)
{
  return r == Reconstruction::Online ? "online" : "offline";
}

Reconstruction reconstruction_from_string(const std::string &s)
{
  if (s == "online")
  {
    return Reconstruction::Online;
  }
  if (s == "offline")
  {
    return Reconstruction::Offline;
  }
  throw ConfigError("unknown reconstruction mode '" + s + "'");
}

std::string to_string(BasisFamily f)
{
  return f == BasisFamily::Pod ? "pod" : "intrinsic";
}

BasisFamily basis_family_from_string(const std::string &s)
{
  if (s == "pod")
  {
    return BasisFamily::Pod;
  }
  if (s == "intrinsic")
  {
    return BasisFamily::Intrinsic;
  }
  throw ConfigError("unknown basis family '" + s + "'");
}

void TrainConfig::validate() const
{
  if (epochs < 0 || batch_size < 1 || !(lr > 0.0) || step_lr_every < 1 ||
      !(step_lr_gamma > 0.0 && step_lr_gamma <= 1.0) || truncated_modes < 1 || lmodes < 1 ||
      width < 1 || n_layers < 0 || proj_width < 1 || eval_every < 1)
  {
    throw ConfigError("training configuration has a non-positive or out-of-range entry");
  }
}

json to_json(const TrainConfig &c)
{
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"step_lr", {{"gamma", c.step_lr_gamma}, {"every", c.step_lr_every}}},
          {"reconstruction", to_string(c.reconstruction)},
          {"truncated_modes", c.truncated_modes},
          {"lmodes", c.lmodes},
          {"width", c.width},
          {"l_layers", c.n_layers},
          {"proj_width", c.proj_width},
          {"activation", to_string(c.activation)},
          {"basis_family", to_string(c.basis_family)},
          {"seed", c.seed},
          {"standardize_inputs", c.standardize_inputs},
          {"eval_every", c.eval_every}};
}

TrainConfig train_config_from_json(const json &j)
{
  TrainConfig c;
  try
  {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    if (j.contains("step_lr"))
    {
      c.step_lr_gamma = j["step_lr"].value("gamma", c.step_lr_gamma);
      c.step_lr_every = j["step_lr"].value("every", c.step_lr_every);
    }
    c.reconstruction =
        reconstruction_from_string(j.value("reconstruction", to_string(c.reconstruction)));
    c.truncated_modes = j.value("truncated_modes", c.truncated_modes);
    c.lmodes = j.value("lmodes", c.lmodes);
    c.width = j.value("width", c.width);
    c.n_layers = j.value("l_layers", c.n_layers);
    c.proj_width = j.value("proj_width", c.proj_width);
    c.activation = activation_from_string(j.value("activation", to_string(c.activation)));
    c.basis_family = basis_family_from_string(j.value("basis_family", to_string(c.basis_family)));
    c.seed = j.value("seed", c.seed);
    c.standardize_inputs = j.value("standardize_inputs", c.standardize_inputs);
    c.eval_every = j.value("eval_every", c.eval_every);
  }
  catch (const json::exception &e)
  {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

double scheduled_lr(const TrainConfig &config, int epoch)
{
  return config.lr * std::pow(config.step_lr_gamma, epoch / config.step_lr_every);
}

AdamState make_adam_state(const std::vector<std::span<const double>> &params)
{
  AdamState s;
  for (auto p : params)
  {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(const std::vector<std::span<double>> &params,
               const std::vector<std::span<const double>> &grads, AdamState &state, double lr)
{
  if (params.size() != grads.size() || params.size() != state.m.size())
  {
    throw DimensionError("adam_step: parameter/gradient/state tensor counts differ");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t)
  {
    auto p = params[t];
    auto g = grads[t];
    auto &m = state.m[t];
    auto &v = state.v[t];
    if (p.size() != g.size() || p.size() != m.size())
    {
      throw DimensionError("adam_step: tensor shape mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i)
    {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double relative_l2_loss(std::span<const Eigen::MatrixXd> pred,
                        std::span<const Eigen::MatrixXd> truth)
{
  if (pred.size() != truth.size() || pred.empty())
  {
    throw DimensionError("relative_l2_loss: batch sizes differ or are empty");
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < pred.size(); ++p)
  {
    if (pred[p].rows() != truth[p].rows() || pred[p].cols() != truth[p].cols())
    {
      throw DimensionError("relative_l2_loss: sample shapes differ");
    }
    const auto r = relative_l2({pred[p].data(), static_cast<std::size_t>(pred[p].size())},
                               {truth[p].data(), static_cast<std::size_t>(truth[p].size())},
                               static_cast<std::size_t>(truth[p].size()), ZeroNormPolicy::Error);
    sum += r.value;
  }
  return sum / static_cast<double>(pred.size());
}

void Dataset::check() const
{
  a.validate();
  u.validate();
  if (a.samples() != u.samples())
  {
    throw DataError("dataset input and output sample counts differ");
  }
  bool ok = false;
  switch (kind)
  {
    case MappingKind::IncreaseFromSpace:
      ok = a.nt() == 1 && a.nx() == u.nx();
      break;
    case MappingKind::IncreaseFromTime:
      ok = a.nx() == 1 && a.nt() == u.nt();
      break;
    case MappingKind::DecreaseToSpace:
      ok = u.nt() == 1 && a.nx() == u.nx();
      break;
    case MappingKind::DecreaseToTime:
      ok = u.nx() == 1 && a.nt() == u.nt();
      break;
  }
  if (!ok)
  {
    throw DataError("dataset shapes do not match mapping kind " + to_string(kind));
  }
}

RoNormProblem prepare_problem(const Dataset &train, const TrainConfig &config,
                              const MeshOperators *ops)
{
  train.check();
  config.validate();
  RoNormProblem problem;
  problem.kind = train.kind;
  const Axis reduce = reduced_axis(train.kind);
  const Axis net = network_axis(train.kind);
  const SnapshotTensor &side = is_increase(train.kind) ? train.u : train.a;
  const double period = side.nt() * side.dt();

  // One LBO solve serves both the intrinsic reduction basis and the network basis.
  int lbo_k = 0;
  if (net == Axis::Space)
  {
    lbo_k = config.lmodes;
  }
  if (reduce == Axis::Space && config.basis_family == BasisFamily::Intrinsic)
  {
    lbo_k = std::max(lbo_k, config.truncated_modes);
  }
  std::optional<EigenBasis> lbo;
  if (lbo_k > 0)
  {
    if (!ops)
    {
      throw ConfigError("an LBO basis is required but no mesh operators were supplied");
    }
    lbo = compute_lbo_basis(ops->stiffness, ops->lumped_mass, lbo_k);
  }

  if (config.basis_family == BasisFamily::Pod)
  {
    problem.reduction_basis = compute_pod_basis(side, reduce, config.truncated_modes);
  }
  else if (reduce == Axis::Time)
  {
    problem.reduction_basis = fourier_time_basis(side.nt(), config.truncated_modes, period);
  }
  else
  {
    problem.reduction_basis = lbo->truncated(config.truncated_modes);
  }

  if (net == Axis::Space)
  {
    problem.domain_basis = lbo->truncated(config.lmodes);
  }
  else
  {
    problem.domain_basis = fourier_time_basis(side.nt(), config.lmodes, period);
  }

  const int d = config.truncated_modes;
  if (is_increase(train.kind))
  {
    problem.c_in = train.a.channels();
    problem.c_out = d * train.u.channels();
  }
  else
  {
    problem.c_in = d * train.a.channels();
    problem.c_out = train.u.channels();
  }
  return problem;
}

namespace
{

std::vector<Eigen::MatrixXd> network_inputs(const SnapshotTensor &a, const RoNormProblem &problem)
{
  std::vector<Eigen::MatrixXd> inputs;
  inputs.reserve(a.samples());
  if (is_increase(problem.kind))
  {
    for (int i = 0; i < a.samples(); ++i)
    {
      inputs.push_back(a.axis_matrix(i, network_axis(problem.kind)));
    }
  }
  else
  {
    const WeightField w = encode_unequal(a, problem.reduction_basis, reduced_axis(problem.kind));
    for (int i = 0; i < a.samples(); ++i)
    {
      inputs.push_back(w.sample_matrix(i));
    }
  }
  return inputs;
}

Eigen::MatrixXd standardized(const RoNormModel &model, const Eigen::MatrixXd &x)
{
  if (model.input_shift.size() == 0)
  {
    return x;
  }
  return (x.rowwise() - model.input_shift.transpose()).array().rowwise() /
         model.input_scale.transpose().array();
}

}  // namespace

NetworkSamples make_network_samples(const Dataset &data, const RoNormProblem &problem,
                                    Reconstruction reconstruction)
{
  data.check();
  if (data.kind != problem.kind)
  {
    throw DataError("dataset kind does not match the prepared problem");
  }
  NetworkSamples s;
  s.inputs = network_inputs(data.a, problem);
  const Axis kept = network_axis(problem.kind);
  const Axis reduce = reduced_axis(problem.kind);
  if (is_increase(problem.kind) && reconstruction == Reconstruction::Offline)
  {
    const WeightField w = encode_unequal(data.u, problem.reduction_basis, reduce);
    for (int i = 0; i < data.u.samples(); ++i)
    {
      s.targets.push_back(w.sample_matrix(i));
    }
  }
  else
  {
    for (int i = 0; i < data.u.samples(); ++i)
    {
      s.targets.push_back(data.u.axis_matrix(i, kept));
    }
    if (is_increase(problem.kind))
    {
      s.decode = decode_matrix(problem.reduction_basis, data.u.channels());
    }
  }
  return s;
}

double backward(const RoNormModel &model, const NetworkSamples &samples,
                std::span<const int> batch, const SpectralPair &spectral, NormParams &grads)
{
  if (batch.empty())
  {
    throw DataError("backward: empty batch");
  }
  for (auto t : grads.tensors())
  {
    std::fill(t.begin(), t.end(), 0.0);
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const bool decode = samples.decode.size() > 0;
  double loss = 0.0;
  ForwardTape tape;
  for (int idx : batch)
  {
    const Eigen::MatrixXd x = standardized(model, samples.inputs[idx]);
    const Eigen::MatrixXd out = forward(model.params, x, spectral, &tape);
    const Eigen::MatrixXd &target = samples.targets[idx];
    const Eigen::MatrixXd pred = decode ? Eigen::MatrixXd(out * samples.decode) : out;
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
    {
      throw DimensionError("backward: prediction and target shapes differ");
    }
    const Eigen::MatrixXd residual = pred - target;
    const double r = residual.norm();
    const double t = target.norm();
    if (t == 0.0)
    {
      throw DataError("backward: training target " + std::to_string(idx) + " has zero norm");
    }
    if (!std::isfinite(r))
    {
      throw NumericsError("backward: non-finite prediction for sample " + std::to_string(idx));
    }
    loss += inv_b * r / t;
    if (r == 0.0)
    {
      continue;
    }
    const Eigen::MatrixXd d_pred = residual * (inv_b / (r * t));
    const Eigen::MatrixXd d_out =
        decode ? Eigen::MatrixXd(d_pred * samples.decode.transpose()) : d_pred;
    ronorm::backward(model.params, tape, d_out, spectral, grads);
  }
  return loss;
}

SnapshotTensor predict(const RoNormModel &model, const RoNormProblem &problem,
                       const SnapshotTensor &a, const SnapshotTensor &u_shape_like)
{
  const SpectralPair spectral(problem.domain_basis);
  const auto inputs = network_inputs(a, problem);
  SnapshotTensor out(a.samples(), u_shape_like.nx(), u_shape_like.nt(), u_shape_like.channels(),
                     u_shape_like.dt());
  Eigen::MatrixXd D;
  if (is_increase(problem.kind))
  {
    D = decode_matrix(problem.reduction_basis, u_shape_like.channels());
  }
  const Axis kept = network_axis(problem.kind);
  for (int i = 0; i < a.samples(); ++i)
  {
    const Eigen::MatrixXd y = forward(model.params, standardized(model, inputs[i]), spectral);
    out.set_axis_matrix(i, kept, D.size() > 0 ? Eigen::MatrixXd(y * D) : y);
  }
  return out;
}

void TrainingLog::write_csv(const std::filesystem::path &path, const std::string &config_hash) const
{
  std::ofstream out(path);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  if (!config_hash.empty())
  {
    out << "# config_hash: " << config_hash << '\n';
  }
  out << "epoch,lr,train_loss,test_e_l2,test_mme,wall_clock_s\n";
  out.precision(17);
  for (const auto &r : epochs)
  {
    out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.test_e_l2 << ','
        << r.test_mme << ',' << r.wall_clock_s << '\n';
  }
}

namespace
{

TrainResult train_same_domain(const Dataset &train, const Dataset &test,
                              const RoNormProblem &problem, const TrainConfig &config,
                              const EpochCallback &on_epoch)
{
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const SpectralPair spectral(problem.domain_basis);
  const NetworkSamples samples = make_network_samples(train, problem, config.reconstruction);

  NormShape shape;
  shape.c_in = problem.c_in;
  shape.c_out = problem.c_out;
  shape.width = config.width;
  shape.proj_width = config.proj_width;
  shape.n_layers = config.n_layers;
  shape.modes = problem.domain_basis.size();
  shape.activation = config.activation;

  TrainResult result;
  result.model.params = init_params(config.seed, shape);
  if (config.standardize_inputs)
  {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(shape.c_in);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(shape.c_in);
    double count = 0.0;
    for (const auto &x : samples.inputs)
    {
      sum += x.colwise().sum().transpose();
      sq += x.cwiseAbs2().colwise().sum().transpose();
      count += static_cast<double>(x.rows());
    }
    const Eigen::VectorXd mean = sum / count;
    Eigen::VectorXd var = sq / count - mean.cwiseAbs2();
    result.model.input_shift = mean;
    result.model.input_scale =
        var.unaryExpr([](double v) { return v > 1e-300 ? std::sqrt(v) : 1.0; });
  }

  auto &params = result.model.params;
  NormParams grads = params.zeros_like();
  AdamState adam = make_adam_state(std::as_const(params).tensors());
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(samples.inputs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch)
  {
    const double lr = scheduled_lr(config, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size)
    {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::span<const int> batch(order.data() + start, stop - start);
      const double loss = backward(result.model, samples, batch, spectral, grads);
      if (!std::isfinite(loss))
      {
        throw NumericsError("training loss became non-finite at epoch " + std::to_string(epoch));
      }
      loss_sum += loss * static_cast<double>(batch.size());
      adam_step(params.tensors(), std::as_const(grads).tensors(), adam, lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(rec.train_loss))
    {
      throw NumericsError("training loss became non-finite at epoch " + std::to_string(epoch));
    }
    const bool eval_now = (epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs;
    if (eval_now)
    {
      const SnapshotTensor pred = predict(result.model, problem, test.a, test.u);
      rec.test_e_l2 = e_l2(pred, test.u);
      rec.test_mme = mme(pred, test.u);
    }
    else
    {
      rec.test_e_l2 = std::numeric_limits<double>::quiet_NaN();
      rec.test_mme = std::numeric_limits<double>::quiet_NaN();
    }
    rec.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(rec);
    if (on_epoch)
    {
      on_epoch(rec);
    }
  }
  return result;
}

}  // namespace

TrainResult train_increase(const Dataset &train, const Dataset &test, const RoNormProblem &problem,
                           const TrainConfig &config, const EpochCallback &on_epoch)
{
  if (!is_increase(train.kind) || train.kind != problem.kind || test.kind != train.kind)
  {
    throw DataError("train_increase needs an increase-domain dataset matching the problem");
  }
  return train_same_domain(train, test, problem, config, on_epoch);
}

TrainResult train_decrease(const Dataset &train, const Dataset &test, const RoNormProblem &problem,
                           const TrainConfig &config, const EpochCallback &on_epoch)
{
  if (is_increase(train.kind) || train.kind != problem.kind || test.kind != train.kind)
  {
    throw DataError("train_decrease needs a decrease-domain dataset matching the problem");
  }
  return train_same_domain(train, test, problem, config, on_epoch);
}

void save_model(const RoNormModel &model, const std::filesystem::path &path, const json &extra)
{
  json meta = extra;
  if (model.input_shift.size() > 0)
  {
    meta["input_shift"] = std::vector<double>(model.input_shift.data(),
                                              model.input_shift.data() + model.input_shift.size());
    meta["input_scale"] = std::vector<double>(model.input_scale.data(),
                                              model.input_scale.data() + model.input_scale.size());
  }
  save_params(model.params, path, meta);
}

RoNormModel load_model(const std::filesystem::path &path, json *extra)
{
  json meta;
  RoNormModel model;
  model.params = load_params(path, &meta);
  if (meta.contains("input_shift"))
  {
    const auto shift = meta["input_shift"].get<std::vector<double>>();
    const auto scale = meta["input_scale"].get<std::vector<double>>();
    model.input_shift = Eigen::Map<const Eigen::VectorXd>(shift.data(), shift.size());
    model.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), scale.size());
  }
  if (extra)
  {
    *extra = meta;
  }
  return model;
}

}  // namespace ronorm
