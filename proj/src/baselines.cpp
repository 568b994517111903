// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/baselines.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

namespace ronorm
{

std::vector<std::span<double>> FcParams::tensors()
{
  std::vector<std::span<double>> out;
  for (auto &l : layers)
  {
    out.emplace_back(l.W.data(), static_cast<std::size_t>(l.W.size()));
    out.emplace_back(l.b.data(), static_cast<std::size_t>(l.b.size()));
  }
  return out;
}

std::vector<std::span<const double>> FcParams::tensors() const
{
  std::vector<std::span<const double>> out;
  for (const auto &l : layers)
  {
    out.emplace_back(l.W.data(), static_cast<std::size_t>(l.W.size()));
    out.emplace_back(l.b.data(), static_cast<std::size_t>(l.b.size()));
  }
  return out;
}

FcParams FcParams::zeros_like() const
{
  FcParams z = *this;
  for (auto &l : z.layers)
  {
    l.W.setZero();
    l.b.setZero();
  }
  return z;
}

int FcParams::input_size() const
{
  return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols());
}

int FcParams::output_size() const
{
  return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows());
}

FcParams init_fc(std::uint64_t seed, std::span<const int> dims, Activation act)
{
  if (dims.size() < 2)
  {
    throw ConfigError("fully connected network needs at least input and output sizes");
  }
  for (int d : dims)
  {
    if (d < 1)
    {
      throw ConfigError("fully connected layer sizes must be positive");
    }
  }
  std::mt19937_64 rng(seed);
  FcParams p;
  p.activation = act;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
  {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    FcLayer layer;
    layer.W.resize(dims[l + 1], dims[l]);
    for (Eigen::Index j = 0; j < layer.W.cols(); ++j)
    {
      for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
      {
        layer.W(i, j) = dist(rng);
      }
    }
    layer.b = Eigen::VectorXd::Zero(dims[l + 1]);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

std::size_t parameter_count(const FcParams &params)
{
  std::size_t n = 0;
  for (auto t : params.tensors())
  {
    n += t.size();
  }
  return n;
}

Eigen::MatrixXd fc_forward(const FcParams &params, const Eigen::MatrixXd &x, FcTape *tape)
{
  if (x.cols() != params.input_size())
  {
    throw DimensionError("fc_forward: input has " + std::to_string(x.cols()) +
                         " columns, network expects " + std::to_string(params.input_size()));
  }
  if (tape)
  {
    tape->inputs.clear();
    tape->pre.clear();
  }
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l)
  {
    const auto &layer = params.layers[l];
    Eigen::MatrixXd z = h * layer.W.transpose();
    z.rowwise() += layer.b.transpose();
    if (tape)
    {
      tape->inputs.push_back(h);
      tape->pre.push_back(z);
    }
    h = l + 1 < params.layers.size() ? activate(params.activation, z) : z;
  }
  return h;
}

Eigen::MatrixXd fc_backward(const FcParams &params, const FcTape &tape, const Eigen::MatrixXd &d_out,
                            FcParams &grads)
{
  Eigen::MatrixXd g = d_out;
  for (std::size_t l = params.layers.size(); l-- > 0;)
  {
    if (l + 1 < params.layers.size())
    {
      g = g.cwiseProduct(activate_derivative(params.activation, tape.pre[l]));
    }
    grads.layers[l].W += g.transpose() * tape.inputs[l];
    grads.layers[l].b += g.colwise().sum().transpose();
    g = g * params.layers[l].W;
  }
  return g;
}

namespace
{

Eigen::MatrixXd flattened(const SnapshotTensor &side)
{
  const Eigen::Index D = static_cast<Eigen::Index>(side.sample_size());
  return Eigen::Map<const Eigen::MatrixXd>(side.data().data(), D, side.samples());
}

}  // namespace

EigenBasis pca_flatten_basis(const SnapshotTensor &side, int k)
{
  side.validate();
  const Eigen::MatrixXd X = flattened(side);  // D x N
  const Eigen::Index D = X.rows();
  const Eigen::Index N = X.cols();
  if (k < 1 || k > D)
  {
    throw DimensionError("PCA: requested " + std::to_string(k) + " modes of a " +
                         std::to_string(D) + "-dimensional sample");
  }
  EigenBasis basis;
  basis.kind = BasisKind::Pod;
  basis.vectors = Eigen::MatrixXd::Zero(D, k);
  basis.values = Eigen::VectorXd::Zero(k);
  basis.weights = Eigen::VectorXd::Ones(D);

  int filled = 0;
  if (N < D)
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(X.transpose() * X);
    if (solver.info() != Eigen::Success)
    {
      throw NumericsError("PCA eigensolver did not converge");
    }
    const double top = std::max(solver.eigenvalues().maxCoeff(), 0.0);
    for (Eigen::Index j = 0; j < N && filled < k; ++j)
    {
      const Eigen::Index src = N - 1 - j;
      const double ev = solver.eigenvalues()(src);
      if (!(ev > 1e-13 * top) || ev <= 0.0)
      {
        break;
      }
      const double sigma = std::sqrt(ev);
      basis.vectors.col(filled) = X * solver.eigenvectors().col(src) / sigma;
      basis.values(filled) = sigma;
      ++filled;
    }
  }
  else
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(X * X.transpose());
    if (solver.info() != Eigen::Success)
    {
      throw NumericsError("PCA eigensolver did not converge");
    }
    for (; filled < k; ++filled)
    {
      const Eigen::Index src = D - 1 - filled;
      basis.vectors.col(filled) = solver.eigenvectors().col(src);
      basis.values(filled) = std::sqrt(std::max(0.0, solver.eigenvalues()(src)));
    }
  }
  // Complete with unit vectors orthogonalized against the columns so far.
  for (Eigen::Index e = 0; filled < k && e < D; ++e)
  {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(D, e);
    for (int pass = 0; pass < 2; ++pass)
    {
      v -= basis.vectors.leftCols(filled) * (basis.vectors.leftCols(filled).transpose() * v);
    }
    const double n = v.norm();
    if (n > 1e-8)
    {
      basis.vectors.col(filled) = v / n;
      basis.values(filled) = 0.0;
      ++filled;
    }
  }
  normalize_signs(basis.vectors);
  return basis;
}

Eigen::MatrixXd pca_encode(const SnapshotTensor &side, const EigenBasis &basis)
{
  if (static_cast<Eigen::Index>(side.sample_size()) != basis.vectors.rows())
  {
    throw DimensionError("PCA encode: sample size does not match the basis");
  }
  return flattened(side).transpose() * basis.vectors;
}

SnapshotTensor pca_decode(const Eigen::MatrixXd &coefficients, const EigenBasis &basis,
                          const SnapshotTensor &shape_like)
{
  if (coefficients.cols() != basis.size() ||
      static_cast<Eigen::Index>(shape_like.sample_size()) != basis.vectors.rows())
  {
    throw DimensionError("PCA decode: coefficient or sample size does not match the basis");
  }
  SnapshotTensor out(static_cast<int>(coefficients.rows()), shape_like.nx(), shape_like.nt(),
                     shape_like.channels(), shape_like.dt());
  Eigen::Map<Eigen::MatrixXd>(out.data().data(), basis.vectors.rows(), coefficients.rows()) =
      basis.vectors * coefficients.transpose();
  return out;
}

json to_json(const PcaNetConfig &c)
{
  json j = to_json(c.train);
  j["k_in"] = c.k_in;
  j["k_out"] = c.k_out;
  j["hidden"] = c.hidden;
  return j;
}

PcaNetConfig pca_net_config_from_json(const json &j)
{
  PcaNetConfig c;
  c.train = train_config_from_json(j);
  try
  {
    c.k_in = j.value("k_in", c.train.truncated_modes);
    c.k_out = j.value("k_out", c.train.truncated_modes);
    c.hidden = j.value("hidden", c.hidden);
  }
  catch (const json::exception &e)
  {
    throw ConfigError(std::string("bad pca_net config: ") + e.what());
  }
  if (c.k_in < 1 || c.k_out < 1)
  {
    throw ConfigError("pca_net k_in and k_out must be positive");
  }
  return c;
}

PcaNetResult train_pca_net(const Dataset &train, const Dataset &test, const PcaNetConfig &config,
                           const EpochCallback &on_epoch)
{
  train.check();
  test.check();
  config.train.validate();
  const auto t0 = std::chrono::steady_clock::now();

  PcaNetResult result;
  auto &model = result.model;
  model.in_basis = pca_flatten_basis(train.a, config.k_in);
  model.out_basis = pca_flatten_basis(train.u, config.k_out);
  std::vector<int> dims{config.k_in};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(config.k_out);
  model.net = init_fc(config.train.seed, dims, config.train.activation);

  const Eigen::MatrixXd X = pca_encode(train.a, model.in_basis);
  const Eigen::MatrixXd Y = pca_encode(train.u, model.out_basis);
  const int n = static_cast<int>(X.rows());

  FcParams grads = model.net.zeros_like();
  AdamState adam = make_adam_state(std::as_const(model.net).tensors());
  std::mt19937_64 shuffle_rng(config.train.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  FcTape tape;

  for (int epoch = 0; epoch < config.train.epochs; ++epoch)
  {
    const double lr = scheduled_lr(config.train, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += config.train.batch_size)
    {
      const int stop = std::min(n, start + config.train.batch_size);
      const int b = stop - start;
      Eigen::MatrixXd xb(b, X.cols());
      Eigen::MatrixXd yb(b, Y.cols());
      for (int r = 0; r < b; ++r)
      {
        xb.row(r) = X.row(order[start + r]);
        yb.row(r) = Y.row(order[start + r]);
      }
      const Eigen::MatrixXd pred = fc_forward(model.net, xb, &tape);
      const Eigen::MatrixXd residual = pred - yb;
      Eigen::MatrixXd d_out(b, Y.cols());
      double loss = 0.0;
      for (int r = 0; r < b; ++r)
      {
        const double rn = residual.row(r).norm();
        const double tn = yb.row(r).norm();
        if (tn == 0.0)
        {
          throw DataError("pca_net: training target has zero norm");
        }
        loss += rn / tn / b;
        d_out.row(r) = rn > 0.0 ? Eigen::RowVectorXd(residual.row(r) / (rn * tn * b))
                                : Eigen::RowVectorXd::Zero(Y.cols());
      }
      if (!std::isfinite(loss))
      {
        throw NumericsError("pca_net loss became non-finite at epoch " + std::to_string(epoch));
      }
      loss_sum += loss * b;
      for (auto t : grads.tensors())
      {
        std::fill(t.begin(), t.end(), 0.0);
      }
      fc_backward(model.net, tape, d_out, grads);
      adam_step(model.net.tensors(), std::as_const(grads).tensors(), adam, lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / n;
    const bool eval_now =
        (epoch + 1) % config.train.eval_every == 0 || epoch + 1 == config.train.epochs;
    if (eval_now)
    {
      const SnapshotTensor pred = predict_pca_net(model, test.a, test.u);
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

SnapshotTensor predict_pca_net(const PcaNetModel &model, const SnapshotTensor &a,
                               const SnapshotTensor &u_shape_like)
{
  const Eigen::MatrixXd coeffs = fc_forward(model.net, pca_encode(a, model.in_basis));
  return pca_decode(coeffs, model.out_basis, u_shape_like);
}

void save_pca_net(const PcaNetModel &model, const std::filesystem::path &path, const json &extra)
{
  BlobFile file;
  std::vector<int> dims{model.net.input_size()};
  for (const auto &l : model.net.layers)
  {
    dims.push_back(static_cast<int>(l.W.rows()));
  }
  file.header = {{"kind", "pca_net"},
                 {"dims", dims},
                 {"activation", to_string(model.net.activation)},
                 {"in_points", model.in_basis.num_points()},
                 {"out_points", model.out_basis.num_points()},
                 {"parameter_count", parameter_count(model.net)},
                 {"extra", extra}};
  auto add_matrix = [&](const std::string &name, const Eigen::MatrixXd &m)
  { file.add(name, {m.data(), static_cast<std::size_t>(m.size())}); };
  add_matrix("in_basis.vectors", model.in_basis.vectors);
  add_matrix("in_basis.values", model.in_basis.values);
  add_matrix("out_basis.vectors", model.out_basis.vectors);
  add_matrix("out_basis.values", model.out_basis.values);
  const auto tensors = model.net.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i)
  {
    file.add("fc" + std::to_string(i / 2) + (i % 2 == 0 ? ".W" : ".b"), tensors[i]);
  }
  write_blob_file(file, path);
}

PcaNetModel load_pca_net(const std::filesystem::path &path, json *extra)
{
  const BlobFile file = read_blob_file(path);
  PcaNetModel model;
  try
  {
    if (file.header.at("kind").get<std::string>() != "pca_net")
    {
      throw DataError(path.string() + " is not a pca_net checkpoint");
    }
    const auto dims = file.header.at("dims").get<std::vector<int>>();
    model.net = init_fc(0, dims, activation_from_string(file.header.at("activation")));
    const int in_pts = file.header.at("in_points").get<int>();
    const int out_pts = file.header.at("out_points").get<int>();
    auto load_basis_blob = [&](const std::string &prefix, int pts, int k)
    {
      EigenBasis b;
      b.kind = BasisKind::Pod;
      const auto &v = file.blob(prefix + ".vectors");
      const auto &s = file.blob(prefix + ".values");
      if (v.size() != static_cast<std::size_t>(pts) * k || s.size() != static_cast<std::size_t>(k))
      {
        throw DataError("pca_net checkpoint basis '" + prefix + "' has the wrong size");
      }
      b.vectors = Eigen::Map<const Eigen::MatrixXd>(v.data(), pts, k);
      b.values = Eigen::Map<const Eigen::VectorXd>(s.data(), k);
      b.weights = Eigen::VectorXd::Ones(pts);
      return b;
    };
    model.in_basis = load_basis_blob("in_basis", in_pts, dims.front());
    model.out_basis = load_basis_blob("out_basis", out_pts, dims.back());
    auto tensors = model.net.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i)
    {
      const auto &blob = file.blob("fc" + std::to_string(i / 2) + (i % 2 == 0 ? ".W" : ".b"));
      if (blob.size() != tensors[i].size())
      {
        throw DataError("pca_net checkpoint layer size mismatch");
      }
      std::copy(blob.begin(), blob.end(), tensors[i].begin());
    }
    if (extra)
    {
      *extra = file.header.value("extra", json::object());
    }
  }
  catch (const json::exception &e)
  {
    throw DataError("bad pca_net checkpoint header in " + path.string() + ": " + e.what());
  }
  return model;
}

SvdDecayReport svd_decay_report(const SnapshotTensor &data, Axis reduce_axis)
{
  data.validate();
  if (data.nx() < 2 || data.nt() < 2)
  {
    throw DataError("svd_decay_report needs spatio-temporal data");
  }
  SvdDecayReport r;
  const int n_axis = reduce_axis == Axis::Time ? data.nt() : data.nx();
  r.separate = compute_pod_basis(data, reduce_axis, n_axis).values;
  const int k_all =
      static_cast<int>(std::min<std::size_t>(data.sample_size(), static_cast<std::size_t>(data.samples())));
  r.overall = pca_flatten_basis(data, k_all).values;
  r.k99_separate = energy_truncation(r.separate, 0.99);
  r.k99_overall = energy_truncation(r.overall, 0.99);
  return r;
}

void write_svd_report(const SvdDecayReport &report, const std::filesystem::path &dir,
                      const std::string &config_hash)
{
  std::filesystem::create_directories(dir);
  auto write_csv = [&](const std::filesystem::path &path, const Eigen::VectorXd &v)
  {
    std::ofstream out(path);
    if (!out)
    {
      throw DataError("cannot write " + path.string());
    }
    out << "# config_hash: " << config_hash << '\n' << "index,singular_value\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
      out << i << ',' << v[i] << '\n';
    }
  };
  write_csv(dir / "separate.csv", report.separate);
  write_csv(dir / "overall.csv", report.overall);
  write_json({{"config_hash", config_hash},
              {"k99_separate", report.k99_separate},
              {"k99_overall", report.k99_overall},
              {"n_separate", report.separate.size()},
              {"n_overall", report.overall.size()}},
             dir / "svd_report.json");
}

}  // namespace ronorm
