// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/norm_net.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ronorm
{

std::string to_string(Activation act)
{
  switch (act)
  {
    case Activation::Gelu:
      return "gelu";
    case Activation::Relu:
      return "relu";
    case Activation::Identity:
      return "identity";
  }
  return "unknown";
}

Activation activation_from_string(const std::string &s)
{
  if (s == "gelu")
  {
    return Activation::Gelu;
  }
  if (s == "relu")
  {
    return Activation::Relu;
  }
  if (s == "identity")
  {
    return Activation::Identity;
  }
  throw ConfigError("unknown activation '" + s + "'");
}

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd &z)
{
  switch (act)
  {
    case Activation::Gelu:
      return z.unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); });
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Identity:
      return z;
  }
  return z;
}

Eigen::MatrixXd activate_derivative(Activation act, const Eigen::MatrixXd &z)
{
  switch (act)
  {
    case Activation::Gelu:
      return z.unaryExpr([](double x) {
        const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
        const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
        return cdf + x * pdf;
      });
    case Activation::Relu:
      return z.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
    case Activation::Identity:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

namespace
{

template <typename Derived>
std::span<double> span_of(Eigen::PlainObjectBase<Derived> &m)
{
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Derived>
std::span<const double> span_of(const Eigen::PlainObjectBase<Derived> &m)
{
  return {m.data(), static_cast<std::size_t>(m.size())};
}

void check_shape(const NormShape &s)
{
  if (s.c_in < 1 || s.c_out < 1 || s.width < 1 || s.proj_width < 1 || s.n_layers < 0 ||
      s.modes < 1)
  {
    throw ConfigError("network dimensions must be positive");
  }
}

}  // namespace

std::vector<std::span<double>> NormParams::tensors()
{
  std::vector<std::span<double>> out{span_of(lift_w), span_of(lift_b)};
  for (auto &layer : layers)
  {
    out.push_back(span_of(layer.W));
    out.push_back(span_of(layer.b));
    for (auto &k : layer.K)
    {
      out.push_back(span_of(k));
    }
  }
  out.push_back(span_of(proj1_w));
  out.push_back(span_of(proj1_b));
  out.push_back(span_of(proj2_w));
  out.push_back(span_of(proj2_b));
  return out;
}

std::vector<std::span<const double>> NormParams::tensors() const
{
  std::vector<std::span<const double>> out{span_of(lift_w), span_of(lift_b)};
  for (const auto &layer : layers)
  {
    out.push_back(span_of(layer.W));
    out.push_back(span_of(layer.b));
    for (const auto &k : layer.K)
    {
      out.push_back(span_of(k));
    }
  }
  out.push_back(span_of(proj1_w));
  out.push_back(span_of(proj1_b));
  out.push_back(span_of(proj2_w));
  out.push_back(span_of(proj2_b));
  return out;
}

std::vector<std::string> NormParams::tensor_names() const
{
  std::vector<std::string> names{"lift.w", "lift.b"};
  for (std::size_t l = 0; l < layers.size(); ++l)
  {
    const std::string p = "layer" + std::to_string(l) + ".";
    names.push_back(p + "W");
    names.push_back(p + "b");
    for (std::size_t m = 0; m < layers[l].K.size(); ++m)
    {
      names.push_back(p + "K" + std::to_string(m));
    }
  }
  names.insert(names.end(), {"proj1.w", "proj1.b", "proj2.w", "proj2.b"});
  return names;
}

NormParams NormParams::zeros_like() const
{
  NormParams z = *this;
  for (auto t : z.tensors())
  {
    std::fill(t.begin(), t.end(), 0.0);
  }
  return z;
}

bool NormParams::all_finite() const
{
  for (auto t : tensors())
  {
    for (double v : t)
    {
      if (!std::isfinite(v))
      {
        return false;
      }
    }
  }
  return true;
}

NormParams init_params(std::uint64_t seed, const NormShape &shape)
{
  check_shape(shape);
  std::mt19937_64 rng(seed);
  auto uniform = [&](int rows, int cols, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
    {
      for (Eigen::Index i = 0; i < m.rows(); ++i)
      {
        m(i, j) = dist(rng);
      }
    }
    return m;
  };

  NormParams p;
  p.shape = shape;
  p.seed = seed;
  p.lift_w = uniform(shape.width, shape.c_in, shape.c_in);
  p.lift_b = Eigen::VectorXd::Zero(shape.width);
  const double k_std = 1.0 / std::sqrt(static_cast<double>(shape.width) * shape.modes);
  std::normal_distribution<double> normal(0.0, k_std);
  for (int l = 0; l < shape.n_layers; ++l)
  {
    LLayerParams layer;
    layer.W = uniform(shape.width, shape.width, shape.width);
    layer.b = Eigen::VectorXd::Zero(shape.width);
    layer.K.reserve(shape.modes);
    for (int m = 0; m < shape.modes; ++m)
    {
      Eigen::MatrixXd k(shape.width, shape.width);
      for (Eigen::Index j = 0; j < k.cols(); ++j)
      {
        for (Eigen::Index i = 0; i < k.rows(); ++i)
        {
          k(i, j) = normal(rng);
        }
      }
      layer.K.push_back(std::move(k));
    }
    p.layers.push_back(std::move(layer));
  }
  p.proj1_w = uniform(shape.proj_width, shape.width, shape.width);
  p.proj1_b = Eigen::VectorXd::Zero(shape.proj_width);
  p.proj2_w = uniform(shape.c_out, shape.proj_width, shape.proj_width);
  p.proj2_b = Eigen::VectorXd::Zero(shape.c_out);
  return p;
}

std::size_t parameter_count(const NormShape &s)
{
  const std::size_t w = s.width;
  const std::size_t per_layer = w * w + w + static_cast<std::size_t>(s.modes) * w * w;
  return w * s.c_in + w + s.n_layers * per_layer + s.proj_width * w + s.proj_width +
         static_cast<std::size_t>(s.c_out) * s.proj_width + s.c_out;
}

std::size_t parameter_count(const NormParams &params)
{
  std::size_t n = 0;
  for (auto t : params.tensors())
  {
    n += t.size();
  }
  return n;
}

SpectralPair::SpectralPair(const EigenBasis &basis)
  : analysis(basis.vectors.transpose() * basis.weights.asDiagonal()),
    synthesis(basis.vectors),
    domain_ref(basis.id())
{
}

Eigen::MatrixXd spectral_conv(const Eigen::MatrixXd &v, const std::vector<Eigen::MatrixXd> &K,
                              const SpectralPair &spectral)
{
  if (static_cast<int>(K.size()) != spectral.modes())
  {
    throw DimensionError("spectral_conv: " + std::to_string(K.size()) +
                         " mode matrices for a basis with " + std::to_string(spectral.modes()) +
                         " modes");
  }
  if (v.rows() != spectral.num_points())
  {
    throw DimensionError("spectral_conv: field point count does not match the basis");
  }
  const Eigen::MatrixXd beta = spectral.analysis * v;
  Eigen::MatrixXd mixed(beta.rows(), beta.cols());
  for (Eigen::Index m = 0; m < beta.rows(); ++m)
  {
    if (K[m].rows() != v.cols() || K[m].cols() != v.cols())
    {
      throw DimensionError("spectral_conv: mode matrix is not channels x channels");
    }
    mixed.row(m).noalias() = beta.row(m) * K[m].transpose();
  }
  return spectral.synthesis * mixed;
}

NodalField spectral_conv(const NodalField &v, const std::vector<Eigen::MatrixXd> &K,
                         const EigenBasis &basis)
{
  SpectralPair spectral(basis);
  if (!v.domain_ref.empty() && v.domain_ref != spectral.domain_ref)
  {
    throw DimensionError("spectral_conv: field lives on a different domain than the basis");
  }
  return {spectral_conv(v.values, K, spectral), spectral.domain_ref};
}

Eigen::MatrixXd forward(const NormParams &params, const Eigen::MatrixXd &input,
                        const SpectralPair &spectral, ForwardTape *tape)
{
  const auto &s = params.shape;
  if (input.cols() != s.c_in)
  {
    throw DimensionError("forward: input has " + std::to_string(input.cols()) +
                         " channels, network expects " + std::to_string(s.c_in));
  }
  if (input.rows() != spectral.num_points())
  {
    throw DimensionError("forward: input point count does not match the basis");
  }
  if (spectral.modes() != s.modes)
  {
    throw DimensionError("forward: basis has " + std::to_string(spectral.modes()) +
                         " modes, network was built for " + std::to_string(s.modes));
  }

  Eigen::MatrixXd h = input * params.lift_w.transpose();
  h.rowwise() += params.lift_b.transpose();
  if (tape)
  {
    tape->input = input;
    tape->hidden.assign(1, h);
    tape->pre_act.clear();
    tape->coeffs.clear();
  }

  for (const auto &layer : params.layers)
  {
    const Eigen::MatrixXd beta = spectral.analysis * h;
    Eigen::MatrixXd mixed(beta.rows(), beta.cols());
    for (Eigen::Index m = 0; m < beta.rows(); ++m)
    {
      mixed.row(m).noalias() = beta.row(m) * layer.K[m].transpose();
    }
    Eigen::MatrixXd z = h * layer.W.transpose();
    z.noalias() += spectral.synthesis * mixed;
    z.rowwise() += layer.b.transpose();
    h = activate(s.activation, z);
    if (tape)
    {
      tape->coeffs.push_back(beta);
      tape->pre_act.push_back(std::move(z));
      tape->hidden.push_back(h);
    }
  }

  Eigen::MatrixXd y1 = h * params.proj1_w.transpose();
  y1.rowwise() += params.proj1_b.transpose();
  Eigen::MatrixXd a1 = activate(s.activation, y1);
  Eigen::MatrixXd out = a1 * params.proj2_w.transpose();
  out.rowwise() += params.proj2_b.transpose();
  if (tape)
  {
    tape->proj_pre = std::move(y1);
    tape->proj_hidden = std::move(a1);
    tape->output = out;
  }
  return out;
}

NodalField forward(const NormParams &params, const NodalField &input, const EigenBasis &basis)
{
  SpectralPair spectral(basis);
  if (!input.domain_ref.empty() && input.domain_ref != spectral.domain_ref)
  {
    throw DimensionError("forward: input lives on a different domain than the basis");
  }
  return {forward(params, input.values, spectral), spectral.domain_ref};
}

Eigen::MatrixXd backward(const NormParams &params, const ForwardTape &tape,
                         const Eigen::MatrixXd &d_output, const SpectralPair &spectral,
                         NormParams &grads)
{
  const auto act = params.shape.activation;
  if (d_output.rows() != tape.output.rows() || d_output.cols() != tape.output.cols())
  {
    throw DimensionError("backward: output gradient shape mismatch");
  }

  grads.proj2_w.noalias() += d_output.transpose() * tape.proj_hidden;
  grads.proj2_b += d_output.colwise().sum().transpose();
  Eigen::MatrixXd d_y1 = (d_output * params.proj2_w).cwiseProduct(
      activate_derivative(act, tape.proj_pre));
  grads.proj1_w.noalias() += d_y1.transpose() * tape.hidden.back();
  grads.proj1_b += d_y1.colwise().sum().transpose();
  Eigen::MatrixXd d_h = d_y1 * params.proj1_w;

  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l)
  {
    const auto &layer = params.layers[l];
    auto &g = grads.layers[l];
    if (!tape.pre_act[l].allFinite())
    {
      throw NumericsError("non-finite activations in L-layer " + std::to_string(l));
    }
    const Eigen::MatrixXd d_z = d_h.cwiseProduct(activate_derivative(act, tape.pre_act[l]));
    const Eigen::MatrixXd &h_prev = tape.hidden[l];
    g.W.noalias() += d_z.transpose() * h_prev;
    g.b += d_z.colwise().sum().transpose();

    const Eigen::MatrixXd d_mixed = spectral.synthesis.transpose() * d_z;
    const Eigen::MatrixXd &beta = tape.coeffs[l];
    Eigen::MatrixXd d_beta(beta.rows(), beta.cols());
    for (Eigen::Index m = 0; m < beta.rows(); ++m)
    {
      g.K[m].noalias() += d_mixed.row(m).transpose() * beta.row(m);
      d_beta.row(m).noalias() = d_mixed.row(m) * layer.K[m];
    }
    d_h = d_z * layer.W;
    d_h.noalias() += spectral.analysis.transpose() * d_beta;
  }

  grads.lift_w.noalias() += d_h.transpose() * tape.input;
  grads.lift_b += d_h.colwise().sum().transpose();
  return d_h * params.lift_w;
}

void save_params(const NormParams &params, const std::filesystem::path &path, const json &extra)
{
  const auto &s = params.shape;
  BlobFile file;
  file.header = {{"kind", "norm_params"},
                 {"c_in", s.c_in},
                 {"c_out", s.c_out},
                 {"width", s.width},
                 {"proj_width", s.proj_width},
                 {"n_layers", s.n_layers},
                 {"modes", s.modes},
                 {"activation", to_string(s.activation)},
                 {"seed", params.seed},
                 {"parameter_count", parameter_count(params)},
                 {"extra", extra}};
  const auto names = params.tensor_names();
  const auto tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i)
  {
    file.add(names[i], tensors[i]);
  }
  write_blob_file(file, path);
}

NormParams load_params(const std::filesystem::path &path, json *extra)
{
  const BlobFile file = read_blob_file(path);
  NormShape s;
  std::uint64_t seed = 0;
  try
  {
    s.c_in = file.header.at("c_in").get<int>();
    s.c_out = file.header.at("c_out").get<int>();
    s.width = file.header.at("width").get<int>();
    s.proj_width = file.header.at("proj_width").get<int>();
    s.n_layers = file.header.at("n_layers").get<int>();
    s.modes = file.header.at("modes").get<int>();
    s.activation = activation_from_string(file.header.at("activation").get<std::string>());
    seed = file.header.at("seed").get<std::uint64_t>();
    if (extra)
    {
      *extra = file.header.value("extra", json::object());
    }
  }
  catch (const json::exception &e)
  {
    throw DataError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
  NormParams p = init_params(seed, s).zeros_like();
  const auto names = p.tensor_names();
  auto tensors = p.tensors();
  if (file.blobs.size() != tensors.size())
  {
    throw DataError("checkpoint tensor count mismatch in " + path.string());
  }
  for (std::size_t i = 0; i < tensors.size(); ++i)
  {
    const auto &blob = file.blobs[i];
    if (blob.first != names[i] || blob.second.size() != tensors[i].size())
    {
      throw DataError("checkpoint tensor '" + blob.first + "' does not match the expected layout");
    }
    std::copy(blob.second.begin(), blob.second.end(), tensors[i].begin());
  }
  return p;
}

}  // namespace ronorm
