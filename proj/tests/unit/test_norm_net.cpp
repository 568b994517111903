// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "../common/gradcheck.hpp"
#include "helpers.hpp"
#include "ronorm/norm_net.hpp"

using namespace ronorm;
using ronorm::testing::random_matrix;

namespace
{

NormShape small_shape(int c_in, int c_out, int width, int proj, int layers, int modes,
                      Activation act = Activation::Gelu)
{
  NormShape s;
  s.c_in = c_in;
  s.c_out = c_out;
  s.width = width;
  s.proj_width = proj;
  s.n_layers = layers;
  s.modes = modes;
  s.activation = act;
  return s;
}

// Scalar-loop reference for the kernel operator; shares no code with the library.
Eigen::MatrixXd loop_spectral_conv(const Eigen::MatrixXd &v, const std::vector<Eigen::MatrixXd> &K,
                                   const EigenBasis &basis)
{
  const int n = basis.num_points();
  const int modes = basis.size();
  const int c = static_cast<int>(v.cols());
  std::vector<std::vector<double>> beta(modes, std::vector<double>(c, 0.0));
  for (int m = 0; m < modes; ++m)
  {
    for (int ch = 0; ch < c; ++ch)
    {
      for (int i = 0; i < n; ++i)
      {
        beta[m][ch] += basis.vectors(i, m) * basis.weights[i] * v(i, ch);
      }
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, c);
  for (int m = 0; m < modes; ++m)
  {
    for (int o = 0; o < c; ++o)
    {
      double mixed = 0.0;
      for (int ch = 0; ch < c; ++ch)
      {
        mixed += K[m](o, ch) * beta[m][ch];
      }
      for (int i = 0; i < n; ++i)
      {
        out(i, o) += basis.vectors(i, m) * mixed;
      }
    }
  }
  return out;
}

double scalar_act(Activation act, double z)
{
  switch (act)
  {
    case Activation::Gelu:
      return 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
    case Activation::Relu:
      return z > 0 ? z : 0.0;
    case Activation::Identity:
      return z;
  }
  return z;
}

Eigen::MatrixXd loop_affine(const Eigen::MatrixXd &x, const Eigen::MatrixXd &W, const Eigen::VectorXd &b)
{
  Eigen::MatrixXd y(x.rows(), W.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
  {
    for (Eigen::Index o = 0; o < W.rows(); ++o)
    {
      double s = b[o];
      for (Eigen::Index k = 0; k < W.cols(); ++k)
      {
        s += W(o, k) * x(i, k);
      }
      y(i, o) = s;
    }
  }
  return y;
}

Eigen::MatrixXd loop_act(Activation act, Eigen::MatrixXd z)
{
  for (Eigen::Index i = 0; i < z.size(); ++i)
  {
    z.data()[i] = scalar_act(act, z.data()[i]);
  }
  return z;
}

Eigen::MatrixXd loop_forward(const NormParams &p, const Eigen::MatrixXd &x, const EigenBasis &basis)
{
  Eigen::MatrixXd h = loop_affine(x, p.lift_w, p.lift_b);
  for (const auto &layer : p.layers)
  {
    Eigen::MatrixXd z = loop_affine(h, layer.W, layer.b) + loop_spectral_conv(h, layer.K, basis);
    h = loop_act(p.shape.activation, z);
  }
  const Eigen::MatrixXd a1 = loop_act(p.shape.activation, loop_affine(h, p.proj1_w, p.proj1_b));
  return loop_affine(a1, p.proj2_w, p.proj2_b);
}

std::vector<Eigen::MatrixXd> random_kernels(int modes, int c, std::mt19937_64 &rng)
{
  std::vector<Eigen::MatrixXd> K;
  for (int m = 0; m < modes; ++m)
  {
    K.push_back(random_matrix(c, c, rng));
  }
  return K;
}

const MeshOperators &square_ops()
{
  static const MeshOperators ops = assemble_operators(ronorm::testing::grid_mesh(6, 6, 1.0, 1.0));
  return ops;
}

}  // namespace

TEST_SUITE("norm_net")
{
  TEST_CASE("parameter count formula")
  {
    CHECK(parameter_count(small_shape(1, 1, 1, 1, 0, 1)) == 6);
    // 16+16 + 4*(256+16+32*256) + 128*16+128 + 128+1
    CHECK(parameter_count(small_shape(1, 1, 16, 128, 4, 32)) == 36193);
    const NormShape s = small_shape(2, 3, 5, 7, 2, 4);
    const NormParams p = init_params(1, s);
    CHECK(parameter_count(p) == parameter_count(s));
    std::size_t entries = 0;
    for (const auto &t : p.tensors())
    {
      entries += t.size();
    }
    CHECK(entries == parameter_count(s));
  }

  TEST_CASE("count does not depend on the discretization")
  {
    const NormShape s = small_shape(1, 1, 4, 8, 2, 3);
    const NormParams p = init_params(3, s);
    const std::size_t count = parameter_count(p);
    for (int n : {7, 14, 28})
    {
      const SpectralPair sp(fourier_time_basis(n, 3));
      std::mt19937_64 rng(n);
      CHECK(forward(p, random_matrix(n, 1, rng), sp).rows() == n);
      CHECK(parameter_count(p) == count);
    }
  }

  TEST_CASE("initialization is seeded")
  {
    const NormShape s = small_shape(1, 2, 6, 10, 2, 5);
    const NormParams a = init_params(0, s);
    const NormParams b = init_params(0, s);
    const NormParams c = init_params(1, s);
    bool differs = false;
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    const auto tc = c.tensors();
    for (std::size_t t = 0; t < ta.size(); ++t)
    {
      for (std::size_t i = 0; i < ta[t].size(); ++i)
      {
        CHECK(ta[t][i] == tb[t][i]);
        differs = differs || ta[t][i] != tc[t][i];
      }
    }
    CHECK(differs);
    CHECK(a.all_finite());
    CHECK(a.lift_b.cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.lift_w.cwiseAbs().maxCoeff() <= 1.0);  // fan_in 1
    CHECK(a.layers[0].W.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
  }

  TEST_CASE("kernel initialization variance")
  {
    const NormShape s = small_shape(1, 1, 20, 4, 1, 50);
    const NormParams p = init_params(9, s);
    double sum = 0.0;
    double sq = 0.0;
    std::size_t n = 0;
    for (const auto &K : p.layers[0].K)
    {
      sum += K.sum();
      sq += K.squaredNorm();
      n += K.size();
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(var == doctest::Approx(1.0 / (20.0 * 50.0)).epsilon(0.05));
  }

  TEST_CASE("spectral_conv special kernels")
  {
    const auto &ops = square_ops();
    const EigenBasis basis = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 8);
    const SpectralPair sp(basis);
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd v = random_matrix(basis.num_points(), 3, rng);

    const std::vector<Eigen::MatrixXd> zero(8, Eigen::MatrixXd::Zero(3, 3));
    CHECK(spectral_conv(v, zero, sp).cwiseAbs().maxCoeff() == 0.0);

    const std::vector<Eigen::MatrixXd> eye(8, Eigen::MatrixXd::Identity(3, 3));
    const Eigen::MatrixXd trunc = reconstruct(project(v, basis), basis);
    const Eigen::MatrixXd once = spectral_conv(v, eye, sp);
    CHECK((once - trunc).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((spectral_conv(once, eye, sp) - once).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("spectral_conv is linear in the field and in the kernel")
  {
    const auto &ops = square_ops();
    const EigenBasis basis = compute_lbo_basis(ops.stiffness, ops.lumped_mass, 6);
    const SpectralPair sp(basis);
    std::mt19937_64 rng(4);
    const int n = basis.num_points();
    const Eigen::MatrixXd v1 = random_matrix(n, 2, rng);
    const Eigen::MatrixXd v2 = random_matrix(n, 2, rng);
    const auto K1 = random_kernels(6, 2, rng);
    const auto K2 = random_kernels(6, 2, rng);
    const double a = 0.7;
    const double b = -1.3;
    const Eigen::MatrixXd lhs = spectral_conv(a * v1 + b * v2, K1, sp);
    const Eigen::MatrixXd rhs = a * spectral_conv(v1, K1, sp) + b * spectral_conv(v2, K1, sp);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);

    std::vector<Eigen::MatrixXd> Ksum;
    for (int m = 0; m < 6; ++m)
    {
      Ksum.push_back(a * K1[m] + b * K2[m]);
    }
    const Eigen::MatrixXd lhs_k = spectral_conv(v1, Ksum, sp);
    const Eigen::MatrixXd rhs_k = a * spectral_conv(v1, K1, sp) + b * spectral_conv(v1, K2, sp);
    CHECK((lhs_k - rhs_k).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("spectral_conv matches the loop oracle")
  {
    const EigenBasis basis = fourier_time_basis(5, 3);
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd v = random_matrix(5, 2, rng);
    const auto K = random_kernels(3, 2, rng);
    const Eigen::MatrixXd got = spectral_conv(v, K, SpectralPair(basis));
    CHECK((got - loop_spectral_conv(v, K, basis)).cwiseAbs().maxCoeff() <= 1e-10);

    const NodalField f = spectral_conv(NodalField{v, basis.id()}, K, basis);
    CHECK(f.domain_ref == basis.id());
    CHECK((f.values - got).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("spectral_conv errors")
  {
    const EigenBasis basis = fourier_time_basis(5, 3);
    const SpectralPair sp(basis);
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd v = random_matrix(5, 2, rng);
    CHECK_THROWS_AS(spectral_conv(v, random_kernels(2, 2, rng), sp), DimensionError);
    CHECK_THROWS_AS(spectral_conv(random_matrix(6, 2, rng), random_kernels(3, 2, rng), sp),
                    DimensionError);
    CHECK_THROWS_AS(spectral_conv(v, random_kernels(3, 3, rng), sp), DimensionError);
    const NodalField elsewhere{v, fourier_time_basis(5, 2).id()};
    CHECK_THROWS_AS(spectral_conv(elsewhere, random_kernels(3, 2, rng), basis), DimensionError);
  }

  TEST_CASE("forward matches the loop oracle")
  {
    const EigenBasis basis = fourier_time_basis(7, 4);
    for (Activation act : {Activation::Gelu, Activation::Relu, Activation::Identity})
    {
      NormParams p = init_params(5, small_shape(2, 3, 4, 6, 3, 4, act));
      std::mt19937_64 rng(6);
      // Non-zero biases so that every term is exercised.
      p.lift_b = random_matrix(4, 1, rng);
      for (auto &l : p.layers)
      {
        l.b = random_matrix(4, 1, rng);
      }
      p.proj1_b = random_matrix(6, 1, rng);
      p.proj2_b = random_matrix(3, 1, rng);
      const Eigen::MatrixXd x = random_matrix(7, 2, rng);
      const Eigen::MatrixXd got = forward(p, x, SpectralPair(basis));
      CHECK((got - loop_forward(p, x, basis)).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  TEST_CASE("zero parameters give a zero output")
  {
    const EigenBasis basis = fourier_time_basis(9, 3);
    for (Activation act : {Activation::Gelu, Activation::Relu, Activation::Identity})
    {
      const NormParams p = init_params(1, small_shape(2, 2, 4, 5, 2, 3, act)).zeros_like();
      std::mt19937_64 rng(3);
      CHECK(forward(p, random_matrix(9, 2, rng), SpectralPair(basis)).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("identity configuration returns its input")
  {
    const EigenBasis basis = fourier_time_basis(8, 3);
    NormParams p = init_params(1, small_shape(2, 2, 2, 2, 3, 3, Activation::Identity)).zeros_like();
    p.lift_w.setIdentity();
    for (auto &l : p.layers)
    {
      l.W.setIdentity();
    }
    p.proj1_w.setIdentity();
    p.proj2_w.setIdentity();
    std::mt19937_64 rng(12);
    const Eigen::MatrixXd x = random_matrix(8, 2, rng);
    CHECK((forward(p, x, SpectralPair(basis)) - x).cwiseAbs().maxCoeff() <= 1e-14);
  }

  TEST_CASE("forward is deterministic and checks shapes")
  {
    const EigenBasis basis = fourier_time_basis(10, 4);
    const SpectralPair sp(basis);
    const NormParams p = init_params(2, small_shape(1, 1, 4, 8, 2, 4));
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd x = random_matrix(10, 1, rng);
    CHECK(forward(p, x, sp) == forward(p, x, sp));
    CHECK_THROWS_AS(forward(p, random_matrix(10, 2, rng), sp), DimensionError);
    CHECK_THROWS_AS(forward(p, random_matrix(11, 1, rng), sp), DimensionError);
    CHECK_THROWS_AS(forward(p, x, SpectralPair(fourier_time_basis(10, 3))), DimensionError);
    CHECK_THROWS_AS(forward(p, NodalField{x, "other-domain"}, basis), DimensionError);
    CHECK(forward(p, NodalField{x, ""}, basis).domain_ref == basis.id());
  }

  TEST_CASE("analytic gradient agrees with central differences")
  {
    // 6 nodes: a 3 x 2 grid.
    const TriMesh mesh = ronorm::testing::grid_mesh(3, 2, 1.0, 0.5);
    const MeshOperators small = assemble_operators(mesh);
    const EigenBasis basis = compute_lbo_basis(small.stiffness, small.lumped_mass, 3);
    const SpectralPair sp(basis);
    NormParams p = init_params(21, small_shape(1, 1, 4, 5, 2, 3, Activation::Gelu));
    std::mt19937_64 rng(21);
    for (auto &l : p.layers)
    {
      l.b = 0.1 * random_matrix(4, 1, rng);
    }
    const Eigen::MatrixXd x = random_matrix(6, 1, rng);
    const Eigen::MatrixXd G = random_matrix(6, 1, rng);
    const auto devs = ronorm::testing::check_network_gradient(p, x, sp, G);
    for (const auto &d : devs)
    {
      INFO(d.name);
      CHECK(d.max_relative <= 1e-5);
    }
  }

  TEST_CASE("non-finite activations are reported with the layer")
  {
    const EigenBasis basis = fourier_time_basis(6, 2);
    const SpectralPair sp(basis);
    NormParams p = init_params(4, small_shape(1, 1, 3, 4, 2, 2));
    p.layers[1].b[0] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(p.all_finite());
    ForwardTape tape;
    const Eigen::MatrixXd out = forward(p, Eigen::MatrixXd::Ones(6, 1), sp, &tape);
    NormParams g = p.zeros_like();
    try
    {
      backward(p, tape, Eigen::MatrixXd::Ones(out.rows(), out.cols()), sp, g);
      FAIL("expected a NumericsError");
    }
    catch (const NumericsError &e)
    {
      CHECK(std::string(e.what()).find("L-layer 1") != std::string::npos);
      CHECK(e.category() == ErrorCategory::Numerics);
    }
  }

  TEST_CASE("checkpoint round trip")
  {
    const NormParams p = init_params(13, small_shape(2, 1, 5, 6, 2, 4, Activation::Relu));
    const auto dir = ronorm::testing::temp_dir("norm_ckpt");
    save_params(p, dir / "p.ckpt", json{{"config_hash", "abc"}});
    json extra;
    const NormParams back = load_params(dir / "p.ckpt", &extra);
    CHECK(extra.at("config_hash") == "abc");
    CHECK(back.seed == p.seed);
    CHECK(back.shape.activation == Activation::Relu);
    CHECK(back.tensor_names() == p.tensor_names());
    const auto a = p.tensors();
    const auto b = back.tensors();
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t)
    {
      CHECK(std::equal(a[t].begin(), a[t].end(), b[t].begin(), b[t].end()));
    }
    CHECK_THROWS_AS(load_params(dir / "missing.ckpt"), DataError);
  }
}
