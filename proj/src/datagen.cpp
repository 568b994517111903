// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/SparseCholesky>

#include "ronorm/hash.hpp"

namespace ronorm
{

void GrfSpec::validate(int basis_size) const
{
  if (!(alpha > 0.0) || !(tau > 0.0) || !(amplitude > 0.0))
  {
    throw ConfigError("GRF needs alpha > 0, tau > 0 and amplitude > 0");
  }
  if (n_modes < 0 || n_modes > basis_size)
  {
    throw ConfigError("GRF n_modes " + std::to_string(n_modes) + " exceeds the basis size " +
                      std::to_string(basis_size));
  }
}

json to_json(const GrfSpec &g)
{
  return {{"alpha", g.alpha},
          {"tau", g.tau},
          {"n_modes", g.n_modes},
          {"seed", g.seed},
          {"amplitude", g.amplitude},
          {"zero_mean", g.zero_mean}};
}

GrfSpec grf_spec_from_json(const json &j, const GrfSpec &defaults)
{
  GrfSpec g = defaults;
  try
  {
    g.alpha = j.value("alpha", g.alpha);
    g.tau = j.value("tau", g.tau);
    g.n_modes = j.value("n_modes", g.n_modes);
    g.seed = j.value("seed", g.seed);
    g.amplitude = j.value("amplitude", g.amplitude);
    g.zero_mean = j.value("zero_mean", g.zero_mean);
  }
  catch (const json::exception &e)
  {
    throw ConfigError(std::string("bad grf config: ") + e.what());
  }
  return g;
}

Eigen::VectorXd grf_std(const EigenBasis &basis, const GrfSpec &spec)
{
  spec.validate(basis.size());
  const int k = spec.n_modes > 0 ? spec.n_modes : basis.size();
  Eigen::VectorXd s(k);
  for (int i = 0; i < k; ++i)
  {
    s[i] = spec.amplitude * std::pow(basis.values[i] + spec.tau * spec.tau, -0.5 * spec.alpha);
  }
  if (spec.zero_mean)
  {
    s[0] = 0.0;
  }
  return s;
}

Eigen::VectorXd grf_from_noise(const EigenBasis &basis, const GrfSpec &spec,
                               std::span<const double> noise)
{
  if (basis.kind == BasisKind::Pod)
  {
    throw ConfigError("GRF sampling needs an lbo or fourier basis");
  }
  const Eigen::VectorXd s = grf_std(basis, spec);
  if (noise.size() != static_cast<std::size_t>(s.size()))
  {
    throw DimensionError("GRF noise length does not match the number of modes");
  }
  const Eigen::VectorXd c =
      s.cwiseProduct(Eigen::Map<const Eigen::VectorXd>(noise.data(), s.size()));
  return basis.vectors.leftCols(s.size()) * c;
}

Eigen::VectorXd sample_grf(const EigenBasis &basis, const GrfSpec &spec)
{
  const int k = spec.n_modes > 0 ? spec.n_modes : basis.size();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::vector<double> noise(k);
  for (auto &z : noise)
  {
    z = normal(rng);
  }
  return grf_from_noise(basis, spec, noise);
}

void PdeRun::validate() const
{
  if (!(dt > 0.0) || n_t < 1 || !(coefficient > 0.0))
  {
    throw ConfigError("PDE run needs dt > 0, n_t >= 1 and a positive coefficient");
  }
}

json to_json(const PdeRun &r)
{
  return {{"dt", r.dt}, {"n_t", r.n_t}, {"coefficient", r.coefficient}};
}

PdeRun pde_run_from_json(const json &j, const PdeRun &defaults)
{
  PdeRun r = defaults;
  try
  {
    r.dt = j.value("dt", r.dt);
    r.n_t = j.value("n_t", r.n_t);
    r.coefficient = j.value("coefficient", r.coefficient);
  }
  catch (const json::exception &e)
  {
    throw ConfigError(std::string("bad pde config: ") + e.what());
  }
  return r;
}

Eigen::MatrixXd solve_heat(const MeshOperators &ops, const Eigen::VectorXd &initial,
                           const Eigen::MatrixXd &source, const PdeRun &run)
{
  run.validate();
  const int n = ops.stiffness.n;
  if (initial.size() != n || (source.size() > 0 && (source.rows() != n || source.cols() < run.n_t)))
  {
    throw DimensionError("solve_heat: initial field or source has the wrong shape");
  }
  Eigen::SparseMatrix<double> A = ops.stiffness.to_sparse() * (run.dt * run.coefficient);
  for (int i = 0; i < n; ++i)
  {
    A.coeffRef(i, i) += ops.lumped_mass[i];
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success)
  {
    throw NumericsError("solve_heat: factorization of M + dt*kappa*L failed");
  }
  Eigen::MatrixXd out(n, run.n_t);
  Eigen::VectorXd T = initial;
  for (int step = 0; step < run.n_t; ++step)
  {
    Eigen::VectorXd rhs = ops.lumped_mass.cwiseProduct(T);
    if (source.size() > 0)
    {
      rhs += run.dt * ops.lumped_mass.cwiseProduct(source.col(step));
    }
    T = solver.solve(rhs);
    out.col(step) = T;
  }
  return out;
}

double estimate_lambda_max(const MeshOperators &ops, int iterations)
{
  const int n = ops.stiffness.n;
  const Eigen::VectorXd inv_sqrt_m = ops.lumped_mass.cwiseSqrt().cwiseInverse();
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i)
  {
    x[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.01 * i);
  }
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it)
  {
    const Eigen::VectorXd y =
        inv_sqrt_m.cwiseProduct(ops.stiffness.multiply(inv_sqrt_m.cwiseProduct(x)));
    lambda = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0)
    {
      return 0.0;
    }
    x = y / norm;
  }
  return lambda;
}

void check_wave_stability(const MeshOperators &ops, const PdeRun &run)
{
  run.validate();
  // Power iteration approaches lambda_max from below.
  const double lambda = 1.05 * estimate_lambda_max(ops);
  const double limit = 2.0 / std::sqrt(run.coefficient * lambda);
  if (!(run.dt < limit))
  {
    throw NumericsError("wave time step " + std::to_string(run.dt) +
                        " violates the leapfrog stability limit " + std::to_string(limit));
  }
}

Eigen::MatrixXd solve_wave_general(const MeshOperators &ops, const Eigen::VectorXd &u0,
                                   const Eigen::MatrixXd &forcing, const PdeRun &run)
{
  check_wave_stability(ops, run);
  const int n = ops.stiffness.n;
  if (u0.size() != n || (forcing.size() > 0 && (forcing.rows() != n || forcing.cols() < run.n_t)))
  {
    throw DimensionError("solve_wave: initial field or forcing has the wrong shape");
  }
  const Eigen::VectorXd inv_m = ops.lumped_mass.cwiseInverse();
  auto accel = [&](const Eigen::VectorXd &u, int step)
  {
    Eigen::VectorXd a = -run.coefficient * inv_m.cwiseProduct(ops.stiffness.multiply(u));
    if (forcing.size() > 0)
    {
      a += forcing.col(step);
    }
    return a;
  };
  const double dt2 = run.dt * run.dt;
  Eigen::MatrixXd out(n, run.n_t);
  Eigen::VectorXd prev = u0;
  Eigen::VectorXd cur = u0 + 0.5 * dt2 * accel(u0, 0);
  out.col(0) = cur;
  for (int step = 1; step < run.n_t; ++step)
  {
    Eigen::VectorXd next = 2.0 * cur - prev + dt2 * accel(cur, step);
    prev = std::move(cur);
    cur = std::move(next);
    out.col(step) = cur;
  }
  return out;
}

Eigen::MatrixXd solve_wave(const MeshOperators &ops, int node, std::span<const double> signal,
                           const PdeRun &run)
{
  const int n = ops.stiffness.n;
  if (node < 0 || node >= n || signal.size() < static_cast<std::size_t>(run.n_t))
  {
    throw DimensionError("solve_wave: source node out of range or signal too short");
  }
  Eigen::MatrixXd forcing = Eigen::MatrixXd::Zero(n, run.n_t);
  for (int t = 0; t < run.n_t; ++t)
  {
    forcing(node, t) = signal[t];
  }
  return solve_wave_general(ops, Eigen::VectorXd::Zero(n), forcing, run);
}

double wave_energy(const MeshOperators &ops, const Eigen::VectorXd &u0, const Eigen::VectorXd &u1,
                   const PdeRun &run)
{
  const Eigen::VectorXd v = (u1 - u0) / run.dt;
  const Eigen::VectorXd m = 0.5 * (u0 + u1);
  return 0.5 * (v.cwiseAbs2().dot(ops.lumped_mass) +
                run.coefficient * m.dot(ops.stiffness.multiply(m)));
}

std::string to_string(DataCase c)
{
  switch (c)
  {
    case DataCase::HeatIc:
      return "heat_ic";
    case DataCase::HeatLayout:
      return "heat_layout";
    case DataCase::WaveForward:
      return "wave_forward";
    case DataCase::WaveInverse:
      return "wave_inverse";
    case DataCase::HeatToFinal:
      return "heat_to_final";
  }
  return "unknown";
}

DataCase data_case_from_string(const std::string &s)
{
  for (auto c : {DataCase::HeatIc, DataCase::HeatLayout, DataCase::WaveForward,
                 DataCase::WaveInverse, DataCase::HeatToFinal})
  {
    if (to_string(c) == s)
    {
      return c;
    }
  }
  throw ConfigError("unknown dataset case '" + s + "'");
}

MappingKind mapping_kind_for(DataCase c)
{
  switch (c)
  {
    case DataCase::HeatIc:
    case DataCase::HeatLayout:
      return MappingKind::IncreaseFromSpace;
    case DataCase::WaveForward:
      return MappingKind::IncreaseFromTime;
    case DataCase::WaveInverse:
      return MappingKind::DecreaseToTime;
    case DataCase::HeatToFinal:
      return MappingKind::DecreaseToSpace;
  }
  return MappingKind::IncreaseFromSpace;
}

namespace
{

bool is_wave(DataCase c)
{
  return c == DataCase::WaveForward || c == DataCase::WaveInverse;
}

// Amplitude that puts the lowest mode at O(1) in d dimensions.
double unit_amplitude(const GrfSpec &g, double dim)
{
  return std::pow(g.tau, g.alpha - 0.5 * dim);
}

}  // namespace

DatasetSpec default_dataset_spec(DataCase c)
{
  DatasetSpec s;
  s.data_case = c;
  s.grf.zero_mean = true;
  if (is_wave(c))
  {
    s.run = {0.05, 100, 0.1};
    s.grf.alpha = 3.5;
    s.grf.tau = 5.0;
    s.grf.amplitude = unit_amplitude(s.grf, 1.0);
  }
  else
  {
    s.run = {0.002, 50, 1.0};
    s.grf.alpha = 3.0;
    s.grf.tau = 3.0;
    s.grf.amplitude = unit_amplitude(s.grf, 2.0);
  }
  return s;
}

json to_json(const DatasetSpec &s)
{
  return {{"case", to_string(s.data_case)},
          {"n_train", s.n_train},
          {"n_test", s.n_test},
          {"seed", s.seed},
          {"pde", to_json(s.run)},
          {"grf", to_json(s.grf)},
          {"mesh", s.mesh_path},
          {"n_sources", s.n_sources},
          {"source_radius", s.source_radius},
          {"source_strength", s.source_strength}};
}

DatasetSpec dataset_spec_from_json(const json &j)
{
  try
  {
    DatasetSpec s = default_dataset_spec(data_case_from_string(j.at("case").get<std::string>()));
    s.n_train = j.value("n_train", s.n_train);
    s.n_test = j.value("n_test", s.n_test);
    s.seed = j.value("seed", s.seed);
    if (j.contains("pde"))
    {
      s.run = pde_run_from_json(j["pde"], s.run);
    }
    if (j.contains("grf"))
    {
      s.grf = grf_spec_from_json(j["grf"], s.grf);
    }
    s.mesh_path = j.value("mesh", s.mesh_path);
    s.n_sources = j.value("n_sources", s.n_sources);
    s.source_radius = j.value("source_radius", s.source_radius);
    s.source_strength = j.value("source_strength", s.source_strength);
    if (s.n_train < 1 || s.n_test < 1 || s.n_sources < 1 || !(s.source_radius > 0.0))
    {
      throw ConfigError("dataset counts, source count and source radius must be positive");
    }
    s.run.validate();
    return s;
  }
  catch (const json::exception &e)
  {
    throw ConfigError(std::string("bad dataset config: ") + e.what());
  }
}

int center_node(const TriMesh &mesh)
{
  Eigen::Vector3d lo = mesh.vertices.front();
  Eigen::Vector3d hi = lo;
  for (const auto &v : mesh.vertices)
  {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Eigen::Vector3d c = 0.5 * (lo + hi);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.num_vertices(); ++i)
  {
    const double d = (mesh.vertices[i] - c).squaredNorm();
    if (d < best_d)
    {
      best_d = d;
      best = i;
    }
  }
  return best;
}

namespace
{

std::uint64_t sample_seed(std::uint64_t seed, const std::string &split, int index)
{
  const std::uint32_t split_id = split == "train" ? 0u : split == "test" ? 1u : 2u;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    split_id, static_cast<std::uint32_t>(index)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double bbox_diagonal(const TriMesh &mesh)
{
  Eigen::Vector3d lo = mesh.vertices.front();
  Eigen::Vector3d hi = lo;
  for (const auto &v : mesh.vertices)
  {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

Eigen::VectorXd source_layout(const DatasetSpec &spec, const TriMesh &mesh, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, mesh.num_vertices() - 1);
  const double r = spec.source_radius * bbox_diagonal(mesh);
  std::vector<Eigen::Vector3d> centers;
  int tries = 0;
  while (static_cast<int>(centers.size()) < spec.n_sources)
  {
    if (++tries > 10000)
    {
      throw DataError("heat_layout: could not place non-overlapping sources; reduce the radius");
    }
    const Eigen::Vector3d c = mesh.vertices[pick(rng)];
    const bool clear = std::all_of(centers.begin(), centers.end(),
                                   [&](const Eigen::Vector3d &o) { return (o - c).norm() >= 2 * r; });
    if (clear)
    {
      centers.push_back(c);
    }
  }
  Eigen::VectorXd layout = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int i = 0; i < mesh.num_vertices(); ++i)
  {
    for (const auto &c : centers)
    {
      if ((mesh.vertices[i] - c).norm() <= r)
      {
        layout[i] = spec.source_strength;
      }
    }
  }
  return layout;
}

Eigen::MatrixXd layout_source(const Eigen::VectorXd &layout, const PdeRun &run)
{
  const double period = run.n_t * run.dt;
  Eigen::MatrixXd s(layout.size(), run.n_t);
  for (int n = 0; n < run.n_t; ++n)
  {
    const double t = n * run.dt;
    s.col(n) = layout * (1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t / period));
  }
  return s;
}

Eigen::VectorXd time_integral(const Eigen::MatrixXd &trajectory, double dt)
{
  return trajectory.rowwise().sum() * dt;
}

void store_space(SnapshotTensor &t, int i, const Eigen::VectorXd &v)
{
  for (int x = 0; x < t.nx(); ++x)
  {
    t(i, x, 0, 0) = v[x];
  }
}

void store_time(SnapshotTensor &t, int i, const Eigen::VectorXd &v)
{
  for (int s = 0; s < t.nt(); ++s)
  {
    t(i, 0, s, 0) = v[s];
  }
}

void store_trajectory(SnapshotTensor &t, int i, const Eigen::MatrixXd &m)
{
  for (int x = 0; x < t.nx(); ++x)
  {
    for (int s = 0; s < t.nt(); ++s)
    {
      t(i, x, s, 0) = m(x, s);
    }
  }
}

Eigen::MatrixXd load_trajectory(const SnapshotTensor &t, int i)
{
  Eigen::MatrixXd m(t.nx(), t.nt());
  for (int x = 0; x < t.nx(); ++x)
  {
    for (int s = 0; s < t.nt(); ++s)
    {
      m(x, s) = t(i, x, s, 0);
    }
  }
  return m;
}

}  // namespace

Dataset generate_samples(const DatasetSpec &spec, const TriMesh &mesh, const MeshOperators &ops,
                         const std::string &split, int first, int count)
{
  spec.run.validate();
  if (count < 1)
  {
    throw ConfigError("dataset sample counts must be at least 1");
  }
  const int nx = mesh.num_vertices();
  const int nt = spec.run.n_t;
  const double dt = spec.run.dt;
  Dataset d;
  d.kind = mapping_kind_for(spec.data_case);

  EigenBasis basis;
  if (is_wave(spec.data_case))
  {
    basis = fourier_time_basis(nt, spec.grf.n_modes > 0 ? spec.grf.n_modes : nt, nt * dt);
    check_wave_stability(ops, spec.run);
  }
  else if (spec.data_case != DataCase::HeatLayout)
  {
    basis = compute_lbo_basis(ops.stiffness, ops.lumped_mass,
                              spec.grf.n_modes > 0 ? spec.grf.n_modes : nx);
  }
  const int node = center_node(mesh);

  switch (spec.data_case)
  {
    case DataCase::HeatIc:
      d.a = SnapshotTensor(count, nx, 1, 1, dt);
      d.u = SnapshotTensor(count, nx, nt, 1, dt);
      break;
    case DataCase::HeatLayout:
      d.a = SnapshotTensor(count, nx, 1, 1, dt);
      d.u = SnapshotTensor(count, nx, nt, 1, dt);
      break;
    case DataCase::WaveForward:
      d.a = SnapshotTensor(count, 1, nt, 1, dt);
      d.u = SnapshotTensor(count, nx, nt, 1, dt);
      break;
    case DataCase::WaveInverse:
      d.a = SnapshotTensor(count, nx, nt, 1, dt);
      d.u = SnapshotTensor(count, 1, nt, 1, dt);
      break;
    case DataCase::HeatToFinal:
      d.a = SnapshotTensor(count, nx, nt, 1, dt);
      d.u = SnapshotTensor(count, nx, 1, 1, dt);
      break;
  }

  for (int i = 0; i < count; ++i)
  {
    GrfSpec g = spec.grf;
    g.seed = sample_seed(spec.seed, split, first + i);
    switch (spec.data_case)
    {
      case DataCase::HeatIc:
      {
        const Eigen::VectorXd ic = sample_grf(basis, g);
        store_space(d.a, i, ic);
        store_trajectory(d.u, i, solve_heat(ops, ic, {}, spec.run));
        break;
      }
      case DataCase::HeatLayout:
      {
        const Eigen::VectorXd layout = source_layout(spec, mesh, g.seed);
        store_space(d.a, i, layout);
        store_trajectory(d.u, i,
                         solve_heat(ops, Eigen::VectorXd::Zero(nx), layout_source(layout, spec.run),
                                    spec.run));
        break;
      }
      case DataCase::WaveForward:
      case DataCase::WaveInverse:
      {
        const Eigen::VectorXd signal = sample_grf(basis, g);
        const Eigen::MatrixXd u = solve_wave(ops, node, {signal.data(), static_cast<std::size_t>(signal.size())}, spec.run);
        if (spec.data_case == DataCase::WaveForward)
        {
          store_time(d.a, i, signal);
          store_trajectory(d.u, i, u);
        }
        else
        {
          store_trajectory(d.a, i, u);
          store_time(d.u, i, signal);
        }
        break;
      }
      case DataCase::HeatToFinal:
      {
        const Eigen::MatrixXd T = solve_heat(ops, sample_grf(basis, g), {}, spec.run);
        store_trajectory(d.a, i, T);
        store_space(d.u, i, time_integral(T, dt));
        break;
      }
    }
  }
  d.check();
  return d;
}

DatasetPair build_dataset(const DatasetSpec &spec, const TriMesh &mesh, const MeshOperators &ops)
{
  if (spec.n_train < 1 || spec.n_test < 1)
  {
    throw ConfigError("dataset sample counts must be at least 1");
  }
  return {generate_samples(spec, mesh, ops, "train", 0, spec.n_train),
          generate_samples(spec, mesh, ops, "test", 0, spec.n_test)};
}

namespace
{

json shape_json(const SnapshotTensor &t)
{
  return json::array({t.samples(), t.nx(), t.nt(), t.channels()});
}

SnapshotTensor read_tensor(const std::filesystem::path &path, const json &shape, double dt)
{
  if (!shape.is_array() || shape.size() != 4)
  {
    throw DataError("dataset header shape entry must be [N, n_x, n_t, channels]");
  }
  const auto s = shape.get<std::vector<int>>();
  SnapshotTensor t(s[0], s[1], s[2], s[3], dt);
  t.data() = read_f64(path, t.data().size());
  return t;
}

}  // namespace

void write_dataset(const Dataset &data, const json &header, const std::filesystem::path &dir)
{
  data.check();
  std::filesystem::create_directories(dir);
  json h = header;
  h["schema_version"] = 1;
  h["mapping_kind"] = to_string(data.kind);
  h["N"] = data.a.samples();
  h["n_x"] = std::max(data.a.nx(), data.u.nx());
  h["n_t"] = std::max(data.a.nt(), data.u.nt());
  h["channels"] = data.u.channels();
  h["dt"] = data.a.dt();
  h["a_shape"] = shape_json(data.a);
  h["u_shape"] = shape_json(data.u);
  write_json(h, dir / "header.json");
  write_f64(dir / "a.bin", data.a.data());
  write_f64(dir / "u.bin", data.u.data());
}

Dataset read_dataset(const std::filesystem::path &dir, json *header)
{
  const json h = read_json(dir / "header.json");
  Dataset d;
  try
  {
    if (h.at("schema_version").get<int>() != 1)
    {
      throw DataError("unsupported dataset schema_version in " + dir.string());
    }
    d.kind = mapping_kind_from_string(h.at("mapping_kind").get<std::string>());
    const double dt = h.at("dt").get<double>();
    d.a = read_tensor(dir / "a.bin", h.at("a_shape"), dt);
    d.u = read_tensor(dir / "u.bin", h.at("u_shape"), dt);
  }
  catch (const json::exception &e)
  {
    throw DataError("malformed dataset header in " + dir.string() + ": " + e.what());
  }
  catch (const ConfigError &e)
  {
    throw DataError(std::string("dataset header: ") + e.what());
  }
  d.check();
  if (header)
  {
    *header = h;
  }
  return d;
}

void write_dataset_pair(const DatasetPair &pair, const DatasetSpec &spec, const TriMesh &mesh,
                        const std::filesystem::path &dir)
{
  json base;
  base["case"] = to_string(spec.data_case);
  base["mesh"] = spec.mesh_path;
  base["mesh_checksum"] = to_hex(mesh_checksum(mesh));
  base["grf"] = to_json(spec.grf);
  base["pde"] = to_json(spec.run);
  base["seed"] = spec.seed;
  base["generation"] = to_json(spec);
  json train = base;
  train["split"] = "train";
  json test = base;
  test["split"] = "test";
  write_dataset(pair.train, train, dir / "train");
  write_dataset(pair.test, test, dir / "test");
}

double regeneration_error(const Dataset &data, const DatasetSpec &spec, const TriMesh &mesh,
                          const MeshOperators &ops)
{
  data.check();
  const int node = center_node(mesh);
  double err = 0.0;
  for (int i = 0; i < data.a.samples(); ++i)
  {
    Eigen::MatrixXd stored;
    Eigen::MatrixXd regen;
    switch (spec.data_case)
    {
      case DataCase::HeatIc:
      {
        Eigen::VectorXd ic(data.a.nx());
        for (int x = 0; x < data.a.nx(); ++x)
        {
          ic[x] = data.a(i, x, 0, 0);
        }
        stored = load_trajectory(data.u, i);
        regen = solve_heat(ops, ic, {}, spec.run);
        break;
      }
      case DataCase::HeatLayout:
      {
        Eigen::VectorXd layout(data.a.nx());
        for (int x = 0; x < data.a.nx(); ++x)
        {
          layout[x] = data.a(i, x, 0, 0);
        }
        stored = load_trajectory(data.u, i);
        regen = solve_heat(ops, Eigen::VectorXd::Zero(layout.size()),
                           layout_source(layout, spec.run), spec.run);
        break;
      }
      case DataCase::WaveForward:
      case DataCase::WaveInverse:
      {
        const bool fwd = spec.data_case == DataCase::WaveForward;
        const SnapshotTensor &sig = fwd ? data.a : data.u;
        std::vector<double> signal(sig.nt());
        for (int t = 0; t < sig.nt(); ++t)
        {
          signal[t] = sig(i, 0, t, 0);
        }
        stored = load_trajectory(fwd ? data.u : data.a, i);
        regen = solve_wave(ops, node, signal, spec.run);
        break;
      }
      case DataCase::HeatToFinal:
      {
        stored = load_trajectory(data.u, i);
        regen = time_integral(load_trajectory(data.a, i), spec.run.dt);
        break;
      }
    }
    if (stored.rows() != regen.rows() || stored.cols() != regen.cols())
    {
      throw DimensionError("regeneration_error: stored and regenerated shapes differ");
    }
    err = std::max(err, (stored - regen).cwiseAbs().maxCoeff());
  }
  return err;
}

}  // namespace ronorm
