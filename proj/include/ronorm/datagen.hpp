// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

#include "ronorm/io.hpp"
#include "ronorm/mesh.hpp"
#include "ronorm/spectral.hpp"
#include "ronorm/train.hpp"

namespace ronorm
{

struct GrfSpec
{
  double alpha = 3.0;
  double tau = 3.0;
  int n_modes = 0;  // 0 uses every basis function
  std::uint64_t seed = 0;
  /// Overall factor on every coefficient; 1 gives variance (lambda + tau^2)^-alpha.
  double amplitude = 1.0;
  /// Zeroes the coefficient of the first (constant) basis function.
  bool zero_mean = false;

  void validate(int basis_size) const;
};

json to_json(const GrfSpec &g);
GrfSpec grf_spec_from_json(const json &j, const GrfSpec &defaults = {});

/// Standard deviation of coefficient k: amplitude * (lambda_k + tau^2)^(-alpha/2).
Eigen::VectorXd grf_std(const EigenBasis &basis, const GrfSpec &spec);

/// sum_k c_k phi_k with c_k = grf_std_k * noise_k.
Eigen::VectorXd grf_from_noise(const EigenBasis &basis, const GrfSpec &spec,
                               std::span<const double> noise);
/// Draws the standard normal noise from `spec.seed`.
Eigen::VectorXd sample_grf(const EigenBasis &basis, const GrfSpec &spec);

struct PdeRun
{
  double dt = 0.002;
  int n_t = 50;
  double coefficient = 1.0;  // diffusivity for heat, c^2 for wave

  void validate() const;
};

json to_json(const PdeRun &r);
PdeRun pde_run_from_json(const json &j, const PdeRun &defaults = {});

/// Implicit Euler for M T_t + kappa L T = M s. `source` is n_x x n_t (column n
/// is s at step n) or empty. Returns T^1..T^{n_t} as columns.
Eigen::MatrixXd solve_heat(const MeshOperators &ops, const Eigen::VectorXd &initial,
                           const Eigen::MatrixXd &source, const PdeRun &run);

/// Largest eigenvalue of M^{-1} L by power iteration.
double estimate_lambda_max(const MeshOperators &ops, int iterations = 300);

/// Throws NumericsError unless dt < 2 / sqrt(c^2 lambda_max).
void check_wave_stability(const MeshOperators &ops, const PdeRun &run);

/// Leapfrog for u_tt = -c^2 M^{-1} L u + s with initial displacement u0 and zero
/// initial velocity. `forcing` is n_x x n_t or empty. Returns u^1..u^{n_t}.
Eigen::MatrixXd solve_wave_general(const MeshOperators &ops, const Eigen::VectorXd &u0,
                                   const Eigen::MatrixXd &forcing, const PdeRun &run);

/// Zero initial state, forcing signal(n) applied at `node`.
Eigen::MatrixXd solve_wave(const MeshOperators &ops, int node, std::span<const double> signal,
                           const PdeRun &run);

/// Discrete energy 1/2 (|(u1 - u0)/dt|_M^2 + c^2 m^T L m) with m = (u0 + u1)/2.
double wave_energy(const MeshOperators &ops, const Eigen::VectorXd &u0, const Eigen::VectorXd &u1,
                   const PdeRun &run);

enum class DataCase
{
  HeatIc,
  HeatLayout,
  WaveForward,
  WaveInverse,
  HeatToFinal,
};

std::string to_string(DataCase c);
DataCase data_case_from_string(const std::string &s);
MappingKind mapping_kind_for(DataCase c);

struct DatasetSpec
{
  DataCase data_case = DataCase::HeatIc;
  int n_train = 200;
  int n_test = 50;
  std::uint64_t seed = 0;
  PdeRun run;
  GrfSpec grf;
  std::string mesh_path;
  int n_sources = 3;          // heat_layout disks
  double source_radius = 0.1;  // fraction of the bounding-box diagonal
  double source_strength = 10.0;
};

/// Case defaults for the time step, length and GRF parameters.
DatasetSpec default_dataset_spec(DataCase c);
json to_json(const DatasetSpec &s);
DatasetSpec dataset_spec_from_json(const json &j);

/// Index of the vertex closest to the bounding-box centre.
int center_node(const TriMesh &mesh);

/// Samples [first, first + count) of one split ("train" or "test"); each sample
/// draws from its own seed sequence {seed, split, index}.
Dataset generate_samples(const DatasetSpec &spec, const TriMesh &mesh, const MeshOperators &ops,
                         const std::string &split, int first, int count);

struct DatasetPair
{
  Dataset train;
  Dataset test;
};

DatasetPair build_dataset(const DatasetSpec &spec, const TriMesh &mesh, const MeshOperators &ops);

/// Container: <dir>/header.json, a.bin, u.bin.
void write_dataset(const Dataset &data, const json &header, const std::filesystem::path &dir);
Dataset read_dataset(const std::filesystem::path &dir, json *header = nullptr);

/// Writes <dir>/train and <dir>/test.
void write_dataset_pair(const DatasetPair &pair, const DatasetSpec &spec, const TriMesh &mesh,
                        const std::filesystem::path &dir);

/// Maximum deviation between the stored outputs and outputs regenerated from
/// the stored inputs with the case's solver (cases whose input determines the
/// output through a solver: heat_layout, wave_forward, wave_inverse,
/// heat_to_final). For heat_ic the stored initial condition is re-solved.
double regeneration_error(const Dataset &data, const DatasetSpec &spec, const TriMesh &mesh,
                          const MeshOperators &ops);

}  // namespace ronorm
