// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ronorm/baselines.hpp"
#include "ronorm/datagen.hpp"
#include "ronorm/metrics.hpp"
#include "ronorm/train.hpp"

namespace ronorm
{

enum class Method
{
  RoNorm,
  PcaNet,
};

std::string to_string(Method m);
Method method_from_string(const std::string &s);

/// One experiment: data source, method and hyperparameters.
struct ExperimentConfig
{
  json raw;  // effective config, hashed into every artifact
  Method method = Method::RoNorm;
  TrainConfig train;
  PcaNetConfig pca;
  std::optional<DatasetSpec> data;           // generate in memory / for gen-data
  std::optional<std::filesystem::path> dataset_dir;  // read train/ and test/ from here
  std::filesystem::path mesh;
  int repeats = 1;
  HistogramSpec histogram;
  std::string name;

  std::string hash() const;
};

inline constexpr int kConfigSchemaVersion = 1;

/// Relative paths resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const json &j, const std::filesystem::path &base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path &path);

/// Overrides the training seed (and the pca_net seed).
void apply_seed(ExperimentConfig &config, std::uint64_t seed);

struct LoadedData
{
  DatasetPair data;
  std::optional<TriMesh> mesh;
  std::optional<MeshOperators> ops;
};

/// Reads dataset_dir if set, otherwise generates from `data`.
LoadedData load_data(const ExperimentConfig &config);

struct RunOutcome
{
  EvalReport report;
  TrainingLog log;
  std::uint64_t seed = 0;
};

/// Trains and evaluates one seed. Writes model.ckpt, log.csv and the report
/// files into `run_dir` when it is non-empty.
RunOutcome run_once(const ExperimentConfig &config, const LoadedData &data, std::uint64_t seed,
                    const std::filesystem::path &run_dir);

struct ExperimentOutcome
{
  std::vector<RunOutcome> runs;
  EvalReport aggregate;  // mean (std) over repeats
};

ExperimentOutcome run_experiment(const ExperimentConfig &config, const LoadedData &data,
                                 const std::filesystem::path &out_dir);

void cmd_gen_data(const ExperimentConfig &config, const std::filesystem::path &out_dir);
void cmd_basis(const ExperimentConfig &config, const std::filesystem::path &out_dir);
ExperimentOutcome cmd_train(const ExperimentConfig &config, const std::filesystem::path &out_dir);
/// Re-evaluates the checkpoint in `run_dir` on the test split.
EvalReport cmd_eval(const ExperimentConfig &config, const std::filesystem::path &run_dir,
                    const std::filesystem::path &out_dir);

struct CompareRow
{
  std::string name;
  std::string method;
  int truncated_modes = 0;
  std::string status = "ok";
  EvalReport report;
};

/// Expands a comparison file ({base, variants, methods, sweep}) into configs.
std::vector<ExperimentConfig> expand_comparison(const json &j, const std::filesystem::path &base_dir);
std::vector<CompareRow> cmd_compare(const std::vector<ExperimentConfig> &configs,
                                    const std::filesystem::path &out_dir);
void write_compare_csv(const std::vector<CompareRow> &rows, const std::filesystem::path &path,
                       const std::string &config_hash);

SvdDecayReport cmd_svd_report(const ExperimentConfig &config, const std::filesystem::path &out_dir);

}  // namespace ronorm
