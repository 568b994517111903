// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>

namespace ronorm
{

std::string to_string(Method m)
{
  return m == Method::RoNorm ? "ro_norm" : "pca_net";
}

Method method_from_string(const std::string &s)
{
  if (s == "ro_norm")
  {
    return Method::RoNorm;
  }
  if (s == "pca_net")
  {
    return Method::PcaNet;
  }
  throw ConfigError("unknown method '" + s + "' (expected ro_norm or pca_net)");
}

std::string ExperimentConfig::hash() const
{
  return json_hash(raw);
}

namespace
{

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p)
{
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

HistogramSpec histogram_from_json(const json &j)
{
  HistogramSpec h;
  h.n_space_pts = j.value("n_space_pts", h.n_space_pts);
  h.n_time_pts = j.value("n_time_pts", h.n_time_pts);
  h.seed = j.value("seed", h.seed);
  h.n_bins = j.value("n_bins", h.n_bins);
  h.max_error = j.value("max_error", h.max_error);
  h.threshold = j.value("threshold", h.threshold);
  return h;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json &j, const std::filesystem::path &base_dir)
{
  if (!j.is_object())
  {
    throw ConfigError("experiment config must be a JSON object");
  }
  ExperimentConfig c;
  try
  {
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != kConfigSchemaVersion)
    {
      throw ConfigError("experiment config needs \"schema_version\": " +
                        std::to_string(kConfigSchemaVersion));
    }
    c.raw = j;
    c.method = method_from_string(j.value("method", std::string("ro_norm")));
    c.train = train_config_from_json(j);
    json pj = j;
    if (j.contains("pca_net"))
    {
      pj.merge_patch(j["pca_net"]);
    }
    c.pca = pca_net_config_from_json(pj);
    c.repeats = j.value("repeats", 1);
    if (c.repeats < 1)
    {
      throw ConfigError("repeats must be at least 1");
    }
    c.name = j.value("name", std::string());
    if (j.contains("histogram"))
    {
      c.histogram = histogram_from_json(j["histogram"]);
    }
    if (j.contains("mesh"))
    {
      c.mesh = resolve(base_dir, j["mesh"].get<std::string>());
      c.raw["mesh"] = c.mesh.string();
    }
    if (j.contains("data"))
    {
      c.data = dataset_spec_from_json(j["data"]);
      if (c.mesh.empty() && !c.data->mesh_path.empty())
      {
        c.mesh = resolve(base_dir, c.data->mesh_path);
      }
      if (c.mesh.empty())
      {
        throw ConfigError("data generation needs a \"mesh\" path");
      }
      c.data->mesh_path = c.mesh.string();
      c.raw["data"]["mesh"] = c.mesh.string();
    }
    if (j.contains("dataset"))
    {
      c.dataset_dir = resolve(base_dir, j["dataset"].get<std::string>());
      c.raw["dataset"] = c.dataset_dir->string();
    }
  }
  catch (const json::exception &e)
  {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
  if (!c.mesh.empty() && !std::filesystem::exists(c.mesh))
  {
    throw ConfigError("mesh file " + c.mesh.string() + " does not exist");
  }
  if (!c.data && !c.dataset_dir)
  {
    throw ConfigError("experiment config needs either \"data\" or \"dataset\"");
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path)
{
  if (!std::filesystem::exists(path))
  {
    throw ConfigError("config file " + path.string() + " does not exist");
  }
  json j;
  try
  {
    j = read_json(path);
  }
  catch (const DataError &e)
  {
    throw ConfigError(e.what());
  }
  return experiment_config_from_json(j, std::filesystem::absolute(path).parent_path());
}

void apply_seed(ExperimentConfig &config, std::uint64_t seed)
{
  config.train.seed = seed;
  config.pca.train.seed = seed;
  config.raw["seed"] = seed;
}

LoadedData load_data(const ExperimentConfig &config)
{
  LoadedData out;
  std::filesystem::path mesh_path = config.mesh;
  if (config.dataset_dir)
  {
    if (!std::filesystem::exists(*config.dataset_dir / "train" / "header.json") ||
        !std::filesystem::exists(*config.dataset_dir / "test" / "header.json"))
    {
      throw ConfigError("dataset directory " + config.dataset_dir->string() +
                        " lacks train/ and test/ splits");
    }
    json header;
    out.data.train = read_dataset(*config.dataset_dir / "train", &header);
    out.data.test = read_dataset(*config.dataset_dir / "test");
    if (mesh_path.empty() && header.contains("mesh") && header["mesh"].is_string())
    {
      mesh_path = header["mesh"].get<std::string>();
    }
  }
  if (!mesh_path.empty())
  {
    out.mesh = load_mesh(mesh_path);
    out.ops = assemble_operators(*out.mesh);
  }
  if (!config.dataset_dir)
  {
    if (!out.mesh)
    {
      throw ConfigError("data generation needs a mesh");
    }
    out.data = build_dataset(*config.data, *out.mesh, *out.ops);
  }
  return out;
}

RunOutcome run_once(const ExperimentConfig &config, const LoadedData &data, std::uint64_t seed,
                    const std::filesystem::path &run_dir)
{
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = config;
  apply_seed(cfg, seed);
  const std::string hash = cfg.hash();
  const auto &train = data.data.train;
  const auto &test = data.data.test;

  RunOutcome out;
  out.seed = seed;
  SnapshotTensor pred;
  std::size_t n_params = 0;
  if (!run_dir.empty())
  {
    std::filesystem::create_directories(run_dir);
  }
  if (cfg.method == Method::RoNorm)
  {
    const RoNormProblem problem =
        prepare_problem(train, cfg.train, data.ops ? &*data.ops : nullptr);
    TrainResult result = is_increase(train.kind) ? train_increase(train, test, problem, cfg.train)
                                                 : train_decrease(train, test, problem, cfg.train);
    pred = predict(result.model, problem, test.a, test.u);
    n_params = parameter_count(result.model.params);
    out.log = std::move(result.log);
    if (!run_dir.empty())
    {
      save_model(result.model, run_dir / "model.ckpt",
                 {{"config_hash", hash},
                  {"method", to_string(cfg.method)},
                  {"mapping_kind", to_string(problem.kind)},
                  {"reduction_basis", problem.reduction_basis.id()},
                  {"domain_basis", problem.domain_basis.id()}});
      save_basis(problem.reduction_basis, run_dir / "reduction.basis");
      save_basis(problem.domain_basis, run_dir / "domain.basis");
    }
  }
  else
  {
    PcaNetResult result = train_pca_net(train, test, cfg.pca);
    pred = predict_pca_net(result.model, test.a, test.u);
    n_params = parameter_count(result.model.net);
    out.log = std::move(result.log);
    if (!run_dir.empty())
    {
      save_pca_net(result.model, run_dir / "model.ckpt",
                   {{"config_hash", hash}, {"method", to_string(cfg.method)}});
    }
  }
  out.report = evaluate(pred, test.u, cfg.histogram);
  out.report.parameter_count = n_params;
  out.report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!run_dir.empty())
  {
    out.log.write_csv(run_dir / "log.csv", hash);
    write_report(out.report, run_dir, hash);
  }
  return out;
}

namespace
{

EvalReport aggregate_reports(const std::vector<RunOutcome> &runs)
{
  EvalReport agg;
  std::vector<double> e, m, w;
  for (const auto &r : runs)
  {
    e.push_back(r.report.e_l2.mean);
    m.push_back(r.report.mme.mean);
    w.push_back(r.report.wall_clock_s);
    agg.skipped_samples += r.report.skipped_samples;
    agg.per_sample_max_errors.insert(agg.per_sample_max_errors.end(),
                                     r.report.per_sample_max_errors.begin(),
                                     r.report.per_sample_max_errors.end());
    if (agg.histogram.counts.empty())
    {
      agg.histogram = r.report.histogram;
    }
    else
    {
      const double below = agg.histogram.fraction_below * agg.histogram.total +
                           r.report.histogram.fraction_below * r.report.histogram.total;
      for (std::size_t b = 0; b < agg.histogram.counts.size(); ++b)
      {
        agg.histogram.counts[b] += r.report.histogram.counts[b];
      }
      agg.histogram.total += r.report.histogram.total;
      agg.histogram.fraction_below = below / agg.histogram.total;
    }
  }
  std::sort(agg.per_sample_max_errors.begin(), agg.per_sample_max_errors.end());
  agg.e_l2 = mean_std(e);
  agg.mme = mean_std(m);
  agg.wall_clock_s = mean_std(w).mean;
  agg.parameter_count = runs.empty() ? 0 : runs.front().report.parameter_count;
  return agg;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig &config, const LoadedData &data,
                                 const std::filesystem::path &out_dir)
{
  ExperimentOutcome outcome;
  for (int r = 0; r < config.repeats; ++r)
  {
    const std::uint64_t seed = config.train.seed + static_cast<std::uint64_t>(r);
    std::filesystem::path run_dir = out_dir;
    if (!out_dir.empty() && config.repeats > 1)
    {
      run_dir = out_dir / ("run_seed" + std::to_string(seed));
    }
    outcome.runs.push_back(run_once(config, data, seed, run_dir));
  }
  outcome.aggregate = aggregate_reports(outcome.runs);
  if (!out_dir.empty())
  {
    const std::string hash = config.hash();
    json j = to_json(outcome.aggregate);
    j["config_hash"] = hash;
    j["method"] = to_string(config.method);
    j["repeats"] = config.repeats;
    j["seeds"] = json::array();
    for (const auto &r : outcome.runs)
    {
      j["seeds"].push_back(r.seed);
    }
    write_json(j, out_dir / "aggregate_report.json");
    std::ofstream csv(out_dir / "aggregate.csv");
    csv << "# config_hash: " << hash << '\n'
        << "method,repeats,e_l2_percent,mme,parameter_count,wall_clock_s\n"
        << to_string(config.method) << ',' << config.repeats << ",\""
        << format_mean_std({100.0 * outcome.aggregate.e_l2.mean, 100.0 * outcome.aggregate.e_l2.std})
        << "\",\"" << format_mean_std(outcome.aggregate.mme) << "\","
        << outcome.aggregate.parameter_count << ',' << outcome.aggregate.wall_clock_s << '\n';
  }
  return outcome;
}

void cmd_gen_data(const ExperimentConfig &config, const std::filesystem::path &out_dir)
{
  if (!config.data)
  {
    throw ConfigError("gen-data needs a \"data\" section");
  }
  const TriMesh mesh = load_mesh(config.mesh);
  const MeshOperators ops = assemble_operators(mesh);
  const DatasetPair pair = build_dataset(*config.data, mesh, ops);
  write_dataset_pair(pair, *config.data, mesh, out_dir);
}

void cmd_basis(const ExperimentConfig &config, const std::filesystem::path &out_dir)
{
  const LoadedData data = load_data(config);
  std::filesystem::create_directories(out_dir);
  json manifest = {{"config_hash", config.hash()}};
  if (config.method == Method::RoNorm)
  {
    const RoNormProblem problem =
        prepare_problem(data.data.train, config.train, data.ops ? &*data.ops : nullptr);
    save_basis(problem.reduction_basis, out_dir / "reduction.basis");
    save_basis(problem.domain_basis, out_dir / "domain.basis");
    manifest["reduction_basis"] = problem.reduction_basis.id();
    manifest["domain_basis"] = problem.domain_basis.id();
  }
  else
  {
    const EigenBasis in = pca_flatten_basis(data.data.train.a, config.pca.k_in);
    const EigenBasis out = pca_flatten_basis(data.data.train.u, config.pca.k_out);
    save_basis(in, out_dir / "pca_in.basis");
    save_basis(out, out_dir / "pca_out.basis");
    manifest["pca_in_basis"] = in.id();
    manifest["pca_out_basis"] = out.id();
  }
  write_json(manifest, out_dir / "basis_manifest.json");
}

ExperimentOutcome cmd_train(const ExperimentConfig &config, const std::filesystem::path &out_dir)
{
  const LoadedData data = load_data(config);
  return run_experiment(config, data, out_dir);
}

EvalReport cmd_eval(const ExperimentConfig &config, const std::filesystem::path &run_dir,
                    const std::filesystem::path &out_dir)
{
  const auto ckpt = run_dir / "model.ckpt";
  if (!std::filesystem::exists(ckpt))
  {
    throw DataError("no checkpoint at " + ckpt.string());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedData data = load_data(config);
  const auto &test = data.data.test;
  SnapshotTensor pred;
  std::size_t n_params = 0;
  std::string hash = config.hash();
  if (config.method == Method::RoNorm)
  {
    json extra;
    const RoNormModel model = load_model(ckpt, &extra);
    const RoNormProblem problem =
        prepare_problem(data.data.train, config.train, data.ops ? &*data.ops : nullptr);
    if (extra.value("reduction_basis", std::string()) != problem.reduction_basis.id() ||
        extra.value("domain_basis", std::string()) != problem.domain_basis.id())
    {
      throw DataError("checkpoint was trained with different bases than this config produces");
    }
    hash = extra.value("config_hash", hash);
    pred = predict(model, problem, test.a, test.u);
    n_params = parameter_count(model.params);
  }
  else
  {
    json extra;
    const PcaNetModel model = load_pca_net(ckpt, &extra);
    hash = extra.value("config_hash", hash);
    pred = predict_pca_net(model, test.a, test.u);
    n_params = parameter_count(model.net);
  }
  EvalReport report = evaluate(pred, test.u, config.histogram);
  report.parameter_count = n_params;
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_report(report, out_dir, hash);
  return report;
}

std::vector<ExperimentConfig> expand_comparison(const json &j, const std::filesystem::path &base_dir)
{
  try
  {
    if (!j.contains("base"))
    {
      return {experiment_config_from_json(j, base_dir)};
    }
    const json base = j["base"];
    json variants = j.value("variants", json::array({json{{"name", "base"}}}));
    json methods = j.value("methods", json::array({base.value("method", std::string("ro_norm"))}));
    std::string sweep_key;
    json sweep_values = json::array({nullptr});
    if (j.contains("sweep"))
    {
      if (!j["sweep"].is_object() || j["sweep"].size() != 1)
      {
        throw ConfigError("sweep must hold exactly one key with a list of values");
      }
      sweep_key = j["sweep"].begin().key();
      sweep_values = j["sweep"].begin().value();
    }
    std::vector<ExperimentConfig> out;
    for (const auto &variant : variants)
    {
      for (const auto &method : methods)
      {
        for (const auto &value : sweep_values)
        {
          json cfg = base;
          if (!cfg.contains("schema_version"))
          {
            cfg["schema_version"] = j.value("schema_version", kConfigSchemaVersion);
          }
          cfg.merge_patch(variant);
          cfg["method"] = method;
          std::string name = variant.value("name", std::string("base")) + "_" +
                             method.get<std::string>();
          if (!value.is_null())
          {
            cfg[sweep_key] = value;
            name += "_" + sweep_key + value.dump();
          }
          cfg["name"] = name;
          out.push_back(experiment_config_from_json(cfg, base_dir));
        }
      }
    }
    return out;
  }
  catch (const json::exception &e)
  {
    throw ConfigError(std::string("bad comparison config: ") + e.what());
  }
}

std::vector<CompareRow> cmd_compare(const std::vector<ExperimentConfig> &configs,
                                    const std::filesystem::path &out_dir)
{
  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i)
  {
    const auto &cfg = configs[i];
    CompareRow row;
    row.name = cfg.name.empty() ? "config" + std::to_string(i) : cfg.name;
    row.method = to_string(cfg.method);
    row.truncated_modes = cfg.method == Method::RoNorm ? cfg.train.truncated_modes : cfg.pca.k_out;
    try
    {
      const LoadedData data = load_data(cfg);
      row.report = run_experiment(cfg, data, out_dir.empty() ? out_dir : out_dir / row.name).aggregate;
    }
    catch (const Error &e)
    {
      row.status = std::string("failed: ") + e.what();
      std::cerr << "compare: " << row.name << " failed: " << e.what() << '\n';
    }
    rows.push_back(row);
  }
  return rows;
}

void write_compare_csv(const std::vector<CompareRow> &rows, const std::filesystem::path &path,
                       const std::string &config_hash)
{
  if (path.has_parent_path())
  {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  out << "# config_hash: " << config_hash << '\n'
      << "name,method,truncated_modes,status,e_l2_mean,e_l2_std,e_l2_percent,mme_mean,mme_std,"
         "parameter_count,wall_clock_s\n";
  out.precision(10);
  for (const auto &r : rows)
  {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '"', '\'');
    out << r.name << ',' << r.method << ',' << r.truncated_modes << ",\"" << status << "\","
        << r.report.e_l2.mean << ',' << r.report.e_l2.std << ",\""
        << format_mean_std({100.0 * r.report.e_l2.mean, 100.0 * r.report.e_l2.std}) << "\","
        << r.report.mme.mean << ',' << r.report.mme.std << ',' << r.report.parameter_count << ','
        << r.report.wall_clock_s << '\n';
  }
}

SvdDecayReport cmd_svd_report(const ExperimentConfig &config, const std::filesystem::path &out_dir)
{
  const LoadedData data = load_data(config);
  const Dataset &train = data.data.train;
  const SnapshotTensor &side = is_increase(train.kind) ? train.u : train.a;
  const SvdDecayReport report = svd_decay_report(side, reduced_axis(train.kind));
  write_svd_report(report, out_dir, config.hash());
  return report;
}

}  // namespace ronorm
