// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ronorm/experiment.hpp"

namespace
{

enum ExitCode
{
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kData = 3,
  kNumerics = 4,
};

int exit_code(const ronorm::Error &e)
{
  switch (e.category())
  {
    case ronorm::ErrorCategory::Config:
      return kConfig;
    case ronorm::ErrorCategory::Data:
      return kData;
    case ronorm::ErrorCategory::Numerics:
      return kNumerics;
  }
  return kInternal;
}

void print_report(const std::string &label, const ronorm::EvalReport &r)
{
  std::cout << label << ": e_l2 " << ronorm::format_mean_std({100.0 * r.e_l2.mean, 100.0 * r.e_l2.std})
            << " %, mme " << ronorm::format_mean_std(r.mme) << ", params " << r.parameter_count
            << ", wall " << r.wall_clock_s << " s\n";
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"ronorm: reduced-order neural operators on manifolds"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out_dir;
  std::string run_dir;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App *sub, bool many_configs)
  {
    if (many_configs)
    {
      sub->add_option("--config", configs, "Experiment or comparison config (repeatable)")
          ->required()
          ->check(CLI::ExistingFile);
    }
    else
    {
      sub->add_option("--config", configs, "Experiment config")
          ->required()
          ->expected(1)
          ->check(CLI::ExistingFile);
    }
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--seed", seed, "Seed override");
  };

  auto *gen = app.add_subcommand("gen-data", "Generate train/test datasets");
  add_common(gen, false);
  auto *basis = app.add_subcommand("basis", "Compute and cache the bases of an experiment");
  add_common(basis, false);
  auto *train = app.add_subcommand("train", "Train, checkpoint and evaluate");
  add_common(train, false);
  auto *eval = app.add_subcommand("eval", "Evaluate a trained checkpoint on the test split");
  add_common(eval, false);
  eval->add_option("--run", run_dir, "Directory holding model.ckpt (defaults to --out)");
  auto *compare = app.add_subcommand("compare", "Run several configs and tabulate them");
  add_common(compare, true);
  auto *svd = app.add_subcommand("svd-report", "Separate vs overall singular value decay");
  add_common(svd, false);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try
  {
    const std::filesystem::path out(out_dir);
    if (compare->parsed())
    {
      std::vector<ronorm::ExperimentConfig> all;
      ronorm::json hashed = ronorm::json::array();
      for (const auto &path : configs)
      {
        const ronorm::json j = ronorm::read_json(path);
        hashed.push_back(j);
        auto expanded =
            ronorm::expand_comparison(j, std::filesystem::absolute(path).parent_path());
        all.insert(all.end(), expanded.begin(), expanded.end());
      }
      if (seed)
      {
        for (auto &c : all)
        {
          ronorm::apply_seed(c, *seed);
        }
      }
      if (all.size() < 2)
      {
        throw ronorm::ConfigError("compare needs at least two runnable configs");
      }
      const auto rows = ronorm::cmd_compare(all, out);
      ronorm::write_compare_csv(rows, out / "comparison.csv", ronorm::json_hash(hashed));
      for (const auto &r : rows)
      {
        if (r.status == "ok")
        {
          print_report(r.name, r.report);
        }
        else
        {
          std::cout << r.name << ": " << r.status << '\n';
        }
      }
      return kOk;
    }

    ronorm::ExperimentConfig config = ronorm::load_experiment_config(configs.front());
    if (gen->parsed())
    {
      if (seed && config.data)
      {
        config.data->seed = *seed;
      }
      ronorm::cmd_gen_data(config, out);
      std::cout << "wrote dataset to " << out << '\n';
      return kOk;
    }
    if (seed)
    {
      ronorm::apply_seed(config, *seed);
    }
    if (basis->parsed())
    {
      ronorm::cmd_basis(config, out);
      std::cout << "wrote bases to " << out << '\n';
    }
    else if (train->parsed())
    {
      const auto outcome = ronorm::cmd_train(config, out);
      for (const auto &r : outcome.runs)
      {
        print_report("seed " + std::to_string(r.seed), r.report);
      }
      print_report("aggregate", outcome.aggregate);
    }
    else if (eval->parsed())
    {
      const std::filesystem::path ckpt_dir = run_dir.empty() ? out : std::filesystem::path(run_dir);
      const auto report = ronorm::cmd_eval(config, ckpt_dir, out);
      print_report("eval", report);
    }
    else if (svd->parsed())
    {
      const auto report = ronorm::cmd_svd_report(config, out);
      std::cout << "k99 separate " << report.k99_separate << ", overall " << report.k99_overall
                << '\n';
    }
    return kOk;
  }
  catch (const ronorm::Error &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  catch (const std::exception &e)
  {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
