// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ronorm/io.hpp"
#include "ronorm/reduction.hpp"

namespace ronorm
{

/// What to do with a truth sample of zero norm: training treats it as an
/// error, evaluation skips it and reports the skip.
enum class ZeroNormPolicy
{
  Error,
  Skip,
};

struct RelativeL2
{
  double value = 0.0;
  int skipped = 0;
};

/// Mean over samples of ||pred_p - truth_p||_2 / ||truth_p||_2, where each
/// sample is `sample_size` consecutive values.
RelativeL2 relative_l2(std::span<const double> pred, std::span<const double> truth,
                       std::size_t sample_size, ZeroNormPolicy policy);

double e_l2(const SnapshotTensor &pred, const SnapshotTensor &truth);

/// Mean over samples of the maximum absolute pointwise error.
double mme(const SnapshotTensor &pred, const SnapshotTensor &truth);

/// Per-sample maximum absolute errors, sorted ascending.
std::vector<double> max_error_distribution(const SnapshotTensor &pred, const SnapshotTensor &truth);

struct HistogramSpec
{
  int n_space_pts = 60;
  int n_time_pts = 100;
  std::uint64_t seed = 0;
  int n_bins = 20;
  double max_error = 1.0;  // bins span [0, max_error); larger errors land in the last bin
  double threshold = 2.0;
};

struct ErrorHistogram
{
  std::vector<double> edges;  // n_bins + 1
  std::vector<long> counts;
  long total = 0;
  double fraction_below = 0.0;  // fraction of selected points with error < threshold
  double threshold = 0.0;
};

ErrorHistogram error_histogram(const SnapshotTensor &pred, const SnapshotTensor &truth,
                               const HistogramSpec &spec);

struct MeanStd
{
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and population standard deviation.
MeanStd mean_std(std::span<const double> values);
/// "mean (std)" with fixed decimals.
std::string format_mean_std(const MeanStd &ms, int decimals = 3);

struct EvalReport
{
  MeanStd e_l2;
  MeanStd mme;
  int skipped_samples = 0;
  std::vector<double> per_sample_max_errors;
  ErrorHistogram histogram;
  double wall_clock_s = 0.0;
  std::size_t parameter_count = 0;
};

EvalReport evaluate(const SnapshotTensor &pred, const SnapshotTensor &truth,
                    const HistogramSpec &spec);

json to_json(const EvalReport &report);
void write_report(const EvalReport &report, const std::filesystem::path &dir,
                  const std::string &config_hash);

}  // namespace ronorm
