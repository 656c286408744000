#pragma once

#include <string>
#include <vector>

#include "autoemb/streaming.hpp"

namespace autoemb {

// Aggregates over predictions whose entity popularity (at prediction time)
// fell into [edges[k], edges[k+1]); the last bucket is open-ended.
struct BucketRow {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0; // 0 means unbounded (last bucket)
  std::size_t user_count = 0, item_count = 0;
  double user_loss = 0.0, user_accuracy = 0.0;
  double item_loss = 0.0, item_accuracy = 0.0;
  std::vector<double> alpha_mean, beta_mean; // user-/item-side weight means
};

std::vector<BucketRow> bucket_metrics(const MetricLog& log,
                                      const std::vector<std::uint64_t>& edges);

struct LearningCurvePoint {
  std::size_t examples_seen = 0; // cumulative, after this batch
  double loss = 0.0;
  double accuracy = 0.0;
  double cumulative_loss = 0.0;     // example-weighted running mean
  double cumulative_accuracy = 0.0;
};

std::vector<LearningCurvePoint> learning_curve(const MetricLog& log);

// Per-stage aggregate of a finished run.
struct StageSummary {
  std::size_t batches = 0;
  std::size_t examples = 0;
  double mean_loss = 0.0;     // example-weighted
  double mean_accuracy = 0.0;
};

struct RunSummary {
  Mode mode = Mode::AutoEmb;
  Task task = Task::Regression;
  std::uint64_t seed = 0;
  std::uint64_t fingerprint = 0;
  StageSummary offline, online;
};

RunSummary summarize(const MetricLog& log, Task task, std::uint64_t seed,
                     std::uint64_t fingerprint);

void save_summary(const std::string& path, const RunSummary& s);
RunSummary load_summary(const std::string& path);

// Plot-data files under <run_dir>/figures/: popularity_metrics.csv,
// weight_distribution.csv, learning_curve.csv.
void write_figures(const std::string& run_dir, const MetricLog& log,
                   const std::vector<std::uint64_t>& edges);

// Mean +/- std of the online-stage metrics per mode across seed runs.
struct CompareRow {
  Mode mode = Mode::AutoEmb;
  std::size_t runs = 0;
  double loss_mean = 0.0, loss_std = 0.0;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
};

// Reads each run directory's summary; all runs must share the task and the
// stream fingerprint. Rows come back in the order FSE, SAM, DARTS, AutoEmb.
std::vector<CompareRow> compare_runs(const std::vector<std::string>& run_dirs);

std::string render_compare_table(const std::vector<CompareRow>& rows, Task task);

} // namespace autoemb
