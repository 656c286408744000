#pragma once

#include <memory>
#include <string>

#include "autoemb/data.hpp"
#include "autoemb/model.hpp"
#include "autoemb/rng.hpp"

namespace autoemb {

// Interaction counts seen so far, per entity. Counts only grow, and equal
// the number of processed interactions containing the entity.
class PopularityTracker {
 public:
  PopularityTracker(std::size_t users, std::size_t items)
      : user_counts_(users, 0), item_counts_(items, 0) {}

  std::uint64_t user(std::uint32_t id) const { return user_counts_[id]; }
  std::uint64_t item(std::uint32_t id) const { return item_counts_[id]; }
  const std::vector<std::uint64_t>& user_counts() const { return user_counts_; }
  const std::vector<std::uint64_t>& item_counts() const { return item_counts_; }

  void record(std::span<const Interaction> batch) {
    for (const Interaction& x : batch) {
      ++user_counts_[x.user];
      ++item_counts_[x.item];
    }
  }

 private:
  std::vector<std::uint64_t> user_counts_, item_counts_;
};

// Bounded uniform reservoir over already-trained-on interactions; validation
// batches are drawn from it with replacement. Insertion and sampling use
// independent seeded streams.
class ValidationBuffer {
 public:
  ValidationBuffer(std::size_t capacity, std::uint64_t seed);

  void insert(std::span<const Interaction> batch);
  bool can_sample(std::size_t batch_size) const { return buf_.size() >= batch_size; }
  std::vector<Interaction> sample(std::size_t batch_size);

  std::size_t size() const { return buf_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }
  const std::vector<Interaction>& contents() const { return buf_; }

 private:
  std::vector<Interaction> buf_;
  std::size_t capacity_;
  std::uint64_t inserted_ = 0;
  Rng reservoir_rng_, sample_rng_;
};

enum class Stage { Offline, Online };

std::string to_string(Stage s);

struct BatchRecord {
  std::size_t batch_idx = 0;
  Stage stage = Stage::Offline;
  std::size_t examples = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double mean_user_pop = 0.0;
  double mean_item_pop = 0.0;
  std::vector<double> alpha_mean, beta_mean; // length N; zeros in fse mode
};

// One row per evaluated example; feeds the popularity-bucketed reports.
struct ExampleRecord {
  std::size_t batch_idx = 0;
  Stage stage = Stage::Offline;
  std::uint64_t user_pop = 0;
  std::uint64_t item_pop = 0;
  double loss = 0.0;
  std::uint8_t correct = 0;
  std::vector<double> alpha, beta;
};

struct MetricLog {
  std::size_t n_spaces = 0;
  Mode mode = Mode::AutoEmb;
  std::vector<BatchRecord> batches;
  std::vector<ExampleRecord> examples;
  // Event sequence for protocol tests: 'e'valuate, 'c'ontroller step, 't'rain.
  std::string trace;
};

struct RunResult {
  MetricLog log;
  std::unique_ptr<Model> model;
  std::uint64_t fingerprint = 0;
};

// Batch-based streaming protocol: the first offline_fraction of the stream
// is the offline estimation stage, the rest the online stage, and in both
// stages every mini-batch is first evaluated with the current parameters,
// then (autoemb/darts) the controllers take a validation step, then the
// model trains on the batch. Popularity and the validation buffer advance
// only after the batch is fully processed, so predictions never see the
// batch they score.
RunResult run_stream(const Dataset& data, const ExperimentConfig& cfg,
                     std::uint64_t seed);

void write_metrics_csv(const std::string& path, const MetricLog& log);
void write_examples_csv(const std::string& path, const MetricLog& log);
MetricLog read_examples_csv(const std::string& path);
std::vector<BatchRecord> read_metrics_csv(const std::string& path);

// Shortest round-trip decimal encoding (shared by every CSV writer so that
// identical runs serialize to identical bytes).
std::string format_double(double v);

} // namespace autoemb
