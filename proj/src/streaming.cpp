#include "autoemb/streaming.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "autoemb/error.hpp"
#include "autoemb/kernels.hpp"
#include "autoemb/optimizer.hpp"

namespace autoemb {

ValidationBuffer::ValidationBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), reservoir_rng_(Rng(seed).fork(1)),
      sample_rng_(Rng(seed).fork(2)) {
  buf_.reserve(capacity_);
}

void ValidationBuffer::insert(std::span<const Interaction> batch) {
  for (const Interaction& x : batch) {
    ++inserted_;
    if (buf_.size() < capacity_) {
      buf_.push_back(x);
    } else {
      // Algorithm R: element k survives with probability capacity/k.
      const std::size_t j = reservoir_rng_.index(inserted_);
      if (j < capacity_) buf_[j] = x;
    }
  }
}

std::vector<Interaction> ValidationBuffer::sample(std::size_t batch_size) {
  if (buf_.empty()) throw ContractError("sampling from an empty validation buffer");
  std::vector<Interaction> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i)
    out.push_back(buf_[sample_rng_.index(buf_.size())]);
  return out;
}

std::string to_string(Stage s) { return s == Stage::Offline ? "offline" : "online"; }

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace {

std::vector<double> column_means(const TensorPtr& t) {
  if (!t) return {};
  const std::size_t rows = t->rows(), cols = t->cols();
  std::vector<double> m(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[j] += t->values[i * cols + j];
  for (double& v : m) v /= static_cast<double>(rows);
  return m;
}

} // namespace

RunResult run_stream(const Dataset& data, const ExperimentConfig& cfg,
                     std::uint64_t seed) {
  cfg.validate();
  const auto& stream = data.interactions;
  if (stream.empty()) throw ConfigError("stream: must be non-empty");
  for (std::size_t i = 1; i < stream.size(); ++i)
    if (stream[i].timestamp < stream[i - 1].timestamp)
      throw IngestError("stream is not sorted by timestamp at position " +
                        std::to_string(i));

  kernels::set_backend(cfg.kernel_backend == "serial" ? kernels::Backend::Serial
                                                      : kernels::Backend::OpenMP);

  const std::size_t users = data.users.size(), items = data.items.size();
  RunResult result;
  result.fingerprint = stream_fingerprint(stream);
  result.model = std::make_unique<Model>(cfg, users, items, seed);
  Model& model = *result.model;
  const auto opt = OptimizerConfig::from(cfg);

  PopularityTracker pop(users, items);
  ValidationBuffer buffer(cfg.reservoir_capacity, Rng(seed).fork(100).next_u64());

  const std::size_t n = cfg.dims.size();
  MetricLog& log = result.log;
  log.n_spaces = n;
  log.mode = cfg.mode;

  const auto split_at = static_cast<std::size_t>(
      std::floor(cfg.offline_fraction * static_cast<double>(stream.size())));
  const bool has_controller_steps =
      cfg.mode == Mode::AutoEmb || cfg.mode == Mode::DartsWeights;

  std::size_t batch_idx = 0;
  for (std::size_t begin = 0; begin < stream.size(); begin += cfg.batch_size) {
    const std::size_t end = std::min(begin + cfg.batch_size, stream.size());
    const std::span<const Interaction> batch(stream.data() + begin, end - begin);
    const Stage stage = end <= split_at ? Stage::Offline : Stage::Online;
    auto view = BatchView::from(batch, pop.user_counts(), pop.item_counts(),
                                cfg.task);

    // 1. Prequential evaluation with the current parameters.
    {
      Tape tape;
      const BnMode eval_mode = batch.size() > 1 ? BnMode::Batch : BnMode::Infer;
      auto fwd = model.forward_loss(tape, view, eval_mode);
      log.trace += 'e';

      BatchRecord rec;
      rec.batch_idx = batch_idx;
      rec.stage = stage;
      rec.examples = batch.size();
      rec.loss = fwd.loss->values[0];
      rec.accuracy = accuracy(cfg.task, *fwd.out.pred, view.labels);
      double up = 0.0, ip = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        up += static_cast<double>(view.user_pop[i]);
        ip += static_cast<double>(view.item_pop[i]);
      }
      rec.mean_user_pop = up / static_cast<double>(batch.size());
      rec.mean_item_pop = ip / static_cast<double>(batch.size());
      rec.alpha_mean = fwd.alpha ? column_means(fwd.alpha) : std::vector<double>(n, 0.0);
      rec.beta_mean = fwd.beta ? column_means(fwd.beta) : std::vector<double>(n, 0.0);
      log.batches.push_back(std::move(rec));

      const auto losses = per_example_losses(cfg.task, fwd.out, view.labels);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        ExampleRecord ex;
        ex.batch_idx = batch_idx;
        ex.stage = stage;
        ex.user_pop = view.user_pop[i];
        ex.item_pop = view.item_pop[i];
        ex.loss = losses[i];
        if (cfg.task == Task::Regression) {
          const int hat = fwd.out.pred->values[i] >= 0.5 ? 1 : 0;
          ex.correct = hat == static_cast<int>(view.labels.binary[i]) ? 1 : 0;
        } else {
          const double* row = fwd.out.pred->values.data() + i * fwd.out.pred->cols();
          std::size_t best = 0;
          for (std::size_t j = 1; j < fwd.out.pred->cols(); ++j)
            if (row[j] > row[best]) best = j;
          ex.correct = best == static_cast<std::size_t>(view.labels.classes[i]) ? 1 : 0;
        }
        if (fwd.alpha) {
          ex.alpha.assign(fwd.alpha->values.begin() + i * n,
                          fwd.alpha->values.begin() + (i + 1) * n);
          ex.beta.assign(fwd.beta->values.begin() + i * n,
                         fwd.beta->values.begin() + (i + 1) * n);
        } else {
          ex.alpha.assign(n, 0.0);
          ex.beta.assign(n, 0.0);
        }
        log.examples.push_back(std::move(ex));
      }
    }

    // 2. Controller update from previously seen interactions. Skipped until
    //    the buffer holds one full batch (cold start).
    if (has_controller_steps && buffer.can_sample(cfg.batch_size)) {
      const auto val = buffer.sample(cfg.batch_size);
      auto val_view = BatchView::from(val, pop.user_counts(), pop.item_counts(),
                                      cfg.task);
      controller_step(model, val_view, view, opt);
      log.trace += 'c';
    }

    // 3. Model update on this batch.
    if (cfg.mode == Mode::Sam)
      sam_step(model, view, opt);
    else
      train_step(model, view, opt);
    log.trace += 't';

    // 4. Only now does the batch become history.
    pop.record(batch);
    buffer.insert(batch);
    ++batch_idx;
  }
  return result;
}

namespace {

void write_csv_header(std::ofstream& out, std::size_t n, bool examples) {
  if (examples)
    out << "batch_idx,stage,mode,user_pop,item_pop,loss,correct";
  else
    out << "batch_idx,stage,mode,loss,accuracy,mean_user_popularity,"
           "mean_item_popularity";
  for (std::size_t i = 1; i <= n; ++i) out << ",alpha_mean_" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",beta_mean_" << i;
  out << '\n';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    fields.push_back(line.substr(pos, comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return fields;
}

double parse_double_field(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) throw IngestError("bad numeric field '" + s + "'");
  return v;
}

} // namespace

void write_metrics_csv(const std::string& path, const MetricLog& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_csv_header(out, log.n_spaces, false);
  const std::string mode = to_string(log.mode);
  for (const BatchRecord& r : log.batches) {
    out << r.batch_idx << ',' << to_string(r.stage) << ',' << mode << ','
        << format_double(r.loss) << ',' << format_double(r.accuracy) << ','
        << format_double(r.mean_user_pop) << ',' << format_double(r.mean_item_pop);
    for (double v : r.alpha_mean) out << ',' << format_double(v);
    for (double v : r.beta_mean) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error("write to " + path + " failed");
}

void write_examples_csv(const std::string& path, const MetricLog& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_csv_header(out, log.n_spaces, true);
  const std::string mode = to_string(log.mode);
  for (const ExampleRecord& r : log.examples) {
    out << r.batch_idx << ',' << to_string(r.stage) << ',' << mode << ','
        << r.user_pop << ',' << r.item_pop << ',' << format_double(r.loss) << ','
        << static_cast<int>(r.correct);
    for (double v : r.alpha) out << ',' << format_double(v);
    for (double v : r.beta) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error("write to " + path + " failed");
}

MetricLog read_examples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(path + " is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 8 || header[0] != "batch_idx" || header[3] != "user_pop")
    throw IngestError(path + " is not an example log");
  MetricLog log;
  log.n_spaces = (header.size() - 7) / 2;
  bool mode_set = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7 + 2 * log.n_spaces)
      throw IngestError(path + ": bad field count");
    if (!mode_set) {
      log.mode = mode_from_string(f[2]);
      mode_set = true;
    }
    ExampleRecord r;
    r.batch_idx = static_cast<std::size_t>(parse_double_field(f[0]));
    r.stage = f[1] == "offline" ? Stage::Offline : Stage::Online;
    r.user_pop = static_cast<std::uint64_t>(parse_double_field(f[3]));
    r.item_pop = static_cast<std::uint64_t>(parse_double_field(f[4]));
    r.loss = parse_double_field(f[5]);
    r.correct = f[6] == "1" ? 1 : 0;
    for (std::size_t i = 0; i < log.n_spaces; ++i)
      r.alpha.push_back(parse_double_field(f[7 + i]));
    for (std::size_t i = 0; i < log.n_spaces; ++i)
      r.beta.push_back(parse_double_field(f[7 + log.n_spaces + i]));
    log.examples.push_back(std::move(r));
  }
  return log;
}

std::vector<BatchRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(path + " is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 8 || header[0] != "batch_idx" || header[3] != "loss")
    throw IngestError(path + " is not a metrics log");
  const std::size_t n = (header.size() - 7) / 2;
  std::vector<BatchRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7 + 2 * n) throw IngestError(path + ": bad field count");
    BatchRecord r;
    r.batch_idx = static_cast<std::size_t>(parse_double_field(f[0]));
    r.stage = f[1] == "offline" ? Stage::Offline : Stage::Online;
    r.loss = parse_double_field(f[3]);
    r.accuracy = parse_double_field(f[4]);
    r.mean_user_pop = parse_double_field(f[5]);
    r.mean_item_pop = parse_double_field(f[6]);
    for (std::size_t i = 0; i < n; ++i)
      r.alpha_mean.push_back(parse_double_field(f[7 + i]));
    for (std::size_t i = 0; i < n; ++i)
      r.beta_mean.push_back(parse_double_field(f[7 + n + i]));
    records.push_back(std::move(r));
  }
  return records;
}

} // namespace autoemb
