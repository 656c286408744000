#include "autoemb/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "autoemb/error.hpp"

namespace autoemb {

using nlohmann::json;

namespace {

std::size_t bucket_of(std::uint64_t pop, const std::vector<std::uint64_t>& edges) {
  // [e0,e1), [e1,e2), ..., [e_last, inf); values below e0 clamp to bucket 0
  std::size_t k = 0;
  while (k + 1 < edges.size() && pop >= edges[k + 1]) ++k;
  return k;
}

} // namespace

std::vector<BucketRow> bucket_metrics(const MetricLog& log,
                                      const std::vector<std::uint64_t>& edges) {
  if (edges.empty()) throw ConfigError("bucket_metrics: edges must be non-empty");
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (edges[k] <= edges[k - 1])
      throw ConfigError("bucket_metrics: edges must be strictly increasing");

  const std::size_t n = log.n_spaces;
  std::vector<BucketRow> rows(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    rows[k].lo = edges[k];
    rows[k].hi = k + 1 < edges.size() ? edges[k + 1] : 0;
    rows[k].alpha_mean.assign(n, 0.0);
    rows[k].beta_mean.assign(n, 0.0);
  }
  for (const ExampleRecord& ex : log.examples) {
    BucketRow& u = rows[bucket_of(ex.user_pop, edges)];
    ++u.user_count;
    u.user_loss += ex.loss;
    u.user_accuracy += ex.correct;
    for (std::size_t i = 0; i < n; ++i) u.alpha_mean[i] += ex.alpha[i];
    BucketRow& v = rows[bucket_of(ex.item_pop, edges)];
    ++v.item_count;
    v.item_loss += ex.loss;
    v.item_accuracy += ex.correct;
    for (std::size_t i = 0; i < n; ++i) v.beta_mean[i] += ex.beta[i];
  }
  for (BucketRow& r : rows) {
    if (r.user_count) {
      r.user_loss /= static_cast<double>(r.user_count);
      r.user_accuracy /= static_cast<double>(r.user_count);
      for (double& v : r.alpha_mean) v /= static_cast<double>(r.user_count);
    }
    if (r.item_count) {
      r.item_loss /= static_cast<double>(r.item_count);
      r.item_accuracy /= static_cast<double>(r.item_count);
      for (double& v : r.beta_mean) v /= static_cast<double>(r.item_count);
    }
  }
  return rows;
}

std::vector<LearningCurvePoint> learning_curve(const MetricLog& log) {
  // per-batch example counts reconstructed from the example records
  std::vector<std::size_t> counts(log.batches.size(), 0);
  for (const ExampleRecord& ex : log.examples)
    if (ex.batch_idx < counts.size()) ++counts[ex.batch_idx];

  std::vector<LearningCurvePoint> curve;
  curve.reserve(log.batches.size());
  std::size_t seen = 0;
  double loss_acc = 0.0, acc_acc = 0.0;
  for (std::size_t b = 0; b < log.batches.size(); ++b) {
    const BatchRecord& r = log.batches[b];
    const std::size_t nb = counts[b] ? counts[b] : r.examples;
    seen += nb;
    loss_acc += r.loss * static_cast<double>(nb);
    acc_acc += r.accuracy * static_cast<double>(nb);
    LearningCurvePoint p;
    p.examples_seen = seen;
    p.loss = r.loss;
    p.accuracy = r.accuracy;
    p.cumulative_loss = loss_acc / static_cast<double>(seen);
    p.cumulative_accuracy = acc_acc / static_cast<double>(seen);
    curve.push_back(p);
  }
  return curve;
}

RunSummary summarize(const MetricLog& log, Task task, std::uint64_t seed,
                     std::uint64_t fingerprint) {
  RunSummary s;
  s.mode = log.mode;
  s.task = task;
  s.seed = seed;
  s.fingerprint = fingerprint;
  std::vector<std::size_t> counts(log.batches.size(), 0);
  for (const ExampleRecord& ex : log.examples)
    if (ex.batch_idx < counts.size()) ++counts[ex.batch_idx];
  for (std::size_t b = 0; b < log.batches.size(); ++b) {
    const BatchRecord& r = log.batches[b];
    const std::size_t nb = counts[b] ? counts[b] : r.examples;
    StageSummary& st = r.stage == Stage::Offline ? s.offline : s.online;
    ++st.batches;
    st.examples += nb;
    st.mean_loss += r.loss * static_cast<double>(nb);
    st.mean_accuracy += r.accuracy * static_cast<double>(nb);
  }
  for (StageSummary* st : {&s.offline, &s.online}) {
    if (st->examples) {
      st->mean_loss /= static_cast<double>(st->examples);
      st->mean_accuracy /= static_cast<double>(st->examples);
    }
  }
  return s;
}

namespace {
json stage_json(const StageSummary& st) {
  return {{"batches", st.batches},
          {"examples", st.examples},
          {"mean_loss", st.mean_loss},
          {"mean_accuracy", st.mean_accuracy}};
}

StageSummary stage_from_json(const json& j) {
  StageSummary st;
  st.batches = j.at("batches").get<std::size_t>();
  st.examples = j.at("examples").get<std::size_t>();
  st.mean_loss = j.at("mean_loss").get<double>();
  st.mean_accuracy = j.at("mean_accuracy").get<double>();
  return st;
}
} // namespace

void save_summary(const std::string& path, const RunSummary& s) {
  json j;
  j["mode"] = to_string(s.mode);
  j["task"] = to_string(s.task);
  j["seed"] = s.seed;
  std::ostringstream fp;
  fp << std::hex << s.fingerprint;
  j["stream_fingerprint"] = fp.str();
  j["offline"] = stage_json(s.offline);
  j["online"] = stage_json(s.online);
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write to " + path + " failed");
}

RunSummary load_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json j;
  try {
    in >> j;
    RunSummary s;
    s.mode = mode_from_string(j.at("mode").get<std::string>());
    s.task = task_from_string(j.at("task").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.fingerprint = std::stoull(j.at("stream_fingerprint").get<std::string>(),
                                nullptr, 16);
    s.offline = stage_from_json(j.at("offline"));
    s.online = stage_from_json(j.at("online"));
    return s;
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_figures(const std::string& run_dir, const MetricLog& log,
                   const std::vector<std::uint64_t>& edges) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(run_dir) / "figures";
  fs::create_directories(dir);

  const auto buckets = bucket_metrics(log, edges);
  {
    std::ofstream out(dir / "popularity_metrics.csv");
    if (!out) throw Error("cannot write popularity_metrics.csv");
    out << "bucket_lo,bucket_hi,user_count,user_mean_loss,user_accuracy,"
           "item_count,item_mean_loss,item_accuracy\n";
    for (const BucketRow& r : buckets) {
      out << r.lo << ',' << r.hi << ',' << r.user_count << ','
          << format_double(r.user_loss) << ',' << format_double(r.user_accuracy)
          << ',' << r.item_count << ',' << format_double(r.item_loss) << ','
          << format_double(r.item_accuracy) << '\n';
    }
  }
  {
    std::ofstream out(dir / "weight_distribution.csv");
    if (!out) throw Error("cannot write weight_distribution.csv");
    out << "bucket_lo,bucket_hi,user_count,item_count";
    for (std::size_t i = 1; i <= log.n_spaces; ++i) out << ",alpha_mean_" << i;
    for (std::size_t i = 1; i <= log.n_spaces; ++i) out << ",beta_mean_" << i;
    out << '\n';
    for (const BucketRow& r : buckets) {
      out << r.lo << ',' << r.hi << ',' << r.user_count << ',' << r.item_count;
      for (double v : r.alpha_mean) out << ',' << format_double(v);
      for (double v : r.beta_mean) out << ',' << format_double(v);
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "learning_curve.csv");
    if (!out) throw Error("cannot write learning_curve.csv");
    out << "examples_seen,loss,accuracy,cumulative_loss,cumulative_accuracy\n";
    for (const LearningCurvePoint& p : learning_curve(log)) {
      out << p.examples_seen << ',' << format_double(p.loss) << ','
          << format_double(p.accuracy) << ',' << format_double(p.cumulative_loss)
          << ',' << format_double(p.cumulative_accuracy) << '\n';
    }
  }
}

std::vector<CompareRow> compare_runs(const std::vector<std::string>& run_dirs) {
  namespace fs = std::filesystem;
  if (run_dirs.size() < 2)
    throw UsageError("compare needs at least two run directories");
  std::vector<RunSummary> sums;
  for (const auto& dir : run_dirs)
    sums.push_back(load_summary((fs::path(dir) / "summary.json").string()));
  for (std::size_t i = 1; i < sums.size(); ++i) {
    if (sums[i].fingerprint != sums[0].fingerprint)
      throw Error("runs were made on different streams (fingerprint mismatch: " +
                  run_dirs[0] + " vs " + run_dirs[i] + ")");
    if (sums[i].task != sums[0].task)
      throw Error("runs mix tasks: " + run_dirs[0] + " vs " + run_dirs[i]);
  }

  const Mode order[] = {Mode::Fse, Mode::Sam, Mode::DartsWeights, Mode::AutoEmb};
  std::vector<CompareRow> rows;
  for (Mode m : order) {
    std::vector<double> losses, accs;
    for (const RunSummary& s : sums) {
      if (s.mode != m) continue;
      losses.push_back(s.online.mean_loss);
      accs.push_back(s.online.mean_accuracy);
    }
    if (losses.empty()) continue;
    auto mean_std = [](const std::vector<double>& xs) {
      const double mean =
          std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
      if (xs.size() < 2) return std::pair{mean, 0.0};
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      return std::pair{mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
    };
    CompareRow row;
    row.mode = m;
    row.runs = losses.size();
    std::tie(row.loss_mean, row.loss_std) = mean_std(losses);
    std::tie(row.accuracy_mean, row.accuracy_std) = mean_std(accs);
    rows.push_back(row);
  }
  return rows;
}

std::string render_compare_table(const std::vector<CompareRow>& rows, Task task) {
  std::ostringstream out;
  const char* loss_name = task == Task::Regression ? "MSE Loss" : "CE Loss";
  out << "mode     runs  " << loss_name << "            Accuracy\n";
  for (const CompareRow& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %4zu  %.6f +/- %.6f  %.6f +/- %.6f\n",
                  to_string(r.mode).c_str(), r.runs, r.loss_mean, r.loss_std,
                  r.accuracy_mean, r.accuracy_std);
    out << buf;
  }
  return out.str();
}

} // namespace autoemb
