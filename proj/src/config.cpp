#include "autoemb/config.hpp"

#include <fstream>
#include <numeric>

#include <json.hpp>

#include "autoemb/error.hpp"

namespace autoemb {

using nlohmann::json;

std::size_t ExperimentConfig::total_dim() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{0});
}

void ExperimentConfig::validate() const {
  if (dims.empty()) throw ConfigError("dims: at least one embedding space required");
  for (std::size_t n = 1; n < dims.size(); ++n)
    if (dims[n] <= dims[n - 1])
      throw ConfigError("dims: must be strictly increasing");
  if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  if (lr_w < 0.0) throw ConfigError("lr_w: must be non-negative");
  if (lr_theta < 0.0) throw ConfigError("lr_theta: must be non-negative");
  if (xi < 0.0) throw ConfigError("xi: must be non-negative");
  if (second_order && xi == 0.0)
    throw ConfigError("second_order: requires xi > 0");
  if (!second_order && xi != 0.0)
    throw ConfigError("xi: nonzero xi requires second_order");
  if (seeds.empty()) throw ConfigError("seeds: at least one seed required");
  if (!(offline_fraction > 0.0 && offline_fraction < 1.0))
    throw ConfigError("offline_fraction: must lie in (0, 1)");
  if (feature_size < dims.size() + 4)
    throw ConfigError("feature_size: too small for the configured spaces");
  if (dlrs_hidden.empty()) throw ConfigError("dlrs_hidden: at least one layer");
  if (bn_eps <= 0.0) throw ConfigError("bn_eps: must be positive");
  if (reservoir_capacity < 1) throw ConfigError("reservoir_capacity: must be >= 1");
  for (std::size_t k = 1; k < bucket_edges.size(); ++k)
    if (bucket_edges[k] <= bucket_edges[k - 1])
      throw ConfigError("bucket_edges: must be strictly increasing");
  if (bucket_edges.empty()) throw ConfigError("bucket_edges: must be non-empty");
  if (kernel_backend != "openmp" && kernel_backend != "serial")
    throw ConfigError("kernel_backend: must be 'openmp' or 'serial'");
  if (dataset.empty() && !synth.enabled())
    throw ConfigError("dataset: a dataset path or a synth spec is required");
}

ExperimentConfig make_preset(Preset preset) {
  ExperimentConfig cfg;
  apply_preset(cfg, preset);
  return cfg;
}

void apply_preset(ExperimentConfig& cfg, Preset preset) {
  cfg.preset = preset;
  if (preset == Preset::Fidelity) {
    cfg.dims = {2, 16, 128};
    cfg.dlrs_hidden = {512, 512};
    cfg.controller_hidden = 512;
  } else {
    cfg.dims = {2, 4, 16};
    cfg.dlrs_hidden = {64, 64};
    cfg.controller_hidden = 64;
  }
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::AutoEmb: return "autoemb";
    case Mode::Fse: return "fse";
    case Mode::Sam: return "sam";
    case Mode::DartsWeights: return "darts";
  }
  return "?";
}

std::string to_string(Task t) {
  return t == Task::Regression ? "regression" : "classification";
}

std::string to_string(Preset p) {
  return p == Preset::Fidelity ? "fidelity" : "desk";
}

Mode mode_from_string(const std::string& s) {
  if (s == "autoemb") return Mode::AutoEmb;
  if (s == "fse") return Mode::Fse;
  if (s == "sam") return Mode::Sam;
  if (s == "darts" || s == "darts_weights") return Mode::DartsWeights;
  throw ConfigError("mode: unknown value '" + s + "'");
}

Task task_from_string(const std::string& s) {
  if (s == "regression") return Task::Regression;
  if (s == "classification") return Task::Classification;
  throw ConfigError("task: unknown value '" + s + "'");
}

Preset preset_from_string(const std::string& s) {
  if (s == "fidelity") return Preset::Fidelity;
  if (s == "desk") return Preset::Desk;
  throw ConfigError("preset: unknown value '" + s + "'");
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["synth"] = {{"users", c.synth.users},
                {"items", c.synth.items},
                {"interactions", c.synth.interactions},
                {"exponent", c.synth.exponent},
                {"seed", c.synth.seed}};
  j["task"] = to_string(c.task);
  j["mode"] = to_string(c.mode);
  j["preset"] = to_string(c.preset);
  j["dims"] = c.dims;
  j["batch_size"] = c.batch_size;
  j["lr_w"] = c.lr_w;
  j["lr_theta"] = c.lr_theta;
  j["xi"] = c.xi;
  j["second_order"] = c.second_order;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["dlrs_hidden"] = c.dlrs_hidden;
  j["controller_hidden"] = c.controller_hidden;
  j["feature_size"] = c.feature_size;
  j["bn_eps"] = c.bn_eps;
  j["bn_momentum"] = c.bn_momentum;
  j["controller_count_scale"] = c.controller_count_scale;
  j["context_loss_ema"] = c.context_loss_ema;
  j["reservoir_capacity"] = c.reservoir_capacity;
  j["offline_fraction"] = c.offline_fraction;
  j["bucket_edges"] = c.bucket_edges;
  j["kernel_backend"] = c.kernel_backend;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.dataset = j.at("dataset").get<std::string>();
    const auto& s = j.at("synth");
    c.synth.users = s.at("users").get<std::size_t>();
    c.synth.items = s.at("items").get<std::size_t>();
    c.synth.interactions = s.at("interactions").get<std::size_t>();
    c.synth.exponent = s.at("exponent").get<double>();
    c.synth.seed = s.at("seed").get<std::uint64_t>();
    c.task = task_from_string(j.at("task").get<std::string>());
    c.mode = mode_from_string(j.at("mode").get<std::string>());
    c.preset = preset_from_string(j.at("preset").get<std::string>());
    c.dims = j.at("dims").get<std::vector<std::size_t>>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.lr_w = j.at("lr_w").get<double>();
    c.lr_theta = j.at("lr_theta").get<double>();
    c.xi = j.at("xi").get<double>();
    c.second_order = j.at("second_order").get<bool>();
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.dlrs_hidden = j.at("dlrs_hidden").get<std::vector<std::size_t>>();
    c.controller_hidden = j.at("controller_hidden").get<std::size_t>();
    c.feature_size = j.at("feature_size").get<std::size_t>();
    c.bn_eps = j.at("bn_eps").get<double>();
    c.bn_momentum = j.at("bn_momentum").get<double>();
    c.controller_count_scale = j.at("controller_count_scale").get<double>();
    c.context_loss_ema = j.at("context_loss_ema").get<double>();
    c.reservoir_capacity = j.at("reservoir_capacity").get<std::size_t>();
    c.offline_fraction = j.at("offline_fraction").get<double>();
    c.bucket_edges = j.at("bucket_edges").get<std::vector<std::uint64_t>>();
    c.kernel_backend = j.at("kernel_backend").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return c;
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << config_to_json(cfg);
  if (!out) throw Error("write to " + path + " failed");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json(text);
}

} // namespace autoemb
