#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "autoemb/error.hpp"
#include "autoemb/experiment.hpp"
#include "autoemb/streaming.hpp"

using namespace autoemb;

namespace {

// Shared experiment flags; names mirror the ExperimentConfig fields.
struct RunArgs {
  ExperimentConfig cfg;
  std::string task = "regression";
  std::string mode = "autoemb";
  std::string preset = "fidelity";
  std::vector<std::size_t> dims, dlrs_hidden;
  std::size_t controller_hidden = 0;
  bool xi_given = false;
};

void add_run_options(CLI::App& cmd, RunArgs& a) {
  cmd.add_option("--dataset", a.cfg.dataset,
                 "ratings csv/csv.gz or interaction cache");
  cmd.add_option("--synth_users", a.cfg.synth.users, "synthetic stream: user count");
  cmd.add_option("--synth_items", a.cfg.synth.items, "synthetic stream: item count");
  cmd.add_option("--synth_interactions", a.cfg.synth.interactions,
                 "synthetic stream: interaction count");
  cmd.add_option("--synth_exponent", a.cfg.synth.exponent,
                 "synthetic stream: popularity exponent");
  cmd.add_option("--synth_seed", a.cfg.synth.seed, "synthetic stream: seed");
  cmd.add_option("--task", a.task, "regression | classification");
  cmd.add_option("--mode", a.mode, "autoemb | fse | sam | darts");
  cmd.add_option("--preset", a.preset, "fidelity | desk");
  cmd.add_option("--dims", a.dims, "embedding space dimensions, ascending");
  cmd.add_option("--batch_size", a.cfg.batch_size, "mini-batch size");
  cmd.add_option("--lr_w", a.cfg.lr_w, "model learning rate");
  cmd.add_option("--lr_theta", a.cfg.lr_theta, "controller learning rate");
  auto* xi = cmd.add_option("--xi", a.cfg.xi, "virtual-step size (second order)");
  cmd.add_flag("--second_order", a.cfg.second_order,
               "second-order controller updates");
  cmd.add_option("--seeds", a.cfg.seeds, "run seeds");
  cmd.add_option("--output_dir", a.cfg.output_dir, "output directory");
  cmd.add_option("--dlrs_hidden", a.dlrs_hidden, "hidden layer widths");
  cmd.add_option("--controller_hidden", a.controller_hidden,
                 "controller hidden width");
  cmd.add_option("--feature_size", a.cfg.feature_size, "controller input size");
  cmd.add_option("--bn_eps", a.cfg.bn_eps, "batch-norm epsilon");
  cmd.add_option("--bn_momentum", a.cfg.bn_momentum, "running-stat momentum");
  cmd.add_option("--reservoir_capacity", a.cfg.reservoir_capacity,
                 "validation reservoir capacity");
  cmd.add_option("--offline_fraction", a.cfg.offline_fraction,
                 "offline stage fraction");
  cmd.add_option("--bucket_edges", a.cfg.bucket_edges,
                 "popularity bucket edges, ascending");
  cmd.add_option("--kernel_backend", a.cfg.kernel_backend, "openmp | serial");
  cmd.callback([&a, xi] { a.xi_given = xi->count() > 0; });
}

ExperimentConfig finalize(RunArgs& a) {
  a.cfg.task = task_from_string(a.task);
  a.cfg.mode = mode_from_string(a.mode);
  const Preset preset = preset_from_string(a.preset);
  const auto defaults = make_preset(preset);
  a.cfg.preset = preset;
  a.cfg.dims = a.dims.empty() ? defaults.dims : a.dims;
  a.cfg.dlrs_hidden = a.dlrs_hidden.empty() ? defaults.dlrs_hidden : a.dlrs_hidden;
  a.cfg.controller_hidden =
      a.controller_hidden ? a.controller_hidden : defaults.controller_hidden;
  if (a.cfg.second_order && !a.xi_given) a.cfg.xi = a.cfg.lr_w;
  a.cfg.validate();
  return a.cfg;
}

int cmd_run(RunArgs& args) {
  const auto cfg = finalize(args);
  const auto runs = run_all_seeds(cfg);
  for (const SeedRun& r : runs) {
    std::cout << r.dir << ": " << to_string(cfg.mode) << " seed " << r.seed
              << " online loss " << format_double(r.summary.online.mean_loss)
              << " accuracy " << format_double(r.summary.online.mean_accuracy)
              << "\n";
  }
  return 0;
}

int cmd_synth(std::size_t users, std::size_t items, std::size_t interactions,
              double exponent, std::uint64_t seed, const std::string& out) {
  if (out.empty()) throw UsageError("synth: --out is required");
  const auto data = synth_stream(users, items, interactions, exponent, seed);
  if (out.ends_with(".csv"))
    write_csv(out, data);
  else
    save_cache(out, data);
  std::cout << out << ": " << data.interactions.size() << " interactions, "
            << data.users.size() << " users, " << data.items.size() << " items\n";
  return 0;
}

int cmd_figures(const std::string& run_dir, std::vector<std::uint64_t> edges) {
  namespace fs = std::filesystem;
  const auto cfg = load_config((fs::path(run_dir) / "config.json").string());
  if (edges.empty()) edges = cfg.bucket_edges;
  auto log = read_examples_csv((fs::path(run_dir) / "examples.csv").string());
  log.batches = read_metrics_csv((fs::path(run_dir) / "metrics.csv").string());
  write_figures(run_dir, log, edges);
  std::cout << run_dir << "/figures: popularity_metrics.csv "
            << "weight_distribution.csv learning_curve.csv\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& dirs) {
  const auto rows = compare_runs(dirs);
  const auto first = load_summary(
      (std::filesystem::path(dirs[0]) / "summary.json").string());
  std::cout << render_compare_table(rows, first.task);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming recommender with automatic embedding dimensionality"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run an experiment");
  add_run_options(*run, run_args);

  std::size_t s_users = 0, s_items = 0, s_interactions = 0;
  double s_exponent = 1.2;
  std::uint64_t s_seed = 7;
  std::string s_out;
  auto* synth = app.add_subcommand("synth", "emit a synthetic stream to a file");
  synth->add_option("--users", s_users)->required();
  synth->add_option("--items", s_items)->required();
  synth->add_option("--interactions", s_interactions)->required();
  synth->add_option("--exponent", s_exponent);
  synth->add_option("--seed", s_seed);
  synth->add_option("--out", s_out)->required();

  std::string fig_dir;
  std::vector<std::uint64_t> fig_edges;
  auto* figures = app.add_subcommand("figures", "emit plot data for a finished run");
  figures->add_option("run_dir", fig_dir)->required();
  figures->add_option("--bucket_edges", fig_edges);

  std::vector<std::string> cmp_dirs;
  auto* compare = app.add_subcommand("compare", "compare finished runs");
  compare->add_option("run_dirs", cmp_dirs)->expected(-2);

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(run_args);
    if (synth->parsed())
      return cmd_synth(s_users, s_items, s_interactions, s_exponent, s_seed, s_out);
    if (figures->parsed()) return cmd_figures(fig_dir, fig_edges);
    if (compare->parsed()) return cmd_compare(cmp_dirs);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
