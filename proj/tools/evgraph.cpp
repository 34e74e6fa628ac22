// evgraph: simulate the event-graph convolution dataflows, size their
// multiplier counts against a cycle budget, and explore per-layer variant
// assignments under a device resource budget.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evgraph/config.hpp"
#include "evgraph/events.hpp"
#include "evgraph/pipeline.hpp"
#include "evgraph/report.hpp"
#include "evgraph/weights.hpp"

namespace {

// Exit codes: 0 ok, 2 config error, 3 data error, 4 equivalence violation,
// 5 infeasible budget.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitViolation = 4;
constexpr int kExitInfeasible = 5;

struct Options {
  std::string config_path;
  std::string events_path;
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool paper_table = false;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw evgraph::data_error("cannot write output file '" + path + "'");
  out << content;
}

void emit(const std::string& content, const std::string& out_path) {
  std::cout << content;
  if (!out_path.empty()) write_file(out_path, content);
}

int cmd_sim(const Options& opt) {
  const auto loaded = evgraph::load_config(opt.config_path);
  if (loaded.config.weights_path.empty())
    throw evgraph::config_error("sim requires a 'weights' entry in the config");
  const auto weights = evgraph::load_weights(loaded.config.weights_path);
  const auto events = evgraph::parse_events_file(opt.events_path);

  evgraph::SimOptions sim_options;
  sim_options.collect_dump = !opt.out_path.empty();
  const auto result = evgraph::run_sim(loaded.config, weights, events, sim_options);
  if (!opt.out_path.empty()) {
    nlohmann::json dump;
    dump["config_digest"] = loaded.digest;
    dump["channels"] = result.dump;
    write_file(opt.out_path, dump.dump(2) + "\n");
  }
  const auto report = evgraph::make_report("sim", loaded.digest,
                                           evgraph::sim_to_json(result));
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_compare(const Options& opt) {
  const auto loaded = evgraph::load_config(opt.config_path);
  if (loaded.config.weights_path.empty())
    throw evgraph::config_error("compare requires a 'weights' entry in the config");
  const auto weights = evgraph::load_weights(loaded.config.weights_path);
  const auto events = evgraph::parse_events_file(opt.events_path);

  const auto result = evgraph::run_compare(loaded.config, weights, events);
  const auto report = evgraph::make_report("compare", loaded.digest,
                                           evgraph::compare_to_json(result));
  emit(report.dump(2) + "\n", opt.out_path);
  return result.violation ? kExitViolation : kExitOk;
}

int cmd_size(const Options& opt) {
  if (opt.format != "json" && opt.format != "csv")
    throw evgraph::config_error("unknown format '" + opt.format +
                                "' (expected csv or json)");

  std::vector<evgraph::AnnotatedSizingRow> rows;
  std::string digest = "-";
  if (opt.paper_table) {
    rows = evgraph::builtin_sizing_report();
  } else {
    if (opt.config_path.empty())
      throw evgraph::config_error("size needs --config or --paper-table");
    const auto loaded = evgraph::load_config(opt.config_path);
    digest = loaded.digest;
    const auto& cfg = loaded.config;
    std::vector<std::int32_t> out_dims;
    for (std::size_t i = 1; i < cfg.layers.size(); ++i) {
      const std::int32_t d = cfg.layers[i].out_dim;
      if (std::find(out_dims.begin(), out_dims.end(), d) == out_dims.end())
        out_dims.push_back(d);
    }
    if (out_dims.empty())
      throw evgraph::config_error("size: config has no synchronous layers");
    const evgraph::SizingConfig sc{cfg.window.time_window_ns,
                                   cfg.window.input_size / 4};
    const auto table = evgraph::sizing_table({&sc, 1}, out_dims,
                                             cfg.window.clock_ns);
    for (const auto& row : table) rows.push_back({row, false, {}});
  }

  if (opt.format == "csv") {
    emit(evgraph::sizing_to_csv(rows), opt.out_path);
  } else {
    const auto report =
        evgraph::make_report("size", digest, evgraph::sizing_to_json(rows));
    emit(report.dump(2) + "\n", opt.out_path);
  }
  return kExitOk;
}

int cmd_explore(const Options& opt) {
  const auto loaded = evgraph::load_config(opt.config_path);
  const auto& cfg = loaded.config;
  if (!cfg.budget)
    throw evgraph::config_error("explore requires a 'budget' entry in the config");

  std::vector<evgraph::LayerShape> layers;
  for (std::size_t i = 1; i < cfg.layers.size(); ++i)
    layers.push_back({cfg.layers[i].in_dim, cfg.layers[i].out_dim,
                      cfg.window.input_size / 4, cfg.layers[i].variant});
  if (layers.empty())
    throw evgraph::config_error("explore: config has no synchronous layers");

  const auto result =
      evgraph::explore(layers, cfg.window.time_window_ns, cfg.window.clock_ns,
                       *cfg.budget, cfg.cost_model);
  const auto report = evgraph::make_report("explore", loaded.digest,
                                           evgraph::explore_to_json(result));
  emit(report.dump(2) + "\n", opt.out_path);
  return result.feasible ? kExitOk : kExitInfeasible;
}

int cmd_gen_weights(const Options& opt) {
  const auto loaded = evgraph::load_config(opt.config_path);
  if (opt.out_path.empty())
    throw evgraph::config_error("gen-weights requires --out");
  const std::uint64_t seed = opt.seed_given ? opt.seed : loaded.config.seed;

  std::vector<evgraph::LayerDims> dims;
  for (const auto& layer : loaded.config.layers)
    dims.push_back({layer.in_dim, layer.out_dim});
  const auto net = evgraph::generate_network_weights(dims, seed);
  evgraph::save_weights(opt.out_path, net);

  nlohmann::json payload;
  payload["path"] = opt.out_path;
  payload["layers"] = net.size();
  payload["seed"] = seed;
  const auto report = evgraph::make_report("gen-weights", loaded.digest,
                                           std::move(payload));
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-graph convolution dataflow simulator and design explorer"};
  app.require_subcommand(1);
  Options opt;

  auto* sim = app.add_subcommand("sim", "Run the full pipeline on an event file");
  sim->add_option("--config", opt.config_path, "Pipeline config (JSON)")->required();
  sim->add_option("--events", opt.events_path, "Event file (t,x,y,p lines)")->required();
  sim->add_option("--out", opt.out_path, "Write the per-channel feature dump here");

  auto* compare = app.add_subcommand(
      "compare", "Run baseline and two-step dataflows and report differences");
  compare->add_option("--config", opt.config_path)->required();
  compare->add_option("--events", opt.events_path)->required();
  compare->add_option("--out", opt.out_path, "Also write the report here");

  auto* size = app.add_subcommand(
      "size", "Multiplier sizing table from the cycle budget model");
  size->add_option("--config", opt.config_path);
  size->add_flag("--paper-table", opt.paper_table,
                 "Use the built-in reference design points");
  size->add_option("--format", opt.format, "csv or json");
  size->add_option("--out", opt.out_path, "Also write the table here");

  auto* explore = app.add_subcommand(
      "explore", "Assign variants per layer under the device budget");
  explore->add_option("--config", opt.config_path)->required();
  explore->add_option("--out", opt.out_path, "Also write the report here");

  auto* gen = app.add_subcommand("gen-weights",
                                 "Generate reproducible weights for the config");
  gen->add_option("--config", opt.config_path)->required();
  gen->add_option("--out", opt.out_path, "Weights file to write")->required();
  auto* seed_opt = gen->add_option("--seed", opt.seed, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  opt.seed_given = seed_opt->count() > 0;

  try {
    if (sim->parsed()) return cmd_sim(opt);
    if (compare->parsed()) return cmd_compare(opt);
    if (size->parsed()) return cmd_size(opt);
    if (explore->parsed()) return cmd_explore(opt);
    if (gen->parsed()) return cmd_gen_weights(opt);
  } catch (const evgraph::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const evgraph::parse_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const evgraph::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}
