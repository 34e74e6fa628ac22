#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "evgraph/config.hpp"
#include "evgraph/pipeline.hpp"
#include "evgraph/report.hpp"
#include "evgraph/weights.hpp"

using namespace evgraph;

namespace {

PipelineConfig small_config(Variant sync_variant = Variant::baseline_lut) {
  PipelineConfig cfg;
  cfg.camera = {128, 128};
  cfg.window = {10'000'000, 32, 5};
  cfg.layers = {{1, 8, Variant::baseline_lut},
                {8, 16, sync_variant},
                {16, 16, sync_variant}};
  cfg.seed = 7;
  return cfg;
}

NetworkWeights small_weights(std::uint64_t seed = 7) {
  const std::vector<LayerDims> dims{{1, 8}, {8, 16}, {16, 16}};
  return generate_network_weights(dims, seed);
}

std::vector<Event> synthetic_events(std::size_t n, std::uint32_t seed,
                                    std::int32_t cam = 128,
                                    std::int64_t span_ns = 25'000'000) {
  std::mt19937 rng(seed);
  std::vector<Event> events;
  events.reserve(n);
  std::int64_t t = 1'000;
  for (std::size_t i = 0; i < n; ++i) {
    t += std::int64_t(rng() % std::uint32_t(2 * span_ns / n));
    events.push_back(Event{t, std::int32_t(rng() % std::uint32_t(cam)),
                           std::int32_t(rng() % std::uint32_t(cam)),
                           std::int8_t(rng() & 1)});
  }
  return events;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("weights survive a save/load round trip bit-exactly") {
  const NetworkWeights net = small_weights();
  TempFile file("evgraph_test_weights.json");
  save_weights(file.path, net);
  const NetworkWeights loaded = load_weights(file.path);
  REQUIRE(loaded.size() == net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    CHECK(loaded[i].w.w_feat == net[i].w.w_feat);
    CHECK(loaded[i].w.w_pos == net[i].w.w_pos);
    CHECK(loaded[i].w.scale_w == net[i].w.scale_w);
    CHECK(loaded[i].scale_x == net[i].scale_x);
    CHECK(loaded[i].scale_out == net[i].scale_out);
    CHECK(loaded[i].rq.mantissa == net[i].rq.mantissa);
    CHECK(loaded[i].rq.shift == net[i].rq.shift);
  }
}

TEST_CASE("weight generation is seed-deterministic") {
  const auto a = weights_to_json(small_weights(42)).dump();
  const auto b = weights_to_json(small_weights(42)).dump();
  const auto c = weights_to_json(small_weights(43)).dump();
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("generated scales keep the position table small but alive") {
  const NetworkWeights net = small_weights(11);
  for (const LayerWeights& lw : net) {
    std::size_t nonzero = 0;
    for (std::int32_t dt = -1; dt <= 1; ++dt)
      for (std::int32_t dy = -1; dy <= 1; ++dy)
        for (std::int32_t dx = -1; dx <= 1; ++dx)
          for (std::int32_t k = 0; k < lw.w.out_dim; ++k) {
            const int e = lw.lut.entry({dx, dy, dt})[k];
            CHECK(std::abs(e) <= 127);
            if (e != 0) ++nonzero;
          }
    // an all-zero table would make the two-step correction a no-op
    CHECK(nonzero > 0);
  }
}

TEST_CASE("config parsing, validation, and digest") {
  nlohmann::json j;
  j["camera"] = {{"width", 128}, {"height", 128}};
  j["window"] = {{"time_window_ns", 10'000'000}, {"input_size", 32}};
  j["layers"] = nlohmann::json::array();
  j["layers"].push_back({{"in_dim", 1}, {"out_dim", 8}});
  j["layers"].push_back({{"in_dim", 8}, {"out_dim", 16}, {"variant", "two_step"}});
  j["weights"] = "w.json";
  j["seed"] = 3;

  const PipelineConfig cfg = config_from_json(j, "/tmp");
  CHECK(cfg.window.clock_ns == 5);  // 200 MHz default
  CHECK(cfg.layers[1].variant == Variant::two_step);
  CHECK(cfg.weights_path == "/tmp/w.json");
  CHECK(cfg.seed == 3);

  SECTION("digest is stable and content-sensitive") {
    CHECK(canonical_digest(j) == canonical_digest(j));
    nlohmann::json j2 = j;
    j2["seed"] = 4;
    CHECK(canonical_digest(j) != canonical_digest(j2));
  }
  SECTION("first layer must be 1-dim") {
    nlohmann::json bad = j;
    bad["layers"][0]["in_dim"] = 2;
    CHECK_THROWS_AS(config_from_json(bad, "/tmp"), config_error);
  }
  SECTION("dims must chain") {
    nlohmann::json bad = j;
    bad["layers"][1]["in_dim"] = 9;
    CHECK_THROWS_AS(config_from_json(bad, "/tmp"), config_error);
  }
  SECTION("unknown variant") {
    nlohmann::json bad = j;
    bad["layers"][1]["variant"] = "three_step";
    CHECK_THROWS_AS(config_from_json(bad, "/tmp"), config_error);
  }
  SECTION("missing fields") {
    nlohmann::json bad = j;
    bad.erase("camera");
    CHECK_THROWS_AS(config_from_json(bad, "/tmp"), config_error);
  }
}

TEST_CASE("weights/config cross validation") {
  const PipelineConfig cfg = small_config();
  NetworkWeights net = small_weights();
  CHECK_NOTHROW(validate_against(cfg, net));

  SECTION("layer count mismatch") {
    net.pop_back();
    CHECK_THROWS_AS(validate_against(cfg, net), config_error);
  }
  SECTION("dim mismatch") {
    net[1].w.in_dim = 9;
    CHECK_THROWS_AS(validate_against(cfg, net), config_error);
  }
  SECTION("scale chain mismatch") {
    net[1].scale_x *= 2.0;
    CHECK_THROWS_AS(validate_against(cfg, net), config_error);
  }
}

TEST_CASE("run_sim on an empty stream reports zero windows") {
  const auto result = run_sim(small_config(), small_weights(), {});
  CHECK(result.windows == 0);
  CHECK(result.vertices == 0);
  CHECK(result.events == 0);
  for (const auto& s : result.stages) CHECK(s.occupied_cells == 0);
}

TEST_CASE("run_sim on a single event: one window, one cell per stage") {
  const std::vector<Event> events{Event{500, 10, 20, 1}};
  const auto result = run_sim(small_config(), small_weights(), events);
  CHECK(result.windows == 1);
  CHECK(result.vertices == 1);
  CHECK(result.dropped == 0);
  REQUIRE(result.stages.size() == 3);
  for (const auto& s : result.stages) CHECK(s.occupied_cells == 1);
}

TEST_CASE("occupancy is preserved through every synchronous layer") {
  const auto events = synthetic_events(3'000, 91);
  const auto result = run_sim(small_config(), small_weights(), events);
  REQUIRE(result.stages.size() == 3);
  CHECK(result.stages[0].occupied_cells == result.stages[1].occupied_cells);
  CHECK(result.stages[0].occupied_cells == result.stages[2].occupied_cells);
  CHECK(result.stages[0].occupied_cells > 0);
}

TEST_CASE("events outside the camera geometry are a data error") {
  PipelineConfig cfg = small_config();
  cfg.camera = {64, 64};
  const std::vector<Event> events{Event{500, 100, 20, 1}};
  CHECK_THROWS_AS(run_sim(cfg, small_weights(), events), data_error);
}

TEST_CASE("sim reports are byte-identical across runs") {
  const auto events = synthetic_events(10'000, 17);
  const PipelineConfig cfg = small_config(Variant::two_step);
  const NetworkWeights net = small_weights();
  SimOptions options;
  options.collect_dump = true;
  const auto r1 = run_sim(cfg, net, events, options);
  const auto r2 = run_sim(cfg, net, events, options);
  CHECK(sim_to_json(r1).dump() == sim_to_json(r2).dump());
  CHECK(r1.dump.dump() == r2.dump.dump());
}

TEST_CASE("baseline_dsp is bit-identical to baseline_lut end to end") {
  const auto events = synthetic_events(5'000, 33);
  const NetworkWeights net = small_weights();
  SimOptions options;
  options.collect_dump = true;
  const auto lut = run_sim(small_config(Variant::baseline_lut), net, events, options);
  const auto dsp = run_sim(small_config(Variant::baseline_dsp), net, events, options);
  CHECK(lut.dump.dump() == dsp.dump.dump());
}

TEST_CASE("run_compare: zero position weights force identical dataflows") {
  NetworkWeights net = small_weights();
  for (std::size_t i = 1; i < net.size(); ++i) {
    WeightMatrix w = net[i].w;
    std::fill(w.w_pos.begin(), w.w_pos.end(), std::int8_t(0));
    net[i] = make_layer_weights(std::move(w), net[i].scale_x, net[i].scale_out);
  }
  const auto events = synthetic_events(3'000, 55);
  const auto result = run_compare(small_config(), net, events);
  CHECK_FALSE(result.violation);
  for (const auto& layer : result.layers) {
    CHECK(layer.max_abs_diff == 0);
    CHECK(layer.differing_fraction() == 0.0);
    CHECK(layer.element_count > 0);
  }
}

TEST_CASE("run_compare stays within 1 LSB and counts elements") {
  const auto events = synthetic_events(8'000, 77);
  const auto result = run_compare(small_config(), small_weights(), events);
  CHECK_FALSE(result.violation);
  for (const auto& layer : result.layers) {
    CHECK(layer.max_abs_diff <= 1);
    CHECK(layer.element_count > 0);
  }
}

TEST_CASE("report envelope embeds command, digest, and version") {
  const auto report = make_report("sim", "0123456789abcdef", {{"x", 1}});
  CHECK(report["command"] == "sim");
  CHECK(report["config_digest"] == "0123456789abcdef");
  CHECK(report["tool_version"] == kToolVersion);
  CHECK(report["payload"]["x"] == 1);
}

TEST_CASE("sizing reports carry identical values in csv and json") {
  const auto rows = builtin_sizing_report();
  const auto j = sizing_to_json(rows);
  const std::string csv = sizing_to_csv(rows);

  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line ==
        "time_window_ms,size,throughput,out_dim,p_baseline,p_twostep,decrease_pct");

  std::size_t r = 0, c = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("#", 0) == 0) continue;
    std::istringstream fields(line);
    std::string field;
    std::vector<std::int64_t> values;
    while (std::getline(fields, field, ',')) values.push_back(std::stoll(field));
    REQUIRE(values.size() == 7);
    const auto& row = j["rows"][r];
    CHECK(values[0] == row["time_window_ms"].get<std::int64_t>());
    CHECK(values[1] == row["size"].get<std::int64_t>());
    CHECK(values[2] == row["throughput"].get<std::int64_t>());
    const auto& entry = row["entries"][c];
    CHECK(values[3] == entry["out_dim"].get<std::int64_t>());
    CHECK(values[4] == entry["p_baseline"].get<std::int64_t>());
    CHECK(values[5] == entry["p_twostep"].get<std::int64_t>());
    CHECK(values[6] == entry["decrease_pct"].get<std::int64_t>());
    if (++c == 3) {
      c = 0;
      ++r;
    }
  }
  CHECK(r == 7);

  // exactly one flagged row: the size=128 design point
  std::size_t flagged = 0;
  for (const auto& row : j["rows"])
    if (row["flagged"].get<bool>()) ++flagged;
  CHECK(flagged == 1);
  CHECK(csv.find("# note:") != std::string::npos);
}
