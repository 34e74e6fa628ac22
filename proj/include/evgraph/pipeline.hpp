#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "evgraph/config.hpp"
#include "evgraph/dataflow.hpp"
#include "evgraph/weights.hpp"

namespace evgraph {

// Cross-checks the weights file against the configured layer stack.
inline void validate_against(const PipelineConfig& cfg,
                             const NetworkWeights& net) {
  if (net.size() != cfg.layers.size())
    throw config_error("weights file has " + std::to_string(net.size()) +
                       " layers, config expects " +
                       std::to_string(cfg.layers.size()));
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net[i].w.in_dim != cfg.layers[i].in_dim ||
        net[i].w.out_dim != cfg.layers[i].out_dim)
      throw config_error("weights layer " + std::to_string(i) +
                         " dims do not match the config");
    if (i > 0) {
      const double a = net[i].scale_x;
      const double b = net[i - 1].scale_out;
      if (std::abs(a - b) > 1e-9 * std::max(std::abs(a), std::abs(b)))
        throw config_error("weights layer " + std::to_string(i) +
                           " scale_x does not chain from the previous scale_out");
    }
  }
}

namespace detail {

// Variant dispatch for the synchronous layers; baseline_lut and
// baseline_dsp run the same arithmetic.
class SyncRunner {
 public:
  SyncRunner(const LayerWeights& lw, Variant variant)
      : runner_(make_runner(lw, variant)) {}

  TemporalChannel push(const TemporalChannel& tc) {
    return std::visit([&](auto& r) { return r.push(tc); }, runner_);
  }

  void reset() {
    std::visit([](auto& r) { r.reset(); }, runner_);
  }

 private:
  static std::variant<BaselineLayerRunner, TwoStepLayerRunner> make_runner(
      const LayerWeights& lw, Variant variant) {
    if (variant == Variant::two_step)
      return TwoStepLayerRunner(lw.w, lw.rq, lw.lut, lw.scale_out);
    return BaselineLayerRunner(lw.w, lw.rq, lw.scale_out);
  }

  std::variant<BaselineLayerRunner, TwoStepLayerRunner> runner_;
};

inline nlohmann::json channel_to_json(const TemporalChannel& ch,
                                      std::size_t window,
                                      const std::string& stage) {
  nlohmann::json j;
  j["window"] = window;
  j["stage"] = stage;
  j["tc_index"] = ch.tc_index();
  j["size"] = ch.size();
  j["dim"] = ch.dim();
  j["scale"] = ch.scale();
  j["occupancy"] = nlohmann::json::array();
  for (auto o : ch.occupancy()) j["occupancy"].push_back(int(o));
  j["features"] = nlohmann::json::array();
  for (auto f : ch.raw_features()) j["features"].push_back(int(f));
  return j;
}

// Groups a sorted event stream into windows counted from the first
// timestamp. Gaps produce empty windows.
struct WindowedEvents {
  std::int64_t t_first = 0;
  std::vector<std::vector<Event>> windows;
};

inline WindowedEvents slice_windows(std::span<const Event> events,
                                    const WindowConfig& w) {
  WindowedEvents we;
  if (events.empty()) return we;
  we.t_first = events.front().t;
  for (const Event& e : events) {
    const std::size_t idx = std::size_t(window_index(e, we.t_first, w));
    if (idx >= we.windows.size()) we.windows.resize(idx + 1);
    we.windows[idx].push_back(e);
  }
  return we;
}

}  // namespace detail

struct LayerStageStats {
  std::string stage;
  std::size_t occupied_cells = 0;
};

struct SimResult {
  std::size_t events = 0;
  std::size_t windows = 0;
  std::size_t vertices = 0;
  std::size_t dropped = 0;  // events landing in an occupied cell
  std::vector<LayerStageStats> stages;
  nlohmann::json dump;  // array of channel documents when requested
};

struct SimOptions {
  bool collect_dump = false;
};

// Full pipeline: events -> windows -> vertex graph -> asynchronous
// convolution -> Relaxing MaxPool -> synchronous layer chain. Each window
// is independent; runners are reset at window boundaries.
inline SimResult run_sim(const PipelineConfig& cfg, const NetworkWeights& net,
                         std::span<const Event> events,
                         const SimOptions& options = {}) {
  validate_against(cfg, net);
  const LayerWeights& async_w = net.front();
  const std::size_t n_sync = cfg.layers.size() - 1;

  SimResult result;
  result.events = events.size();
  result.dump = nlohmann::json::array();
  result.stages.push_back({"pool", 0});
  for (std::size_t i = 0; i < n_sync; ++i)
    result.stages.push_back({"conv" + std::to_string(i + 1), 0});

  std::vector<detail::SyncRunner> runners;
  for (std::size_t i = 0; i < n_sync; ++i)
    runners.emplace_back(net[i + 1], cfg.layers[i + 1].variant);

  const auto sliced = detail::slice_windows(events, cfg.window);
  result.windows = sliced.windows.size();

  for (std::size_t wi = 0; wi < sliced.windows.size(); ++wi) {
    const auto& window_events = sliced.windows[wi];
    if (window_events.empty()) continue;
    const std::int64_t window_start =
        sliced.t_first + std::int64_t(wi) * cfg.window.time_window_ns;

    VertexStore store(cfg.window.input_size, 3);
    std::vector<GridVertex> async_outputs;
    for (const Event& e : window_events) {
      if (e.x >= cfg.camera.width || e.y >= cfg.camera.height)
        throw data_error("event at t=" + std::to_string(e.t) +
                         " lies outside the camera geometry");
      const GridPos pos = normalize_to_grid(e, cfg.camera, cfg.window, window_start);
      GridVertex v = event_to_vertex(e, pos, async_w.scale_x);
      if (!store.insert(v)) {
        ++result.dropped;
        continue;
      }
      ++result.vertices;
      GridVertex out;
      out.pos = pos;
      out.feature = async_conv(store, v, async_w.w, async_w.rq, async_w.scale_out);
      async_outputs.push_back(std::move(out));
    }

    auto channels = maxpool_relax(async_outputs, cfg.window.input_size,
                                  async_w.w.out_dim, async_w.scale_out);
    for (auto& r : runners) r.reset();
    for (const TemporalChannel& pooled : channels) {
      result.stages[0].occupied_cells += pooled.occupied_count();
      if (options.collect_dump)
        result.dump.push_back(detail::channel_to_json(pooled, wi, "pool"));
      TemporalChannel tc = pooled;
      for (std::size_t li = 0; li < runners.size(); ++li) {
        tc = runners[li].push(tc);
        result.stages[li + 1].occupied_cells += tc.occupied_count();
        if (options.collect_dump)
          result.dump.push_back(
              detail::channel_to_json(tc, wi, result.stages[li + 1].stage));
      }
    }
  }
  return result;
}

struct LayerDiff {
  std::string stage;
  std::int32_t max_abs_diff = 0;
  std::size_t differing = 0;
  std::size_t element_count = 0;

  double differing_fraction() const {
    return element_count == 0 ? 0.0
                              : double(differing) / double(element_count);
  }
};

struct CompareResult {
  std::vector<LayerDiff> layers;
  bool violation = false;  // any layer beyond 1 LSB
};

// Runs every synchronous layer in both dataflows on identical inputs: the
// canonical stream is the baseline chain, and each two-step layer consumes
// the same input channels as its baseline counterpart.
inline CompareResult run_compare(const PipelineConfig& cfg,
                                 const NetworkWeights& net,
                                 std::span<const Event> events) {
  validate_against(cfg, net);
  const LayerWeights& async_w = net.front();
  const std::size_t n_sync = cfg.layers.size() - 1;

  CompareResult result;
  for (std::size_t i = 0; i < n_sync; ++i)
    result.layers.push_back({"conv" + std::to_string(i + 1), 0, 0, 0});

  std::vector<BaselineLayerRunner> base_runners;
  std::vector<TwoStepLayerRunner> two_runners;
  for (std::size_t i = 0; i < n_sync; ++i) {
    base_runners.emplace_back(net[i + 1].w, net[i + 1].rq, net[i + 1].scale_out);
    two_runners.emplace_back(net[i + 1].w, net[i + 1].rq, net[i + 1].lut,
                             net[i + 1].scale_out);
  }

  const auto sliced = detail::slice_windows(events, cfg.window);
  for (std::size_t wi = 0; wi < sliced.windows.size(); ++wi) {
    const auto& window_events = sliced.windows[wi];
    if (window_events.empty()) continue;
    const std::int64_t window_start =
        sliced.t_first + std::int64_t(wi) * cfg.window.time_window_ns;

    VertexStore store(cfg.window.input_size, 3);
    std::vector<GridVertex> async_outputs;
    for (const Event& e : window_events) {
      if (e.x >= cfg.camera.width || e.y >= cfg.camera.height)
        throw data_error("event at t=" + std::to_string(e.t) +
                         " lies outside the camera geometry");
      const GridPos pos = normalize_to_grid(e, cfg.camera, cfg.window, window_start);
      GridVertex v = event_to_vertex(e, pos, async_w.scale_x);
      if (!store.insert(v)) continue;
      GridVertex out;
      out.pos = pos;
      out.feature = async_conv(store, v, async_w.w, async_w.rq, async_w.scale_out);
      async_outputs.push_back(std::move(out));
    }

    auto channels = maxpool_relax(async_outputs, cfg.window.input_size,
                                  async_w.w.out_dim, async_w.scale_out);
    for (auto& r : base_runners) r.reset();
    for (auto& r : two_runners) r.reset();
    for (const TemporalChannel& pooled : channels) {
      TemporalChannel tc = pooled;
      for (std::size_t li = 0; li < n_sync; ++li) {
        const TemporalChannel base_out = base_runners[li].push(tc);
        const TemporalChannel two_out = two_runners[li].push(tc);
        const DiffStats stats = compare_channels(base_out, two_out);
        LayerDiff& diff = result.layers[li];
        diff.max_abs_diff = std::max(diff.max_abs_diff, stats.max_abs_diff);
        diff.differing += std::size_t(std::llround(
            stats.differing_fraction * double(stats.element_count)));
        diff.element_count += stats.element_count;
        tc = base_out;  // the baseline chain is canonical
      }
    }
  }
  for (const LayerDiff& diff : result.layers)
    if (diff.max_abs_diff > 1) result.violation = true;
  return result;
}

}  // namespace evgraph
