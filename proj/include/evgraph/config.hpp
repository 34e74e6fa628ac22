#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evgraph/common.hpp"
#include "evgraph/events.hpp"
#include "evgraph/resources.hpp"

namespace evgraph {

struct LayerConfig {
  std::int32_t in_dim = 0;
  std::int32_t out_dim = 0;
  Variant variant = Variant::baseline_lut;
};

// The single configuration document that drives every command. Paths are
// resolved relative to the config file's directory.
struct PipelineConfig {
  CameraGeometry camera;
  WindowConfig window;
  std::vector<LayerConfig> layers;  // layers[0] is the asynchronous stage
  std::string weights_path;
  std::optional<Budget> budget;
  CostModelParams cost_model;
  std::uint64_t seed = 0;
};

inline void validate(const PipelineConfig& cfg) {
  validate(cfg.camera);
  validate(cfg.window);
  if (cfg.layers.empty()) throw config_error("config: at least one layer required");
  if (cfg.layers.front().in_dim != 1)
    throw config_error("config: first layer must take the 1-dim polarity feature");
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    if (cfg.layers[i].in_dim < 1 || cfg.layers[i].out_dim < 1)
      throw config_error("config: layer dims must be >= 1");
    if (i > 0 && cfg.layers[i].in_dim != cfg.layers[i - 1].out_dim)
      throw config_error("config: layer " + std::to_string(i) +
                         " in_dim does not chain from the previous out_dim");
  }
  if (cfg.budget) validate(*cfg.budget);
  validate(cfg.cost_model);
}

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  try {
    const auto& cam = j.at("camera");
    cfg.camera.width = cam.at("width").get<std::int32_t>();
    cfg.camera.height = cam.at("height").get<std::int32_t>();

    const auto& win = j.at("window");
    cfg.window.time_window_ns = win.at("time_window_ns").get<std::int64_t>();
    cfg.window.input_size = win.at("input_size").get<std::int32_t>();
    cfg.window.clock_ns = detail::get_or<std::int64_t>(win, "clock_ns", 5);

    for (const auto& layer : j.at("layers")) {
      LayerConfig lc;
      lc.in_dim = layer.at("in_dim").get<std::int32_t>();
      lc.out_dim = layer.at("out_dim").get<std::int32_t>();
      lc.variant = variant_from_string(
          detail::get_or<std::string>(layer, "variant", "baseline_lut"));
      cfg.layers.push_back(lc);
    }

    if (j.contains("weights")) {
      const auto rel = j.at("weights").get<std::string>();
      cfg.weights_path = (base_dir / rel).string();
    }

    if (j.contains("budget")) {
      const auto& b = j.at("budget");
      Budget budget;
      budget.lut = b.at("lut").get<std::int64_t>();
      budget.dsp = b.at("dsp").get<std::int64_t>();
      budget.bram = b.at("bram").get<std::int64_t>();
      cfg.budget = budget;
    }

    if (j.contains("cost_model")) {
      const auto& c = j.at("cost_model");
      CostModelParams& p = cfg.cost_model;
      p.lut_per_mac = detail::get_or<std::int64_t>(c, "lut_per_mac", p.lut_per_mac);
      p.lut_per_mac_dsp_variant = detail::get_or<std::int64_t>(
          c, "lut_per_mac_dsp_variant", p.lut_per_mac_dsp_variant);
      p.dsp_per_mult_lane =
          detail::get_or<std::int64_t>(c, "dsp_per_mult_lane", p.dsp_per_mult_lane);
      p.dsp_per_requant =
          detail::get_or<std::int64_t>(c, "dsp_per_requant", p.dsp_per_requant);
      p.bram_bits_per_block = detail::get_or<std::int64_t>(
          c, "bram_bits_per_block", p.bram_bits_per_block);
      if (c.contains("fixed_overhead")) {
        const auto& f = c.at("fixed_overhead");
        p.fixed_overhead.lut = f.at("lut").get<std::int64_t>();
        p.fixed_overhead.dsp = f.at("dsp").get<std::int64_t>();
        p.fixed_overhead.bram = f.at("bram").get<std::int64_t>();
      }
    }

    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

// Loads the config and returns it along with the canonical digest of the
// document (used by reports to make replays comparable).
struct LoadedConfig {
  PipelineConfig config;
  std::string digest;
};

inline std::string canonical_digest(const nlohmann::json& j) {
  const std::string canon = j.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config '" + path + "': " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  return LoadedConfig{config_from_json(j, base), canonical_digest(j)};
}

}  // namespace evgraph
