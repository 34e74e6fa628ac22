#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evgraph/common.hpp"
#include "evgraph/quant.hpp"

namespace evgraph {

// Weights of one layer together with everything derived from the scales:
// the requantization parameters are the unique (mantissa, shift) encoding
// of scale_x * scale_w / scale_out, and the position table is prebuilt for
// the synchronous stage.
struct LayerWeights {
  WeightMatrix w;
  double scale_x = 1.0;
  double scale_out = 1.0;
  RequantParams rq;
  PosLut lut;
};

using NetworkWeights = std::vector<LayerWeights>;

inline LayerWeights make_layer_weights(WeightMatrix w, double scale_x,
                                       double scale_out) {
  validate(w);
  if (!(scale_x > 0.0) || !(scale_out > 0.0))
    throw config_error("scales must be positive");
  LayerWeights lw;
  lw.w = std::move(w);
  lw.scale_x = scale_x;
  lw.scale_out = scale_out;
  lw.rq = RequantParams::from_multiplier(scale_x * lw.w.scale_w / scale_out);
  lw.lut = build_pos_lut(lw.w, lw.rq);
  return lw;
}

// ---------------------------------------------------------------------------
// Reproducible weight generation
// ---------------------------------------------------------------------------

namespace detail {

// Engine-only draws keep generated files identical across standard library
// implementations (distribution classes are not portable).
inline std::int64_t draw_int(std::mt19937_64& rng, std::int64_t lo,
                             std::int64_t hi) {
  return lo + std::int64_t(rng() % std::uint64_t(hi - lo + 1));
}

}  // namespace detail

// Generates one layer of int8 weights with scales picked so that the
// feature-only products never saturate the step-1 requantization: the
// worst-case accumulator maps to ~120 LSB. That keeps the position table
// well inside 16 bits and makes the baseline/two-step outputs provably
// within 1 LSB of each other. `radius` is the largest |delta| component
// the layer sees (3 for the asynchronous stage, 1 for synchronous layers).
//
// Feature weights are kept small relative to position weights; with the
// whole extended vector sharing one scale, that is what keeps the
// position-delta contributions above the quantization floor.
inline LayerWeights generate_layer_weights(std::mt19937_64& rng,
                                           std::int32_t in_dim,
                                           std::int32_t out_dim,
                                           std::int32_t radius,
                                           double scale_x) {
  WeightMatrix w;
  w.in_dim = in_dim;
  w.out_dim = out_dim;
  w.w_feat.resize(std::size_t(in_dim) * out_dim);
  for (auto& v : w.w_feat)
    v = std::int8_t(detail::draw_int(rng, -8, 8));
  w.w_pos.resize(std::size_t(3) * out_dim);
  for (auto& v : w.w_pos)
    v = std::int8_t(detail::draw_int(rng, -127, 127));
  w.scale_w = 0.004 + 0.016 * double(detail::draw_int(rng, 0, 999)) / 999.0;

  std::int64_t worst_acc = 1;
  for (std::int32_t k = 0; k < out_dim; ++k) {
    std::int64_t acc = 0;
    for (std::int32_t i = 0; i < in_dim; ++i)
      acc += 127 * std::abs(std::int32_t(w.feat(i, k)));
    for (std::int32_t d = 0; d < 3; ++d)
      acc += radius * std::abs(std::int32_t(w.pos(d, k)));
    worst_acc = std::max(worst_acc, acc);
  }
  constexpr double kPeakTarget = 120.0;
  const double m = kPeakTarget / double(worst_acc);
  const double scale_out = scale_x * w.scale_w / m;
  return make_layer_weights(std::move(w), scale_x, scale_out);
}

struct LayerDims {
  std::int32_t in_dim = 0;
  std::int32_t out_dim = 0;
};

// Generates the whole network: the first layer is the asynchronous stage
// (radius 3, input scale 1/127 for the signed polarity feature), the rest
// chain scale_out -> scale_x. MaxPool does not change scales.
inline NetworkWeights generate_network_weights(std::span<const LayerDims> dims,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NetworkWeights net;
  double scale_x = 1.0 / 127.0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const std::int32_t radius = i == 0 ? 3 : 1;
    net.push_back(generate_layer_weights(rng, dims[i].in_dim, dims[i].out_dim,
                                         radius, scale_x));
    scale_x = net.back().scale_out;
  }
  return net;
}

// ---------------------------------------------------------------------------
// Weights file (JSON)
// ---------------------------------------------------------------------------

inline nlohmann::json weights_to_json(const NetworkWeights& net) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const LayerWeights& lw : net) {
    nlohmann::json layer;
    layer["in_dim"] = lw.w.in_dim;
    layer["out_dim"] = lw.w.out_dim;
    layer["w_feat"] = lw.w.w_feat;
    layer["w_pos"] = lw.w.w_pos;
    layer["scale_x"] = lw.scale_x;
    layer["scale_w"] = lw.w.scale_w;
    layer["scale_out"] = lw.scale_out;
    j["layers"].push_back(std::move(layer));
  }
  return j;
}

inline NetworkWeights weights_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array())
    throw config_error("weights file: expected an object with a 'layers' array");
  NetworkWeights net;
  for (const auto& layer : j["layers"]) {
    WeightMatrix w;
    try {
      w.in_dim = layer.at("in_dim").get<std::int32_t>();
      w.out_dim = layer.at("out_dim").get<std::int32_t>();
      for (const auto& v : layer.at("w_feat")) {
        const std::int64_t x = v.get<std::int64_t>();
        if (x < -128 || x > 127)
          throw config_error("weights file: w_feat entry out of int8 range");
        w.w_feat.push_back(std::int8_t(x));
      }
      for (const auto& v : layer.at("w_pos")) {
        const std::int64_t x = v.get<std::int64_t>();
        if (x < -128 || x > 127)
          throw config_error("weights file: w_pos entry out of int8 range");
        w.w_pos.push_back(std::int8_t(x));
      }
      w.scale_w = layer.at("scale_w").get<double>();
      const double scale_x = layer.at("scale_x").get<double>();
      const double scale_out = layer.at("scale_out").get<double>();
      net.push_back(make_layer_weights(std::move(w), scale_x, scale_out));
    } catch (const nlohmann::json::exception& e) {
      throw config_error(std::string("weights file: ") + e.what());
    }
  }
  return net;
}

inline void save_weights(const std::string& path, const NetworkWeights& net) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write weights file '" + path + "'");
  out << weights_to_json(net).dump(2) << '\n';
}

inline NetworkWeights load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open weights file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("weights file '" + path + "': " + e.what());
  }
  return weights_from_json(j);
}

}  // namespace evgraph
