#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evgraph/channel.hpp"
#include "evgraph/common.hpp"
#include "evgraph/quant.hpp"
#include "evgraph/vertex_store.hpp"

namespace evgraph {

// ---------------------------------------------------------------------------
// Cycle accounting
//
// Every vertex of a synchronous layer sees 18 candidate slots: itself plus
// up to 17 neighbours split across the current and previous temporal
// channel. The baseline streams the slots through the two channel BRAMs
// (two reads per cycle) once per output element; the two-step method reads
// buffered results through two dual-port BRAMs (four reads per cycle) once
// per vertex, after a one-cycle-per-element self-loop pass.
// ---------------------------------------------------------------------------

inline constexpr std::int32_t kCandidateSlots = 18;
inline constexpr std::int32_t kBaselinePortsPerCycle = 2;
inline constexpr std::int32_t kTwoStepPortsPerCycle = 4;
inline constexpr std::int32_t kBaselineReadCycles =
    kCandidateSlots / kBaselinePortsPerCycle;  // 9
inline constexpr std::int32_t kTwoStepReadCycles =
    (kCandidateSlots + kTwoStepPortsPerCycle - 1) / kTwoStepPortsPerCycle;  // 5

// Counts clock cycles of a dataflow run. Cell hooks are called for every
// grid cell, occupied or not: the hardware schedule is occupancy
// independent, which is what gives the design its deterministic latency.
struct CycleCounter {
  std::uint64_t cycles = 0;

  void baseline_cell(std::int32_t out_dim) {
    cycles += std::uint64_t(out_dim) * kBaselineReadCycles;
  }
  void twostep_step1_cell(std::int32_t out_dim) {
    cycles += std::uint64_t(out_dim);
  }
  void twostep_step2_cell() { cycles += kTwoStepReadCycles; }
};

// ---------------------------------------------------------------------------
// Float oracle
// ---------------------------------------------------------------------------

// Real-valued layer weights, used only by the verification oracle.
struct FloatWeights {
  std::int32_t in_dim = 0;
  std::int32_t out_dim = 0;
  std::vector<double> w_feat;  // [in_dim][out_dim]
  std::vector<double> w_pos;   // [3][out_dim]

  double feat(std::int32_t i, std::int32_t k) const {
    return w_feat[std::size_t(i) * out_dim + k];
  }
  double pos(std::int32_t d, std::int32_t k) const {
    return w_pos[std::size_t(d) * out_dim + k];
  }
};

inline FloatWeights dequantize(const WeightMatrix& w) {
  FloatWeights fw;
  fw.in_dim = w.in_dim;
  fw.out_dim = w.out_dim;
  fw.w_feat.reserve(w.w_feat.size());
  for (auto v : w.w_feat) fw.w_feat.push_back(double(v) * w.scale_w);
  fw.w_pos.reserve(w.w_pos.size());
  for (auto v : w.w_pos) fw.w_pos.push_back(double(v) * w.scale_w);
  return fw;
}

struct FloatCandidate {
  std::vector<double> x;
  std::array<double, 3> delta{0.0, 0.0, 0.0};
};

// Real-arithmetic PointNetConv: elementwise max over the self term (zero
// position difference) and every neighbour of the shared linear map
// applied to the position-extended feature vector.
//
// The quantized dataflows append the raw integer deltas to the int8
// feature vector, so the whole extended vector shares one input scale.
// A caller comparing against them must therefore dequantize deltas the
// same way as features: delta_real = delta * scale_x.
inline std::vector<double> pointnet_float(std::span<const double> x_self,
                                          std::span<const FloatCandidate> neighbors,
                                          const FloatWeights& w) {
  auto phi = [&w](std::span<const double> x, const std::array<double, 3>& d,
                  std::int32_t k) {
    double acc = 0.0;
    for (std::int32_t i = 0; i < w.in_dim; ++i) acc += x[i] * w.feat(i, k);
    for (std::int32_t j = 0; j < 3; ++j) acc += d[j] * w.pos(j, k);
    return acc;
  };
  std::vector<double> out(std::size_t(w.out_dim));
  for (std::int32_t k = 0; k < w.out_dim; ++k) {
    double best = phi(x_self, {0.0, 0.0, 0.0}, k);
    for (const FloatCandidate& n : neighbors)
      best = std::max(best, phi(n.x, n.delta, k));
    out[std::size_t(k)] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidate enumeration and per-vertex kernels
// ---------------------------------------------------------------------------

struct Candidate {
  Delta delta;
  std::span<const std::int8_t> feature;
};

// Candidates for the occupied current cell (cx, cy): self first, then the
// occupied cells among the 8 same-channel neighbours (dt = 0) and the 9
// previous-channel cells (dt = -1), ordered by (dt, dy, dx) ascending.
// At most 18 entries.
inline std::vector<Candidate> enumerate_candidates(const ChannelPair& pair,
                                                   std::int32_t cx,
                                                   std::int32_t cy) {
  validate(pair);
  const TemporalChannel& cur = *pair.current;
  if (!cur.occupied(cx, cy))
    throw data_error("enumerate_candidates: current cell is unoccupied");

  std::vector<Candidate> out;
  out.reserve(kCandidateSlots);
  out.push_back({Delta{0, 0, 0}, cur.features(cx, cy)});
  const std::int32_t size = cur.size();
  for (std::int32_t dt = -1; dt <= 0; ++dt) {
    const TemporalChannel* ch = dt == -1 ? pair.previous : pair.current;
    if (ch == nullptr) continue;
    for (std::int32_t dy = -1; dy <= 1; ++dy) {
      const std::int32_t y = cy + dy;
      if (y < 0 || y >= size) continue;
      for (std::int32_t dx = -1; dx <= 1; ++dx) {
        if (dt == 0 && dy == 0 && dx == 0) continue;  // self already emitted
        const std::int32_t x = cx + dx;
        if (x < 0 || x >= size) continue;
        if (!ch->occupied(x, y)) continue;
        out.push_back({Delta{dx, dy, dt}, ch->features(x, y)});
      }
    }
  }
  return out;
}

// Baseline kernel for one vertex: per output element, accumulate the
// position-extended product of every candidate, requantize, and keep the
// elementwise max. The candidate set always contains the self term, so the
// max is never over an empty set.
inline void conv_cell_baseline(std::span<const Candidate> candidates,
                               const WeightMatrix& w, const RequantParams& rq,
                               std::span<std::int8_t> out) {
  for (std::int32_t k = 0; k < w.out_dim; ++k) {
    std::int8_t best = -128;
    bool first = true;
    for (const Candidate& c : candidates) {
      const std::int8_t q = requant(dot_extended(c.feature, c.delta, w, k), rq);
      if (first || q > best) best = q;
      first = false;
    }
    out[std::size_t(k)] = best;
  }
}

// Two-step kernel for one vertex: candidates carry the buffered
// requantized self-loop results (width out_dim); each is corrected by the
// precomputed position contribution before the max. Saturation happens
// after the addition.
inline void conv_cell_twostep(std::span<const Candidate> buffered,
                              const PosLut& lut, std::span<std::int8_t> out) {
  const std::int32_t out_dim = lut.out_dim();
  for (std::int32_t k = 0; k < out_dim; ++k) {
    std::int8_t best = -128;
    bool first = true;
    for (const Candidate& c : buffered) {
      const std::int32_t sum =
          std::int32_t(c.feature[k]) + std::int32_t(lut.entry(c.delta)[k]);
      const std::int8_t q = saturate8(sum);
      if (first || q > best) best = q;
      first = false;
    }
    out[std::size_t(k)] = best;
  }
}

// ---------------------------------------------------------------------------
// Asynchronous first convolution
// ---------------------------------------------------------------------------

// Computes the first-layer output for a newly inserted vertex from its
// already-captured neighbours (L-inf radius R of the store). Baseline
// ordering: one requantization after the full accumulation, then max.
inline QVector async_conv(const VertexStore& store, const GridVertex& v,
                          const WeightMatrix& w, const RequantParams& rq,
                          double out_scale) {
  if (std::int32_t(v.feature.v.size()) != w.in_dim)
    throw config_error("async_conv: vertex feature dim != in_dim");
  const std::vector<GridVertex> neighbors = store.find_neighbors(v.pos);
  std::vector<Candidate> candidates;
  candidates.reserve(neighbors.size() + 1);
  candidates.push_back({Delta{0, 0, 0}, v.feature.v});
  for (const GridVertex& u : neighbors)
    candidates.push_back({Delta{u.pos.x - v.pos.x, u.pos.y - v.pos.y,
                                u.pos.t - v.pos.t},
                          u.feature.v});
  QVector out;
  out.scale = out_scale;
  out.v.resize(std::size_t(w.out_dim));
  conv_cell_baseline(candidates, w, rq, out.v);
  return out;
}

// ---------------------------------------------------------------------------
// Relaxing MaxPool 4x4
// ---------------------------------------------------------------------------

// Time span covered by one temporal channel of the pooled graph.
inline std::int64_t tc_span_ns(const WindowConfig& w) {
  return w.time_window_ns / (w.input_size / 4);
}

// Pools one window's vertices into input_size/4 temporal channels: vertex
// (gx, gy, gt) lands in cell (gx/4, gy/4) of channel gt/4; collisions
// merge by elementwise max. All channels of the window are emitted in
// increasing tc order, empty ones included.
inline std::vector<TemporalChannel> maxpool_relax(
    std::span<const GridVertex> vertices, std::int32_t input_size,
    std::int32_t dim, double scale) {
  const std::int32_t size = input_size / 4;
  std::vector<TemporalChannel> channels;
  channels.reserve(std::size_t(size));
  for (std::int32_t tc = 0; tc < size; ++tc)
    channels.emplace_back(size, dim, tc, scale);

  for (const GridVertex& v : vertices) {
    if (std::int32_t(v.feature.v.size()) != dim)
      throw data_error("maxpool_relax: inconsistent feature dimension");
    const std::int32_t cx = v.pos.x / 4;
    const std::int32_t cy = v.pos.y / 4;
    TemporalChannel& ch = channels[std::size_t(v.pos.t / 4)];
    if (!ch.occupied(cx, cy)) {
      ch.set(cx, cy, v.feature.v);
    } else {
      auto dst = ch.features(cx, cy);
      for (std::int32_t k = 0; k < dim; ++k)
        dst[k] = std::max(dst[k], v.feature.v[std::size_t(k)]);
    }
  }
  return channels;
}

// ---------------------------------------------------------------------------
// Synchronous convolution dataflows
// ---------------------------------------------------------------------------

// Baseline dataflow over one channel pair. Output occupancy equals the
// current channel's occupancy. With a counter attached, cycles are charged
// for every grid cell (full-grid schedule).
inline TemporalChannel conv_baseline(const ChannelPair& pair,
                                     const WeightMatrix& w,
                                     const RequantParams& rq, double out_scale,
                                     CycleCounter* counter = nullptr) {
  validate(pair);
  const TemporalChannel& cur = *pair.current;
  if (cur.dim() != w.in_dim)
    throw config_error("conv_baseline: channel dim != weight in_dim");
  TemporalChannel out(cur.size(), w.out_dim, cur.tc_index(), out_scale);
  for (std::int32_t y = 0; y < cur.size(); ++y)
    for (std::int32_t x = 0; x < cur.size(); ++x) {
      if (counter) counter->baseline_cell(w.out_dim);
      if (!cur.occupied(x, y)) continue;
      const auto candidates = enumerate_candidates(pair, x, y);
      conv_cell_baseline(candidates, w, rq, out.features(x, y));
    }
  return out;
}

// Step 1 of the two-step dataflow: the requantized self-loop result of
// every occupied cell, stored at the layer's output width. This is the
// content of one of the two BRAM buffers.
inline TemporalChannel twostep_self_buffer(const TemporalChannel& in,
                                           const WeightMatrix& w,
                                           const RequantParams& rq,
                                           double out_scale,
                                           CycleCounter* counter = nullptr) {
  if (in.dim() != w.in_dim)
    throw config_error("twostep_self_buffer: channel dim != weight in_dim");
  TemporalChannel buf(in.size(), w.out_dim, in.tc_index(), out_scale);
  for (std::int32_t y = 0; y < in.size(); ++y)
    for (std::int32_t x = 0; x < in.size(); ++x) {
      if (counter) counter->twostep_step1_cell(w.out_dim);
      if (!in.occupied(x, y)) continue;
      const auto f = in.features(x, y);
      auto dst = buf.features(x, y);
      for (std::int32_t k = 0; k < w.out_dim; ++k)
        dst[k] = requant(dot_extended(f, Delta{0, 0, 0}, w, k), rq);
    }
  return buf;
}

// Step 2: combine the buffered self-loop results of both channels with the
// position table and take the per-element max.
inline TemporalChannel twostep_combine(const ChannelPair& buffers,
                                       const PosLut& lut,
                                       CycleCounter* counter = nullptr) {
  validate(buffers);
  const TemporalChannel& cur = *buffers.current;
  if (cur.dim() != lut.out_dim())
    throw config_error("twostep_combine: buffer dim != lut out_dim");
  TemporalChannel out(cur.size(), cur.dim(), cur.tc_index(), cur.scale());
  for (std::int32_t y = 0; y < cur.size(); ++y)
    for (std::int32_t x = 0; x < cur.size(); ++x) {
      if (counter) counter->twostep_step2_cell();
      if (!cur.occupied(x, y)) continue;
      const auto candidates = enumerate_candidates(buffers, x, y);
      conv_cell_twostep(candidates, lut, out.features(x, y));
    }
  return out;
}

// Two-step dataflow over one channel pair. Only the current channel's
// step-1 pass is charged to the counter: in the streaming schedule the
// previous channel's buffer was already paid for when that channel was
// current, and the runner below reuses it the same way.
inline TemporalChannel conv_twostep(const ChannelPair& pair,
                                    const WeightMatrix& w,
                                    const RequantParams& rq, const PosLut& lut,
                                    double out_scale,
                                    CycleCounter* counter = nullptr) {
  validate(pair);
  TemporalChannel buf_cur =
      twostep_self_buffer(*pair.current, w, rq, out_scale, counter);
  std::optional<TemporalChannel> buf_prev;
  if (pair.previous != nullptr)
    buf_prev = twostep_self_buffer(*pair.previous, w, rq, out_scale, nullptr);
  return twostep_combine({&buf_cur, buf_prev ? &*buf_prev : nullptr}, lut,
                         counter);
}

// ---------------------------------------------------------------------------
// Streaming layer runners
// ---------------------------------------------------------------------------

// Feeds a synchronous layer one channel at a time, keeping the previous
// input channel as candidate source. reset() starts a new window.
class BaselineLayerRunner {
 public:
  BaselineLayerRunner(const WeightMatrix& w, const RequantParams& rq,
                      double out_scale)
      : w_(&w), rq_(rq), out_scale_(out_scale) {}

  TemporalChannel push(const TemporalChannel& tc,
                       CycleCounter* counter = nullptr) {
    TemporalChannel out = conv_baseline({&tc, prev_ ? &*prev_ : nullptr}, *w_,
                                        rq_, out_scale_, counter);
    prev_ = tc;
    return out;
  }

  void reset() { prev_.reset(); }

 private:
  const WeightMatrix* w_;
  RequantParams rq_;
  double out_scale_;
  std::optional<TemporalChannel> prev_;
};

// Same streaming contract for the two-step dataflow. The persistent state
// is the step-1 buffer, so each channel's self-loop pass runs exactly once
// per layer no matter how many pairs it appears in.
class TwoStepLayerRunner {
 public:
  TwoStepLayerRunner(const WeightMatrix& w, const RequantParams& rq,
                     const PosLut& lut, double out_scale)
      : w_(&w), rq_(rq), lut_(&lut), out_scale_(out_scale) {}

  TemporalChannel push(const TemporalChannel& tc,
                       CycleCounter* counter = nullptr) {
    TemporalChannel buf = twostep_self_buffer(tc, *w_, rq_, out_scale_, counter);
    TemporalChannel out = twostep_combine(
        {&buf, prev_buf_ ? &*prev_buf_ : nullptr}, *lut_, counter);
    prev_buf_ = std::move(buf);
    return out;
  }

  void reset() { prev_buf_.reset(); }

 private:
  const WeightMatrix* w_;
  RequantParams rq_;
  const PosLut* lut_;
  double out_scale_;
  std::optional<TemporalChannel> prev_buf_;
};

}  // namespace evgraph
