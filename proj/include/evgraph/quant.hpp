#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evgraph/common.hpp"

namespace evgraph {

// Quantized feature vector: symmetric int8 values with a shared
// dequantization scale (real value = element * scale, zero-point 0).
struct QVector {
  std::vector<std::int8_t> v;
  double scale = 1.0;
};

// Layer weights, split the way the hardware consumes them: the feature
// part multiplies the input vector, the position part multiplies the
// (dx, dy, dt) extension. Row-major, int8, one shared scale.
struct WeightMatrix {
  std::int32_t in_dim = 0;
  std::int32_t out_dim = 0;
  std::vector<std::int8_t> w_feat;  // [in_dim][out_dim]
  std::vector<std::int8_t> w_pos;   // [3][out_dim], rows are (dx, dy, dt)
  double scale_w = 1.0;

  std::int8_t feat(std::int32_t i, std::int32_t k) const {
    return w_feat[std::size_t(i) * out_dim + k];
  }
  std::int8_t pos(std::int32_t d, std::int32_t k) const {
    return w_pos[std::size_t(d) * out_dim + k];
  }
};

inline void validate(const WeightMatrix& w) {
  if (w.in_dim < 1 || w.out_dim < 1)
    throw config_error("weight matrix dims must be >= 1");
  if (w.in_dim > 1024)
    throw config_error("in_dim > 1024 would overflow the 32-bit accumulator");
  if (w.w_feat.size() != std::size_t(w.in_dim) * w.out_dim)
    throw config_error("w_feat size does not match in_dim x out_dim");
  if (w.w_pos.size() != std::size_t(3) * w.out_dim)
    throw config_error("w_pos size does not match 3 x out_dim");
  if (!(w.scale_w > 0.0)) throw config_error("scale_w must be positive");
}

// Fixed-point requantization multiplier m = mantissa * 2^-shift with
// mantissa normalized into [2^30, 2^31). The pair is the unique such
// encoding of m, so identical scales always produce identical hardware
// parameters.
struct RequantParams {
  std::uint32_t mantissa = 1u << 30;
  std::int32_t shift = 30;  // encodes m = 1.0

  double multiplier() const { return std::ldexp(double(mantissa), -shift); }

  static RequantParams from_multiplier(double m) {
    if (!(m > 0.0) || !std::isfinite(m))
      throw config_error("requant multiplier must be positive and finite");
    int exp = 0;
    const double frac = std::frexp(m, &exp);  // m = frac * 2^exp, frac in [0.5, 1)
    std::int64_t mant = std::llround(std::ldexp(frac, 31));
    if (mant == (std::int64_t(1) << 31)) {
      mant >>= 1;
      ++exp;
    }
    const std::int32_t shift = 31 - exp;
    if (shift < 0)
      throw config_error("requant multiplier too large to encode");
    RequantParams p;
    p.mantissa = static_cast<std::uint32_t>(mant);
    p.shift = shift;
    return p;
  }
};

namespace detail {

// round_half_away_from_zero(acc * mantissa / 2^shift), exact in 64-bit.
// |acc| <= 2^31 and mantissa < 2^31 keep the product below 2^62, so the
// magnitude-plus-half trick cannot overflow for any shift.
inline std::int64_t requant_raw(std::int32_t acc, const RequantParams& p) {
  const std::int64_t prod = std::int64_t(acc) * std::int64_t(p.mantissa);
  if (p.shift == 0) return prod;
  const std::uint64_t mag = prod < 0 ? std::uint64_t(-prod) : std::uint64_t(prod);
  if (p.shift >= 64) return 0;  // mag < 2^62 rounds to zero past 63 shifts
  const std::uint64_t half = std::uint64_t(1) << (p.shift - 1);
  const std::uint64_t rounded = (mag + half) >> p.shift;
  return prod < 0 ? -std::int64_t(rounded) : std::int64_t(rounded);
}

}  // namespace detail

// Rescales a 32-bit accumulator to int8: multiply by m, round half away
// from zero, saturate to [-128, 127].
inline std::int8_t requant(std::int32_t acc, const RequantParams& p) {
  return saturate8(detail::requant_raw(acc, p));
}

// Same rounding as requant but without int8 saturation; the result is the
// pre-saturation value the two-step position table stores. Rounded values
// outside int16 mean the weights are mis-scaled for the table.
inline std::int16_t requant_round(std::int32_t acc, const RequantParams& p) {
  const std::int64_t r = detail::requant_raw(acc, p);
  if (r < INT16_MIN || r > INT16_MAX)
    throw config_error("requant_round overflow: rounded value " +
                       std::to_string(r) + " does not fit 16 bits");
  return static_cast<std::int16_t>(r);
}

// Position difference between two grid cells, candidate minus query.
struct Delta {
  std::int32_t dx = 0;
  std::int32_t dy = 0;
  std::int32_t dt = 0;

  bool operator==(const Delta&) const = default;
};

// Accumulates one output element of the position-extended product:
// sum_i x[i] * w_feat[i][k] + dx*w_pos[0][k] + dy*w_pos[1][k] + dt*w_pos[2][k].
// Exact 32-bit integer arithmetic; fits for in_dim <= 1024, |delta| <= 3.
inline std::int32_t dot_extended(std::span<const std::int8_t> x, Delta d,
                                 const WeightMatrix& w, std::int32_t k) {
  std::int32_t acc = 0;
  for (std::int32_t i = 0; i < w.in_dim; ++i)
    acc += std::int32_t(x[i]) * std::int32_t(w.feat(i, k));
  acc += d.dx * std::int32_t(w.pos(0, k));
  acc += d.dy * std::int32_t(w.pos(1, k));
  acc += d.dt * std::int32_t(w.pos(2, k));
  return acc;
}

// Precomputed position-delta contributions for the two-step dataflow:
// 27 entries, one per (dx, dy, dt) in {-1, 0, 1}^3, each a vector of
// out_dim pre-saturation 16-bit values.
class PosLut {
 public:
  PosLut() = default;
  PosLut(std::int32_t out_dim, std::vector<std::int16_t> table)
      : out_dim_(out_dim), table_(std::move(table)) {}

  static std::size_t index(Delta d) {
    return std::size_t(d.dx + 1) + 3 * std::size_t(d.dy + 1) +
           9 * std::size_t(d.dt + 1);
  }

  std::span<const std::int16_t> entry(Delta d) const {
    return {table_.data() + index(d) * out_dim_, std::size_t(out_dim_)};
  }

  std::int32_t out_dim() const { return out_dim_; }
  static constexpr std::size_t entries = 27;

 private:
  std::int32_t out_dim_ = 0;
  std::vector<std::int16_t> table_;
};

inline PosLut build_pos_lut(const WeightMatrix& w, const RequantParams& p) {
  std::vector<std::int16_t> table(PosLut::entries * std::size_t(w.out_dim));
  for (std::int32_t dt = -1; dt <= 1; ++dt)
    for (std::int32_t dy = -1; dy <= 1; ++dy)
      for (std::int32_t dx = -1; dx <= 1; ++dx) {
        const Delta d{dx, dy, dt};
        const std::size_t base = PosLut::index(d) * std::size_t(w.out_dim);
        for (std::int32_t k = 0; k < w.out_dim; ++k) {
          const std::int32_t acc = dx * std::int32_t(w.pos(0, k)) +
                                   dy * std::int32_t(w.pos(1, k)) +
                                   dt * std::int32_t(w.pos(2, k));
          table[base + k] = requant_round(acc, p);
        }
      }
  return PosLut(w.out_dim, std::move(table));
}

}  // namespace evgraph
