#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "evgraph/common.hpp"
#include "evgraph/cycles.hpp"

namespace evgraph {

struct ResourceVector {
  std::int64_t lut = 0;
  std::int64_t dsp = 0;
  std::int64_t bram = 0;  // 36Kb-equivalent blocks

  ResourceVector operator+(const ResourceVector& o) const {
    return {lut + o.lut, dsp + o.dsp, bram + o.bram};
  }
  ResourceVector& operator+=(const ResourceVector& o) {
    lut += o.lut;
    dsp += o.dsp;
    bram += o.bram;
    return *this;
  }
  bool operator==(const ResourceVector&) const = default;
};

// Device capacities. Defaults correspond to a ZCU104-class part.
struct Budget {
  std::int64_t lut = 230'400;
  std::int64_t dsp = 1'728;
  std::int64_t bram = 312;
};

inline void validate(const Budget& b) {
  if (b.lut <= 0 || b.dsp <= 0 || b.bram <= 0)
    throw config_error("budget capacities must be positive");
}

// Linear desk-scale cost model. Exact counts require synthesis; these
// coefficients only have to preserve the ordering between variants, and
// are sized so a 16-wide layer at size 64 lands in the right ballpark for
// a ZCU104-class implementation.
struct CostModelParams {
  std::int64_t lut_per_mac = 90;              // int8 MAC lane in fabric
  std::int64_t lut_per_mac_dsp_variant = 12;  // residual fabric per DSP lane
  std::int64_t dsp_per_mult_lane = 1;
  std::int64_t dsp_per_requant = 4;
  std::int64_t bram_bits_per_block = 36'864;
  ResourceVector fixed_overhead{6'000, 20, 40};
};

inline void validate(const CostModelParams& p) {
  if (p.lut_per_mac <= 0 || p.lut_per_mac_dsp_variant <= 0 ||
      p.dsp_per_mult_lane <= 0 || p.dsp_per_requant <= 0 ||
      p.bram_bits_per_block <= 0)
    throw config_error("cost model coefficients must be positive");
}

namespace detail {

inline std::int64_t bram_blocks_for_bits(std::int64_t bits,
                                         std::int64_t bits_per_block) {
  return (bits + bits_per_block - 1) / bits_per_block;
}

}  // namespace detail

// Resource estimate for one layer at P parallel vector-multiplication
// modules. Each module is a lane of width in_dim + 3 (the position-extended
// input vector) plus a requantizer. BRAM covers the two input channel
// buffers; the two-step variant adds its pair of out_dim-wide result
// buffers on top.
inline ResourceVector estimate(const LayerShape& layer, std::int64_t p,
                               const CostModelParams& params) {
  if (layer.in_dim < 1 || layer.out_dim < 1 || layer.size < 1)
    throw config_error("estimate: layer dims and size must be >= 1");
  if (p < 0) throw config_error("estimate: P must be >= 0");

  const std::int64_t lane_width = layer.in_dim + 3;
  const std::int64_t cells = std::int64_t(layer.size) * layer.size;
  const std::int64_t channel_bits = 2 * cells * layer.in_dim * 8;

  ResourceVector r = params.fixed_overhead;
  r.bram += detail::bram_blocks_for_bits(channel_bits, params.bram_bits_per_block);

  switch (layer.variant) {
    case Variant::baseline_lut:
      r.lut += p * lane_width * params.lut_per_mac;
      r.dsp += p * params.dsp_per_requant;
      break;
    case Variant::baseline_dsp:
      r.lut += p * lane_width * params.lut_per_mac_dsp_variant;
      r.dsp += p * (lane_width * params.dsp_per_mult_lane +
                    params.dsp_per_requant);
      break;
    case Variant::two_step: {
      r.lut += p * lane_width * params.lut_per_mac;
      r.dsp += p * params.dsp_per_requant;
      const std::int64_t buffer_bits = 2 * cells * layer.out_dim * 8;
      r.bram += detail::bram_blocks_for_bits(buffer_bits,
                                             params.bram_bits_per_block);
      break;
    }
  }
  return r;
}

// Rounded percentage change (base - variant) / base * 100, half away from
// zero; negative when the variant costs more.
inline std::int32_t reduction_pct(std::int64_t base, std::int64_t variant) {
  if (base <= 0) throw config_error("reduction_pct: base must be positive");
  const std::int64_t diff = base - variant;
  const std::int64_t mag = diff < 0 ? -diff : diff;
  const std::int64_t pct = (200 * mag + base) / (2 * base);
  return static_cast<std::int32_t>(diff < 0 ? -pct : pct);
}

struct ReductionRow {
  LayerShape layer;
  std::int32_t lut_pct_two_step = 0;
  std::int32_t dsp_pct_two_step = 0;
  std::int32_t lut_pct_baseline_dsp = 0;
  std::int32_t dsp_pct_baseline_dsp = 0;
};

// Per-layer LUT/DSP savings of the alternative variants against the
// LUT-based baseline, each variant sized for the same cycle budget.
inline std::vector<ReductionRow> reduction_report(
    std::span<const LayerShape> layers, std::int64_t time_window_ns,
    std::int64_t clock_ns, const CostModelParams& params) {
  std::vector<ReductionRow> rows;
  rows.reserve(layers.size());
  for (const LayerShape& layer : layers) {
    const std::uint64_t budget = t_cc(time_window_ns, layer.size, clock_ns);
    auto cost = [&](Variant v) {
      LayerShape shaped = layer;
      shaped.variant = v;
      const std::int64_t p =
          size_multipliers(v, layer.size, layer.out_dim, budget);
      return estimate(shaped, p, params);
    };
    const ResourceVector base = cost(Variant::baseline_lut);
    const ResourceVector dspv = cost(Variant::baseline_dsp);
    const ResourceVector twos = cost(Variant::two_step);
    ReductionRow row;
    row.layer = layer;
    row.lut_pct_two_step = reduction_pct(base.lut, twos.lut);
    row.dsp_pct_two_step = reduction_pct(base.dsp, twos.dsp);
    row.lut_pct_baseline_dsp = reduction_pct(base.lut, dspv.lut);
    row.dsp_pct_baseline_dsp = reduction_pct(base.dsp, dspv.dsp);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Design-space exploration
// ---------------------------------------------------------------------------

struct ExploreResult {
  bool feasible = false;
  std::vector<Variant> assignment;
  std::vector<std::int64_t> multipliers;
  ResourceVector totals;
  double util_lut = 0.0;
  double util_dsp = 0.0;
  double util_bram = 0.0;
  double max_utilization = 0.0;
  std::string binding_resource;  // resource attaining max_utilization
};

namespace detail {

struct VariantOption {
  Variant variant;
  std::int64_t p = 0;
  ResourceVector cost;
};

inline std::array<VariantOption, 3> variant_options(
    const LayerShape& layer, std::uint64_t budget_cycles,
    const CostModelParams& params) {
  std::array<VariantOption, 3> options{};
  const std::array<Variant, 3> variants{Variant::baseline_lut,
                                        Variant::baseline_dsp,
                                        Variant::two_step};
  for (std::size_t i = 0; i < variants.size(); ++i) {
    LayerShape shaped = layer;
    shaped.variant = variants[i];
    const std::int64_t p = size_multipliers(variants[i], layer.size,
                                            layer.out_dim, budget_cycles);
    options[i] = {variants[i], p, estimate(shaped, p, params)};
  }
  return options;
}

struct Utilization {
  double max = 0.0;
  int binding = 0;  // 0 lut, 1 dsp, 2 bram
};

inline Utilization utilization_of(const ResourceVector& totals,
                                  const Budget& budget) {
  const std::array<double, 3> u{double(totals.lut) / double(budget.lut),
                                double(totals.dsp) / double(budget.dsp),
                                double(totals.bram) / double(budget.bram)};
  Utilization result{u[0], 0};
  for (int i = 1; i < 3; ++i)
    if (u[std::size_t(i)] > result.max) result = {u[std::size_t(i)], i};
  return result;
}

}  // namespace detail

// Assigns a variant to every layer, minimizing the maximum fractional
// utilization across {lut, dsp, bram} subject to the device budget. Ties
// break toward lower LUT total, then lexicographic variant order. Small
// problems are searched exhaustively (3^N assignments); beyond
// kExhaustiveLayerLimit a deterministic per-layer greedy pass is used.
// When no assignment fits, the result is marked infeasible and reports the
// resource that binds the least-oversubscribed assignment.
inline constexpr std::size_t kExhaustiveLayerLimit = 13;

inline ExploreResult explore(std::span<const LayerShape> layers,
                             std::int64_t time_window_ns,
                             std::int64_t clock_ns, const Budget& budget,
                             const CostModelParams& params) {
  validate(budget);
  validate(params);
  const char* const resource_names[3] = {"lut", "dsp", "bram"};

  std::vector<std::array<detail::VariantOption, 3>> options;
  options.reserve(layers.size());
  for (const LayerShape& layer : layers)
    options.push_back(detail::variant_options(
        layer, t_cc(time_window_ns, layer.size, clock_ns), params));

  const std::size_t n = layers.size();
  std::vector<std::size_t> best_choice(n, 0);
  std::vector<std::size_t> choice(n, 0);
  bool have_best = false;
  double best_util = std::numeric_limits<double>::infinity();
  std::int64_t best_lut = 0;
  bool best_feasible = false;

  auto evaluate = [&](const std::vector<std::size_t>& c) {
    ResourceVector totals;
    for (std::size_t i = 0; i < n; ++i) totals += options[i][c[i]].cost;
    const auto util = detail::utilization_of(totals, budget);
    const bool feasible = totals.lut <= budget.lut && totals.dsp <= budget.dsp &&
                          totals.bram <= budget.bram;
    // Feasible assignments always beat infeasible ones; within a class,
    // (max utilization, lut total, lexicographic choice) decides.
    const bool better =
        !have_best || (feasible && !best_feasible) ||
        (feasible == best_feasible &&
         (util.max < best_util ||
          (util.max == best_util &&
           (totals.lut < best_lut ||
            (totals.lut == best_lut &&
             std::lexicographical_compare(c.begin(), c.end(),
                                          best_choice.begin(),
                                          best_choice.end()))))));
    if (better) {
      have_best = true;
      best_choice = c;
      best_util = util.max;
      best_lut = totals.lut;
      best_feasible = feasible;
    }
  };

  if (n == 0) {
    ExploreResult r;
    r.feasible = true;
    r.binding_resource = resource_names[0];
    return r;
  }

  if (n <= kExhaustiveLayerLimit) {
    while (true) {
      evaluate(choice);
      std::size_t i = 0;
      while (i < n && choice[i] == 2) choice[i++] = 0;
      if (i == n) break;
      ++choice[i];
    }
  } else {
    // Greedy: pick per layer the option minimizing the running maximum
    // utilization, same tie-breaks as above.
    ResourceVector running;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t pick = 0;
      double pick_util = std::numeric_limits<double>::infinity();
      std::int64_t pick_lut = 0;
      for (std::size_t v = 0; v < 3; ++v) {
        const ResourceVector t = running + options[i][v].cost;
        const auto util = detail::utilization_of(t, budget);
        if (util.max < pick_util ||
            (util.max == pick_util && t.lut < pick_lut)) {
          pick = v;
          pick_util = util.max;
          pick_lut = t.lut;
        }
      }
      choice[i] = pick;
      running += options[i][pick].cost;
    }
    evaluate(choice);
  }

  ExploreResult result;
  result.assignment.reserve(n);
  result.multipliers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.assignment.push_back(options[i][best_choice[i]].variant);
    result.multipliers.push_back(options[i][best_choice[i]].p);
    result.totals += options[i][best_choice[i]].cost;
  }
  result.util_lut = double(result.totals.lut) / double(budget.lut);
  result.util_dsp = double(result.totals.dsp) / double(budget.dsp);
  result.util_bram = double(result.totals.bram) / double(budget.bram);
  const auto util = detail::utilization_of(result.totals, budget);
  result.max_utilization = util.max;
  result.binding_resource = resource_names[util.binding];
  result.feasible = best_feasible;
  return result;
}

}  // namespace evgraph
