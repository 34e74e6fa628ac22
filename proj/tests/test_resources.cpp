#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evgraph/resources.hpp"

using namespace evgraph;

namespace {

const CostModelParams kDefaults{};

LayerShape layer(std::int32_t in, std::int32_t out, std::int32_t size,
                 Variant v) {
  return LayerShape{in, out, size, v};
}

// The experiment configuration: 50 ms window, grid 256 -> size 64 after
// pooling, synchronous convolutions 16->32 and 16->64.
constexpr std::int64_t kWindowNs = 50'000'000;
constexpr std::int64_t kClockNs = 5;

ResourceVector sized_estimate(LayerShape shape) {
  const std::uint64_t t = t_cc(kWindowNs, shape.size, kClockNs);
  const std::int64_t p =
      size_multipliers(shape.variant, shape.size, shape.out_dim, t);
  return estimate(shape, p, kDefaults);
}

}  // namespace

TEST_CASE("two-step buffer adds the expected BRAM blocks") {
  const auto base = estimate(layer(16, 64, 64, Variant::baseline_lut), 1, kDefaults);
  const auto twos = estimate(layer(16, 64, 64, Variant::two_step), 1, kDefaults);
  // ceil(2 * 64*64 * 64 * 8 / 36864) = 114
  CHECK(twos.bram - base.bram == 114);
}

TEST_CASE("zero lanes leave only fixed overhead on lut and dsp") {
  for (Variant v : {Variant::baseline_lut, Variant::baseline_dsp, Variant::two_step}) {
    const auto r = estimate(layer(16, 32, 64, v), 0, kDefaults);
    CHECK(r.lut == kDefaults.fixed_overhead.lut);
    CHECK(r.dsp == kDefaults.fixed_overhead.dsp);
  }
}

TEST_CASE("ordinal fidelity at the experiment configuration") {
  for (std::int32_t out : {32, 64}) {
    const auto base = sized_estimate(layer(16, out, 64, Variant::baseline_lut));
    const auto dspv = sized_estimate(layer(16, out, 64, Variant::baseline_dsp));
    const auto twos = sized_estimate(layer(16, out, 64, Variant::two_step));
    CHECK(twos.lut < base.lut);
    CHECK(twos.bram > base.bram);
    CHECK(dspv.dsp > base.dsp);
    CHECK(twos.dsp <= base.dsp);
  }
}

TEST_CASE("estimate is monotone in P and dims") {
  std::mt19937 rng(5);
  auto pick = [&](std::int32_t lo, std::int32_t hi) {
    return lo + std::int32_t(rng() % std::uint32_t(hi - lo + 1));
  };
  for (int trial = 0; trial < 2'000; ++trial) {
    const Variant v = Variant(rng() % 3);
    const std::int32_t in = pick(1, 64);
    const std::int32_t out = pick(1, 128);
    const std::int32_t size = pick(1, 128);
    const std::int64_t p = pick(0, 64);
    const auto r = estimate(layer(in, out, size, v), p, kDefaults);
    const auto rp = estimate(layer(in, out, size, v), p + 1, kDefaults);
    const auto ri = estimate(layer(in + 1, out, size, v), p, kDefaults);
    const auto ro = estimate(layer(in, out + 1, size, v), p, kDefaults);
    for (const auto* more : {&rp, &ri, &ro}) {
      CHECK(more->lut >= r.lut);
      CHECK(more->dsp >= r.dsp);
      CHECK(more->bram >= r.bram);
    }
  }
}

TEST_CASE("reduction_pct on identical and published values") {
  CHECK(reduction_pct(1000, 1000) == 0);
  CHECK(reduction_pct(36'425, 10'776) == 70);
  const std::int32_t pct = reduction_pct(65'634, 13'966);
  CHECK(pct >= 78);
  CHECK(pct <= 79);
  // cost growth reports as negative reduction
  CHECK(reduction_pct(100, 150) == -50);
}

TEST_CASE("reduction_report favors the two-step variant on LUTs") {
  const std::vector<LayerShape> layers{layer(16, 32, 64, Variant::baseline_lut),
                                       layer(16, 64, 64, Variant::baseline_lut)};
  const auto rows = reduction_report(layers, kWindowNs, kClockNs, kDefaults);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.lut_pct_two_step > 0);
    CHECK(row.lut_pct_baseline_dsp > 0);
    CHECK(row.dsp_pct_baseline_dsp < 0);  // DSP variant spends DSPs
  }
}

namespace {

// Independent exhaustive reference for the explorer objective.
double oracle_best_utilization(std::span<const LayerShape> layers,
                               const Budget& budget) {
  const std::size_t n = layers.size();
  std::vector<std::size_t> c(n, 0);
  double best = std::numeric_limits<double>::infinity();
  bool any_feasible = false;
  while (true) {
    ResourceVector totals;
    for (std::size_t i = 0; i < n; ++i) {
      LayerShape shaped = layers[i];
      shaped.variant = Variant(int(c[i]));
      const std::uint64_t t = t_cc(kWindowNs, shaped.size, kClockNs);
      const std::int64_t p =
          size_multipliers(shaped.variant, shaped.size, shaped.out_dim, t);
      totals += estimate(shaped, p, kDefaults);
    }
    const bool feasible = totals.lut <= budget.lut && totals.dsp <= budget.dsp &&
                          totals.bram <= budget.bram;
    if (feasible) {
      any_feasible = true;
      const double u = std::max({double(totals.lut) / double(budget.lut),
                                 double(totals.dsp) / double(budget.dsp),
                                 double(totals.bram) / double(budget.bram)});
      best = std::min(best, u);
    }
    std::size_t i = 0;
    while (i < n && c[i] == 2) c[i++] = 0;
    if (i == n) break;
    ++c[i];
  }
  return any_feasible ? best : -1.0;
}

}  // namespace

TEST_CASE("explore keeps the baseline under device-shaped abundance") {
  // A scaled-up device keeps the capacity ratios of a real part; nothing
  // is scarce, and the LUT-based baseline minimizes the worst fraction.
  const std::vector<LayerShape> layers{layer(16, 32, 64, Variant::baseline_lut)};
  const Budget abundant{230'400 * 1000, 1'728 * 1000, 312 * 1000};
  const auto r = explore(layers, kWindowNs, kClockNs, abundant, kDefaults);
  REQUIRE(r.feasible);
  REQUIRE(r.assignment.size() == 1);
  CHECK(r.assignment[0] == Variant::baseline_lut);
}

TEST_CASE("exact ties on the objective break toward lower LUT totals") {
  // A small layer is BRAM-bound for both baseline variants (they share the
  // channel storage), so their max utilization ties exactly and the
  // lower-LUT rule decides in favor of the DSP variant.
  const std::vector<LayerShape> layers{layer(8, 16, 8, Variant::baseline_lut)};
  const Budget abundant{230'400 * 100, 1'728 * 100, 312 * 100};
  const auto r = explore(layers, 10'000'000, kClockNs, abundant, kDefaults);
  REQUIRE(r.feasible);
  const auto lut_cost = [&](Variant v) {
    const std::uint64_t t = t_cc(10'000'000, 8, kClockNs);
    return estimate(layer(8, 16, 8, v), size_multipliers(v, 8, 16, t), kDefaults);
  };
  REQUIRE(lut_cost(Variant::baseline_lut).bram == lut_cost(Variant::baseline_dsp).bram);
  REQUIRE(lut_cost(Variant::baseline_dsp).lut < lut_cost(Variant::baseline_lut).lut);
  CHECK(r.assignment[0] == Variant::baseline_dsp);
}

TEST_CASE("explore is deterministic across runs") {
  const std::vector<LayerShape> layers{layer(16, 32, 64, Variant::baseline_lut),
                                       layer(16, 32, 64, Variant::baseline_lut)};
  const Budget abundant{230'400 * 1000, 1'728 * 1000, 312 * 1000};
  const auto a = explore(layers, kWindowNs, kClockNs, abundant, kDefaults);
  const auto b = explore(layers, kWindowNs, kClockNs, abundant, kDefaults);
  REQUIRE(a.feasible);
  CHECK(a.assignment == b.assignment);
  CHECK(a.totals == b.totals);
}

TEST_CASE("explore switches to two-step under LUT pressure") {
  const std::vector<LayerShape> layers{layer(16, 32, 64, Variant::baseline_lut)};
  const auto base = sized_estimate(layer(16, 32, 64, Variant::baseline_lut));
  const auto dspv = sized_estimate(layer(16, 32, 64, Variant::baseline_dsp));
  // LUT cap below both baseline variants, everything else roomy
  Budget tight;
  tight.lut = std::min(base.lut, dspv.lut) - 1;
  tight.dsp = dspv.dsp - 1;  // also block the DSP escape route
  tight.bram = 10'000;
  const auto r = explore(layers, kWindowNs, kClockNs, tight, kDefaults);
  REQUIRE(r.feasible);
  CHECK(r.assignment[0] == Variant::two_step);
  CHECK(r.totals.lut <= tight.lut);
  CHECK(r.totals.dsp <= tight.dsp);
  CHECK(r.totals.bram <= tight.bram);
}

TEST_CASE("explore reports infeasibility with the binding resource") {
  const std::vector<LayerShape> layers{layer(16, 32, 64, Variant::baseline_lut),
                                       layer(32, 64, 64, Variant::baseline_lut)};
  const Budget zero_ish{1, 1, 1};
  const auto r = explore(layers, kWindowNs, kClockNs, zero_ish, kDefaults);
  CHECK_FALSE(r.feasible);
  CHECK((r.binding_resource == "lut" || r.binding_resource == "dsp" ||
         r.binding_resource == "bram"));
}

TEST_CASE("explore matches the exhaustive optimum on small problems") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<LayerShape> layers;
    const std::size_t n = 1 + rng() % 5;
    for (std::size_t i = 0; i < n; ++i)
      layers.push_back(layer(8 + std::int32_t(rng() % 24),
                             16 + std::int32_t(rng() % 48), 32,
                             Variant::baseline_lut));
    Budget b;
    b.lut = 20'000 + std::int64_t(rng() % 200'000);
    b.dsp = 100 + std::int64_t(rng() % 2'000);
    b.bram = 100 + std::int64_t(rng() % 600);
    const auto r = explore(layers, kWindowNs, kClockNs, b, kDefaults);
    const double want = oracle_best_utilization(layers, b);
    if (want < 0) {
      CHECK_FALSE(r.feasible);
    } else {
      REQUIRE(r.feasible);
      CHECK(r.max_utilization == Catch::Approx(want));
      CHECK(r.totals.lut <= b.lut);
      CHECK(r.totals.dsp <= b.dsp);
      CHECK(r.totals.bram <= b.bram);
    }
  }
}
