#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evgraph {

// Error categories map onto the CLI exit codes: config_error -> 2,
// data_error / parse_error -> 3.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct parse_error : std::runtime_error {
  parse_error(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  std::size_t line;
};

// Implementation variant of a synchronous convolution layer. The order is
// meaningful: it is the tie-break order used by the design-space explorer.
enum class Variant : int {
  baseline_lut = 0,
  baseline_dsp = 1,
  two_step = 2,
};

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::baseline_lut: return "baseline_lut";
    case Variant::baseline_dsp: return "baseline_dsp";
    case Variant::two_step: return "two_step";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "baseline_lut") return Variant::baseline_lut;
  if (s == "baseline_dsp") return Variant::baseline_dsp;
  if (s == "two_step") return Variant::two_step;
  throw config_error("unknown variant '" + s + "'");
}

// Shape of one convolution layer as seen by the sizing and resource models.
struct LayerShape {
  std::int32_t in_dim = 0;
  std::int32_t out_dim = 0;
  std::int32_t size = 0;  // grid edge of the processed temporal channels
  Variant variant = Variant::baseline_lut;
};

inline std::int8_t saturate8(std::int64_t v) {
  if (v > 127) return 127;
  if (v < -128) return -128;
  return static_cast<std::int8_t>(v);
}

}  // namespace evgraph
