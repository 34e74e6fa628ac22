#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evgraph/common.hpp"

namespace evgraph {

// One camera event. Timestamps are nanoseconds, coordinates are sensor
// pixels, polarity is the raw {0, 1} wire encoding (mapped to a signed
// feature only when the vertex is built).
struct Event {
  std::int64_t t = 0;
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int8_t p = 0;

  bool operator==(const Event&) const = default;
};

struct CameraGeometry {
  std::int32_t width = 0;
  std::int32_t height = 0;
};

// Fixed-window slicing parameters shared by the whole pipeline.
// input_size is the edge of the normalized grid; clock_ns is the clock
// period used by the throughput model (5 ns = 200 MHz).
struct WindowConfig {
  std::int64_t time_window_ns = 0;
  std::int32_t input_size = 0;
  std::int64_t clock_ns = 5;
};

inline void validate(const CameraGeometry& cam) {
  if (cam.width < 1 || cam.height < 1)
    throw config_error("camera geometry must be at least 1x1");
}

inline void validate(const WindowConfig& w) {
  if (w.time_window_ns <= 0) throw config_error("time_window_ns must be > 0");
  if (w.clock_ns <= 0) throw config_error("clock_ns must be > 0");
  const std::int32_t s = w.input_size;
  if (s < 4 || (s & (s - 1)) != 0 || s % 4 != 0)
    throw config_error("input_size must be a power of two divisible by 4");
}

// Position on the normalized input_size^3 grid: (x, y, t) in grid units.
struct GridPos {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t t = 0;

  bool operator==(const GridPos&) const = default;
};

namespace detail {

inline std::int64_t parse_int_field(std::string_view field, std::size_t line_no,
                                    const char* name) {
  // trim surrounding blanks (tolerates "t, x, y, p" spacing)
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
    field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
    field.remove_suffix(1);
  std::int64_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw parse_error(line_no, std::string("invalid ") + name + " field '" +
                                   std::string(field) + "'");
  return value;
}

}  // namespace detail

// Parses an event stream: one `t,x,y,p` line per event, decimal integers,
// lines sorted by t. `#` comments and blank lines are skipped. Throws
// parse_error with the offending line number on malformed input or on a
// timestamp decrease.
inline std::vector<Event> parse_events(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view sv{line};
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t'))
      sv.remove_prefix(1);
    if (sv.empty() || sv.front() == '#') continue;

    std::array<std::string_view, 4> fields;
    std::size_t n_fields = 0;
    while (true) {
      const std::size_t comma = sv.find(',');
      if (n_fields == 4)
        throw parse_error(line_no, "expected 4 comma-separated fields");
      fields[n_fields++] = sv.substr(0, comma);
      if (comma == std::string_view::npos) break;
      sv.remove_prefix(comma + 1);
    }
    if (n_fields != 4)
      throw parse_error(line_no, "expected 4 comma-separated fields, got " +
                                     std::to_string(n_fields));

    Event e;
    e.t = detail::parse_int_field(fields[0], line_no, "t");
    const std::int64_t x = detail::parse_int_field(fields[1], line_no, "x");
    const std::int64_t y = detail::parse_int_field(fields[2], line_no, "y");
    const std::int64_t p = detail::parse_int_field(fields[3], line_no, "p");
    if (e.t < 0) throw parse_error(line_no, "timestamp must be non-negative");
    if (x < 0 || y < 0)
      throw parse_error(line_no, "coordinates must be non-negative");
    if (x > INT32_MAX || y > INT32_MAX)
      throw parse_error(line_no, "coordinate out of range");
    if (p != 0 && p != 1)
      throw parse_error(line_no, "polarity must be 0 or 1");
    e.x = static_cast<std::int32_t>(x);
    e.y = static_cast<std::int32_t>(y);
    e.p = static_cast<std::int8_t>(p);

    if (!events.empty() && e.t < events.back().t)
      throw parse_error(line_no, "timestamps must be non-decreasing");
    events.push_back(e);
  }
  return events;
}

inline std::vector<Event> parse_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open event file '" + path + "'");
  return parse_events(in);
}

inline void serialize_events(std::ostream& out, std::span<const Event> events) {
  for (const Event& e : events)
    out << e.t << ',' << e.x << ',' << e.y << ',' << int(e.p) << '\n';
}

// Index of the fixed time window containing e, counted from t_first.
// Windows are half-open: [start, start + W).
inline std::int64_t window_index(const Event& e, std::int64_t t_first,
                                 const WindowConfig& w) {
  return (e.t - t_first) / w.time_window_ns;
}

// Scales an event onto the input_size^3 grid. All arithmetic is exact
// integer floor(a*b/c); results are clamped to the grid as a guard.
inline GridPos normalize_to_grid(const Event& e, const CameraGeometry& cam,
                                 const WindowConfig& w,
                                 std::int64_t window_start) {
  const std::int64_t s = w.input_size;
  auto clamp_grid = [s](std::int64_t v) {
    return static_cast<std::int32_t>(std::clamp<std::int64_t>(v, 0, s - 1));
  };
  GridPos g;
  g.x = clamp_grid(std::int64_t(e.x) * s / cam.width);
  g.y = clamp_grid(std::int64_t(e.y) * s / cam.height);
  g.t = clamp_grid((e.t - window_start) * s / w.time_window_ns);
  return g;
}

}  // namespace evgraph
