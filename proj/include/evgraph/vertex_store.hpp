#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "evgraph/common.hpp"
#include "evgraph/events.hpp"
#include "evgraph/quant.hpp"

namespace evgraph {

// One vertex of the asynchronous-stage graph: a grid cell plus its
// quantized feature vector (the polarity for the first layer).
struct GridVertex {
  GridPos pos;
  QVector feature;
};

// Vertex storage for one time window. The occupancy grid is a dense
// input_size^3 index map, mirroring the hardware's addressable memory:
// one vertex per cell, insertion order preserved, neighbor lookup is a
// deterministic O(R^3) scan of the surrounding cells.
class VertexStore {
 public:
  explicit VertexStore(std::int32_t input_size, std::int32_t radius = 3)
      : size_(input_size), radius_(radius),
        grid_(std::size_t(input_size) * input_size * input_size, -1) {
    if (input_size < 1) throw config_error("input_size must be >= 1");
    if (radius < 0) throw config_error("radius must be >= 0");
  }

  std::int32_t input_size() const { return size_; }
  std::int32_t radius() const { return radius_; }
  std::size_t size() const { return vertices_.size(); }
  std::span<const GridVertex> vertices() const { return vertices_; }

  // Stores v unless its cell is already occupied; duplicates are dropped.
  bool insert(GridVertex v) {
    const std::size_t c = cell(v.pos);
    if (grid_[c] >= 0) return false;
    grid_[c] = static_cast<std::int32_t>(vertices_.size());
    vertices_.push_back(std::move(v));
    return true;
  }

  const GridVertex* at(GridPos p) const {
    const std::int32_t idx = grid_[cell(p)];
    return idx < 0 ? nullptr : &vertices_[std::size_t(idx)];
  }

  // All stored vertices other than the query cell within the L-inf ball
  // |dx| <= R, |dy| <= R, |dt| <= R, ordered by (dt, dy, dx) ascending.
  std::vector<GridVertex> find_neighbors(GridPos p) const {
    std::vector<GridVertex> out;
    for (std::int32_t dt = -radius_; dt <= radius_; ++dt) {
      const std::int32_t t = p.t + dt;
      if (t < 0 || t >= size_) continue;
      for (std::int32_t dy = -radius_; dy <= radius_; ++dy) {
        const std::int32_t y = p.y + dy;
        if (y < 0 || y >= size_) continue;
        for (std::int32_t dx = -radius_; dx <= radius_; ++dx) {
          const std::int32_t x = p.x + dx;
          if (x < 0 || x >= size_) continue;
          if (dx == 0 && dy == 0 && dt == 0) continue;
          const std::int32_t idx = grid_[cell({x, y, t})];
          if (idx >= 0) out.push_back(vertices_[std::size_t(idx)]);
        }
      }
    }
    return out;
  }

 private:
  std::size_t cell(GridPos p) const {
    return (std::size_t(p.t) * size_ + std::size_t(p.y)) * size_ +
           std::size_t(p.x);
  }

  std::int32_t size_;
  std::int32_t radius_;
  std::vector<std::int32_t> grid_;
  std::vector<GridVertex> vertices_;
};

// Builds the first-layer vertex: a one-element feature holding the signed
// quantized polarity, +q for p=1 and -q for p=0, where q is 1.0 quantized
// at the input scale.
inline GridVertex event_to_vertex(const Event& e, GridPos pos,
                                  double input_scale) {
  if (!(input_scale > 0.0)) throw config_error("input scale must be positive");
  const std::int8_t q = saturate8(std::llround(1.0 / input_scale));
  GridVertex v;
  v.pos = pos;
  v.feature.scale = input_scale;
  v.feature.v.push_back(e.p != 0 ? q : std::int8_t(-q));
  return v;
}

}  // namespace evgraph
