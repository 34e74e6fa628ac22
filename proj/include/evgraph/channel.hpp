#pragma once

#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include "evgraph/common.hpp"

namespace evgraph {

// One temporal channel: a size x size grid of optional quantized feature
// vectors covering a TIME_WINDOW/size slice of the window. Features are
// stored as a flat int8 array plus an occupancy bitmap, the same layout a
// BRAM-backed channel buffer uses.
class TemporalChannel {
 public:
  TemporalChannel() = default;
  TemporalChannel(std::int32_t size, std::int32_t dim, std::int32_t tc_index,
                  double scale)
      : size_(size), dim_(dim), tc_index_(tc_index), scale_(scale),
        occ_(std::size_t(size) * size, 0),
        feat_(std::size_t(size) * size * dim, 0) {}

  std::int32_t size() const { return size_; }
  std::int32_t dim() const { return dim_; }
  std::int32_t tc_index() const { return tc_index_; }
  double scale() const { return scale_; }

  bool occupied(std::int32_t x, std::int32_t y) const {
    return occ_[cell(x, y)] != 0;
  }

  std::span<const std::int8_t> features(std::int32_t x, std::int32_t y) const {
    return {feat_.data() + cell(x, y) * dim_, std::size_t(dim_)};
  }

  std::span<std::int8_t> features(std::int32_t x, std::int32_t y) {
    occ_[cell(x, y)] = 1;
    return {feat_.data() + cell(x, y) * dim_, std::size_t(dim_)};
  }

  void set(std::int32_t x, std::int32_t y, std::span<const std::int8_t> f) {
    auto dst = features(x, y);
    for (std::int32_t k = 0; k < dim_; ++k) dst[k] = f[k];
  }

  std::size_t occupied_count() const {
    std::size_t n = 0;
    for (auto o : occ_) n += o;
    return n;
  }

  std::span<const std::uint8_t> occupancy() const { return occ_; }
  std::span<const std::int8_t> raw_features() const { return feat_; }

 private:
  std::size_t cell(std::int32_t x, std::int32_t y) const {
    return std::size_t(y) * size_ + std::size_t(x);
  }

  std::int32_t size_ = 0;
  std::int32_t dim_ = 0;
  std::int32_t tc_index_ = 0;
  double scale_ = 1.0;
  std::vector<std::uint8_t> occ_;
  std::vector<std::int8_t> feat_;
};

// The two channels a synchronous layer reads candidates from. previous may
// be null for the first channel of a window.
struct ChannelPair {
  const TemporalChannel* current = nullptr;
  const TemporalChannel* previous = nullptr;
};

inline void validate(const ChannelPair& pair) {
  if (pair.current == nullptr) throw data_error("channel pair needs a current channel");
  if (pair.previous != nullptr) {
    if (pair.previous->size() != pair.current->size())
      throw data_error("channel pair sizes differ");
    if (pair.previous->dim() != pair.current->dim())
      throw data_error("channel pair feature dims differ");
    if (pair.previous->tc_index() != pair.current->tc_index() - 1)
      throw data_error("previous channel is not the preceding tc_index");
  }
}

// Elementwise difference statistics between two channels with identical
// occupancy, in LSBs of the shared output scale.
struct DiffStats {
  std::int32_t max_abs_diff = 0;
  double differing_fraction = 0.0;
  std::size_t element_count = 0;
};

inline DiffStats compare_channels(const TemporalChannel& a,
                                  const TemporalChannel& b) {
  if (a.size() != b.size() || a.dim() != b.dim())
    throw data_error("compare_channels: shape mismatch");
  DiffStats stats;
  std::size_t differing = 0;
  for (std::int32_t y = 0; y < a.size(); ++y)
    for (std::int32_t x = 0; x < a.size(); ++x) {
      if (a.occupied(x, y) != b.occupied(x, y))
        throw data_error("compare_channels: occupancy mismatch");
      if (!a.occupied(x, y)) continue;
      auto fa = a.features(x, y);
      auto fb = b.features(x, y);
      for (std::int32_t k = 0; k < a.dim(); ++k) {
        const std::int32_t d = std::abs(std::int32_t(fa[k]) - std::int32_t(fb[k]));
        if (d > stats.max_abs_diff) stats.max_abs_diff = d;
        if (d != 0) ++differing;
        ++stats.element_count;
      }
    }
  if (stats.element_count > 0)
    stats.differing_fraction = double(differing) / double(stats.element_count);
  return stats;
}

}  // namespace evgraph
