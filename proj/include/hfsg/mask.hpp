#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "hfsg/error.hpp"
#include "hfsg/geometry.hpp"

namespace hfsg {

// Horizontal run of foreground pixels [x0, x1) on row y.
struct Span {
  int y = 0;
  int x0 = 0;
  int x1 = 0;
};

// Binary mask over an image grid, stored as row-major run-length counts that
// alternate background/foreground, starting with background. Rasterized on
// demand only.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, std::vector<std::uint32_t> counts)
      : width_(width), height_(height), counts_(std::move(counts)) {}

  static Mask empty(int width, int height) {
    return Mask(width, height, {static_cast<std::uint32_t>(width) * static_cast<std::uint32_t>(height)});
  }

  static Mask from_raster(int width, int height, std::span<const std::uint8_t> raster) {
    if (raster.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw ValidationError("mask raster size does not match grid");
    }
    std::vector<std::uint32_t> counts;
    std::uint8_t current = 0;
    std::uint32_t run = 0;
    for (auto px : raster) {
      const std::uint8_t v = px ? 1 : 0;
      if (v != current) {
        counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
    counts.push_back(run);
    return Mask(width, height, std::move(counts));
  }

  // Pixel cells covered by a real-valued box, clipped to the grid.
  static Mask rectangle(int width, int height, const BBox2& box) {
    const int x0 = std::clamp(static_cast<int>(std::floor(box.x_min)), 0, width);
    const int x1 = std::clamp(static_cast<int>(std::ceil(box.x_max)), 0, width);
    const int y0 = std::clamp(static_cast<int>(std::floor(box.y_min)), 0, height);
    const int y1 = std::clamp(static_cast<int>(std::ceil(box.y_max)), 0, height);
    if (x0 >= x1 || y0 >= y1) return empty(width, height);
    std::vector<std::uint32_t> counts;
    const auto w = static_cast<std::uint32_t>(width);
    const auto rw = static_cast<std::uint32_t>(x1 - x0);
    counts.push_back(static_cast<std::uint32_t>(y0) * w + static_cast<std::uint32_t>(x0));
    for (int y = y0; y < y1; ++y) {
      counts.push_back(rw);
      if (y + 1 < y1) counts.push_back(w - rw);
    }
    const std::uint32_t tail = (static_cast<std::uint32_t>(height - y1)) * w + (w - static_cast<std::uint32_t>(x1));
    counts.push_back(tail);
    return Mask(width, height, std::move(counts));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }

  bool operator==(const Mask&) const = default;

  // True when counts cover exactly width*height pixels.
  bool consistent() const {
    std::uint64_t total = 0;
    for (auto c : counts_) total += c;
    return width_ >= 0 && height_ >= 0 &&
           total == static_cast<std::uint64_t>(width_) * static_cast<std::uint64_t>(height_);
  }

  std::size_t area() const {
    std::size_t a = 0;
    for (std::size_t i = 1; i < counts_.size(); i += 2) a += counts_[i];
    return a;
  }

  std::vector<std::uint8_t> to_raster() const {
    std::vector<std::uint8_t> r(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), 0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      const std::size_t end = std::min(r.size(), pos + counts_[i]);
      if (i % 2 == 1) std::fill(r.begin() + static_cast<std::ptrdiff_t>(pos), r.begin() + static_cast<std::ptrdiff_t>(end), 1);
      pos = end;
    }
    return r;
  }

  // Foreground runs split at row boundaries, in row-major order.
  std::vector<Span> spans() const {
    std::vector<Span> out;
    if (width_ <= 0) return out;
    std::uint64_t pos = 0;
    const auto w = static_cast<std::uint64_t>(width_);
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      std::uint64_t len = counts_[i];
      if (i % 2 == 1) {
        while (len > 0) {
          const auto y = pos / w;
          const auto x = pos % w;
          const auto take = std::min(len, w - x);
          out.push_back({static_cast<int>(y), static_cast<int>(x), static_cast<int>(x + take)});
          pos += take;
          len -= take;
        }
      } else {
        pos += len;
      }
    }
    return out;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> counts_;
};

}  // namespace hfsg
