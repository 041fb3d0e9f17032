#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glottisgate/core.hpp"
#include "glottisgate/error.hpp"
#include "glottisgate/image_io.hpp"
#include "glottisgate/pipelines.hpp"

namespace glottisgate {

/// Indices of `n_panels` evenly spaced frames: round(i * (N-1) / (n_panels-1)).
inline std::vector<std::size_t> montage_indices(std::size_t n_frames, std::size_t n_panels) {
  if (n_panels == 0 || n_panels > n_frames) {
    throw InvalidInput("montage: panel count must be in 1..frame count");
  }
  std::vector<std::size_t> out(n_panels);
  if (n_panels == 1) return out;
  for (std::size_t i = 0; i < n_panels; ++i) {
    out[i] = static_cast<std::size_t>(std::llround(static_cast<double>(i) *
                                                   static_cast<double>(n_frames - 1) /
                                                   static_cast<double>(n_panels - 1)));
  }
  return out;
}

namespace detail {

// 3x5 bitmap digits, one row per 3-bit nibble, MSB = left column.
inline constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigitFont = {{
    {7, 5, 5, 5, 7},  // 0
    {2, 6, 2, 2, 7},  // 1
    {7, 1, 7, 4, 7},  // 2
    {7, 1, 7, 1, 7},  // 3
    {5, 5, 7, 1, 1},  // 4
    {7, 4, 7, 1, 7},  // 5
    {7, 4, 7, 5, 7},  // 6
    {7, 1, 1, 1, 1},  // 7
    {7, 5, 7, 5, 7},  // 8
    {7, 5, 7, 1, 7},  // 9
}};

inline void draw_number(RgbImage& img, int x0, int y0, const std::string& digits, int scale) {
  const int w = static_cast<int>(digits.size()) * 4 * scale + scale;
  const int h = 7 * scale;
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) img.set(x, y, 0, 0, 0);
  }
  int cx = x0 + scale;
  for (char ch : digits) {
    if (ch < '0' || ch > '9') continue;
    const auto& glyph = kDigitFont[static_cast<std::size_t>(ch - '0')];
    for (int gy = 0; gy < 5; ++gy) {
      for (int gx = 0; gx < 3; ++gx) {
        if (!(glyph[static_cast<std::size_t>(gy)] & (4 >> gx))) continue;
        for (int sy = 0; sy < scale; ++sy) {
          for (int sx = 0; sx < scale; ++sx) {
            img.set(cx + gx * scale + sx, y0 + scale + gy * scale + sy, 255, 255, 255);
          }
        }
      }
    }
    cx += 4 * scale;
  }
}

}  // namespace detail

struct Montage {
  RgbImage image;
  std::vector<std::size_t> panel_indices;
};

/// Grid of evenly spaced frames with the mask in green, the active box in
/// yellow and the area (px^2) printed in the corner.
inline Montage annotate_montage(std::span<const Frame> frames, std::span<const FrameResult> results,
                                std::size_t n_panels = 12) {
  if (frames.size() != results.size()) throw InvalidInput("montage: frames/results size mismatch");
  Montage m;
  m.panel_indices = montage_indices(frames.size(), n_panels);
  const int pw = frames.front().width();
  const int ph = frames.front().height();
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_panels))));
  const int rows = static_cast<int>((n_panels + static_cast<std::size_t>(cols) - 1) /
                                    static_cast<std::size_t>(cols));
  constexpr int gap = 2;
  m.image = RgbImage(cols * pw + (cols - 1) * gap, rows * ph + (rows - 1) * gap);
  const int scale = std::max(1, std::min(pw, ph) / 96);

  for (std::size_t p = 0; p < m.panel_indices.size(); ++p) {
    const std::size_t idx = m.panel_indices[p];
    const Frame& f = frames[idx];
    const FrameResult& r = results[idx];
    if (!f.same_shape(pw, ph)) throw InvalidInput("montage: frame size changed");
    const int ox = static_cast<int>(p % static_cast<std::size_t>(cols)) * (pw + gap);
    const int oy = static_cast<int>(p / static_cast<std::size_t>(cols)) * (ph + gap);
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        const std::uint8_t g = f.at(x, y);
        const bool on = r.mask.same_shape(pw, ph) && r.mask.at(x, y);
        if (on) {
          m.image.set(ox + x, oy + y, static_cast<std::uint8_t>(g / 2),
                      static_cast<std::uint8_t>(g / 2 + 127), static_cast<std::uint8_t>(g / 2));
        } else {
          m.image.set(ox + x, oy + y, g, g, g);
        }
      }
    }
    if (r.active_box) {
      const BBox& b = *r.active_box;
      for (int x = b.x0; x < b.x1; ++x) {
        m.image.set(ox + x, oy + b.y0, 255, 255, 0);
        m.image.set(ox + x, oy + b.y1 - 1, 255, 255, 0);
      }
      for (int y = b.y0; y < b.y1; ++y) {
        m.image.set(ox + b.x0, oy + y, 255, 255, 0);
        m.image.set(ox + b.x1 - 1, oy + y, 255, 255, 0);
      }
    }
    detail::draw_number(m.image, ox, oy, std::to_string(r.area_px2), scale);
  }
  return m;
}

}  // namespace glottisgate
