#pragma once

// Image, mask and box value types plus the deterministic geometry that the
// pipelines share: letterboxing, crop/resize, paste-back, restriction and
// pixel confusion counting. Everything here is a pure function over values.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glottisgate/error.hpp"

namespace glottisgate {

template <typename Pixel, typename Tag>
class Raster {
 public:
  using pixel_type = Pixel;

  Raster() = default;

  Raster(int width, int height, Pixel fill = Pixel{})
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw InvalidInput("raster dimensions must be at least 1x1, got " +
                         std::to_string(width) + "x" + std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Raster(int width, int height, std::vector<Pixel> data)
      : Raster(width, height) {
    if (data.size() != data_.size()) {
      throw InvalidInput("raster data length " + std::to_string(data.size()) +
                         " does not match " + std::to_string(width) + "x" +
                         std::to_string(height));
    }
    data_ = std::move(data);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Pixel& at(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }
  const Pixel& at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }

  std::span<Pixel> data() noexcept { return data_; }
  std::span<const Pixel> data() const noexcept { return data_; }

  std::span<Pixel> row(int y) noexcept {
    return std::span<Pixel>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
  }
  std::span<const Pixel> row(int y) const noexcept {
    return std::span<const Pixel>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
  }

  bool same_shape(int w, int h) const noexcept { return width_ == w && height_ == h; }
  template <typename P, typename T>
  bool same_shape(const Raster<P, T>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Pixel> data_;
};

struct FrameTag {};
struct MaskTag {};
struct ProbabilityTag {};

/// Single-channel 8-bit intensity image, row-major.
using Frame = Raster<std::uint8_t, FrameTag>;
/// Per-pixel boolean stored as 0/1 bytes.
using BinaryMask = Raster<std::uint8_t, MaskTag>;
/// Segmenter output in [0,1].
using ProbabilityMap = Raster<float, ProbabilityTag>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

/// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  double confidence = 1.0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(width()) * static_cast<std::int64_t>(height());
  }
  Point2 center() const noexcept { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
  bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool valid_for(int frame_w, int frame_h) const noexcept {
    return x0 >= 0 && y0 >= 0 && x0 < x1 && y0 < y1 && x1 <= frame_w && y1 <= frame_h;
  }
  bool same_rect(const BBox& o) const noexcept {
    return x0 == o.x0 && y0 == o.y0 && x1 == o.x1 && y1 == o.y1;
  }
  bool operator==(const BBox&) const = default;
};

inline BBox full_frame_box(int w, int h) { return BBox{0, 0, w, h, 1.0}; }

/// Intersection with the frame; absent when nothing is left.
inline std::optional<BBox> clip_box(const BBox& b, int frame_w, int frame_h) {
  BBox c = b;
  c.x0 = std::clamp(b.x0, 0, frame_w);
  c.y0 = std::clamp(b.y0, 0, frame_h);
  c.x1 = std::clamp(b.x1, 0, frame_w);
  c.y1 = std::clamp(b.y1, 0, frame_h);
  if (c.x0 >= c.x1 || c.y0 >= c.y1) return std::nullopt;
  return c;
}

inline void require_box(const BBox& b, int frame_w, int frame_h, const char* what) {
  if (!b.valid_for(frame_w, frame_h)) {
    throw InvalidInput(std::string(what) + ": box (" + std::to_string(b.x0) + "," +
                       std::to_string(b.y0) + "," + std::to_string(b.x1) + "," +
                       std::to_string(b.y1) + ") is not inside a " + std::to_string(frame_w) +
                       "x" + std::to_string(frame_h) + " frame");
  }
}

// ---------------------------------------------------------------------------
// Resampling

namespace detail {

// Nearest source index for destination index i using pixel-center mapping.
inline int nearest_index(int i, int src, int dst) {
  const std::int64_t s =
      (static_cast<std::int64_t>(2 * i + 1) * src) / (2 * static_cast<std::int64_t>(dst));
  return static_cast<int>(std::min<std::int64_t>(s, src - 1));
}

struct LinearTap {
  int i0;
  int i1;
  float w1;
};

inline std::vector<LinearTap> linear_taps(int src_offset, int src_len, int dst_len) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(dst_len));
  const double ratio = static_cast<double>(src_len) / dst_len;
  for (int i = 0; i < dst_len; ++i) {
    double s = (i + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src_len - 1);
    taps[static_cast<std::size_t>(i)] = {src_offset + i0, src_offset + i1,
                                         static_cast<float>(s - i0)};
  }
  return taps;
}

}  // namespace detail

/// Bilinear resize of the `region` of `src` into a dst_w x dst_h frame.
inline Frame resize_bilinear(const Frame& src, const BBox& region, int dst_w, int dst_h) {
  require_box(region, src.width(), src.height(), "resize_bilinear");
  Frame out(dst_w, dst_h);
  const auto xs = detail::linear_taps(region.x0, region.width(), dst_w);
  const auto ys = detail::linear_taps(region.y0, region.height(), dst_h);
  for (int y = 0; y < dst_h; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    const auto r0 = src.row(ty.i0);
    const auto r1 = src.row(ty.i1);
    auto dst = out.row(y);
    for (int x = 0; x < dst_w; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      const float top = r0[tx.i0] + (r0[tx.i1] - r0[tx.i0]) * tx.w1;
      const float bot = r1[tx.i0] + (r1[tx.i1] - r1[tx.i0]) * tx.w1;
      const float v = top + (bot - top) * ty.w1;
      dst[x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

inline Frame resize_bilinear(const Frame& src, int dst_w, int dst_h) {
  return resize_bilinear(src, full_frame_box(src.width(), src.height()), dst_w, dst_h);
}

/// Nearest-neighbour resize; used for masks so they stay binary.
template <typename Pixel, typename Tag>
Raster<Pixel, Tag> resize_nearest(const Raster<Pixel, Tag>& src, const BBox& region, int dst_w,
                                  int dst_h) {
  require_box(region, src.width(), src.height(), "resize_nearest");
  Raster<Pixel, Tag> out(dst_w, dst_h);
  std::vector<int> xs(static_cast<std::size_t>(dst_w));
  for (int x = 0; x < dst_w; ++x) {
    xs[static_cast<std::size_t>(x)] = region.x0 + detail::nearest_index(x, region.width(), dst_w);
  }
  for (int y = 0; y < dst_h; ++y) {
    const auto srow = src.row(region.y0 + detail::nearest_index(y, region.height(), dst_h));
    auto drow = out.row(y);
    for (int x = 0; x < dst_w; ++x) drow[x] = srow[xs[static_cast<std::size_t>(x)]];
  }
  return out;
}

template <typename Pixel, typename Tag>
Raster<Pixel, Tag> resize_nearest(const Raster<Pixel, Tag>& src, int dst_w, int dst_h) {
  return resize_nearest(src, full_frame_box(src.width(), src.height()), dst_w, dst_h);
}

// ---------------------------------------------------------------------------
// Letterbox

struct LetterboxTransform {
  double scale = 1.0;
  int pad_left = 0;
  int pad_top = 0;
  int source_width = 0;
  int source_height = 0;
  int scaled_width = 0;
  int scaled_height = 0;
  int target = 0;

  Point2 forward(Point2 p) const noexcept {
    return {p.x * scale + pad_left, p.y * scale + pad_top};
  }
  Point2 inverse(Point2 q) const noexcept {
    return {(q.x - pad_left) / scale, (q.y - pad_top) / scale};
  }
  /// Content rectangle inside the target canvas.
  BBox content() const noexcept {
    return BBox{pad_left, pad_top, pad_left + scaled_width, pad_top + scaled_height, 1.0};
  }
};

/// Geometry of a letterbox from source dimensions alone, so a frame and its
/// mask always receive the same transform.
inline LetterboxTransform letterbox_transform(int width, int height, int target) {
  if (width < 1 || height < 1) throw InvalidInput("letterbox: zero-sized input");
  if (target < 1) throw InvalidInput("letterbox: target must be >= 1");
  LetterboxTransform t;
  t.source_width = width;
  t.source_height = height;
  t.target = target;
  t.scale = static_cast<double>(target) / std::max(width, height);
  t.scaled_width = std::clamp(static_cast<int>(std::lround(width * t.scale)), 1, target);
  t.scaled_height = std::clamp(static_cast<int>(std::lround(height * t.scale)), 1, target);
  // Odd leftover pixel goes to the right/bottom.
  t.pad_left = (target - t.scaled_width) / 2;
  t.pad_top = (target - t.scaled_height) / 2;
  return t;
}

template <typename Image>
struct Letterboxed {
  Image image;
  LetterboxTransform transform;
};

inline Letterboxed<Frame> letterbox(const Frame& frame, int target) {
  const auto t = letterbox_transform(frame.width(), frame.height(), target);
  Frame out(target, target, std::uint8_t{0});
  const Frame scaled = resize_bilinear(frame, t.scaled_width, t.scaled_height);
  for (int y = 0; y < t.scaled_height; ++y) {
    std::ranges::copy(scaled.row(y), out.row(y + t.pad_top).begin() + t.pad_left);
  }
  return {std::move(out), t};
}

inline Letterboxed<BinaryMask> letterbox(const BinaryMask& mask, int target) {
  const auto t = letterbox_transform(mask.width(), mask.height(), target);
  BinaryMask out(target, target, std::uint8_t{0});
  const BinaryMask scaled = resize_nearest(mask, t.scaled_width, t.scaled_height);
  for (int y = 0; y < t.scaled_height; ++y) {
    std::ranges::copy(scaled.row(y), out.row(y + t.pad_top).begin() + t.pad_left);
  }
  return {std::move(out), t};
}

// ---------------------------------------------------------------------------
// Masks and boxes

inline std::int64_t mask_area(const BinaryMask& m) {
  std::int64_t n = 0;
  for (auto b : m.data()) n += (b != 0);
  return n;
}

inline bool mask_is_empty(const BinaryMask& m) {
  return std::ranges::none_of(m.data(), [](std::uint8_t b) { return b != 0; });
}

/// Tight half-open box around the set pixels; absent for an empty mask.
inline std::optional<BBox> mask_to_bbox(const BinaryMask& m) {
  int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < m.height(); ++y) {
    const auto r = m.row(y);
    for (int x = 0; x < m.width(); ++x) {
      if (r[x]) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) return std::nullopt;
  return BBox{x0, y0, x1 + 1, y1 + 1, 1.0};
}

/// YOLO detection label: class, normalized center and size.
struct LabelRecord {
  int cls = 0;
  double xc = 0.0;
  double yc = 0.0;
  double w = 0.0;
  double h = 0.0;

  /// "cls xc yc w h" with shortest round-trip decimal formatting.
  std::string to_line() const {
    std::string s = std::to_string(cls);
    for (double v : {xc, yc, w, h}) {
      std::array<char, 32> buf{};
      auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
      s.push_back(' ');
      s.append(buf.data(), end);
    }
    return s;
  }
};

inline LabelRecord bbox_to_label_record(const BBox& b, int frame_w, int frame_h) {
  require_box(b, frame_w, frame_h, "bbox_to_label_record");
  LabelRecord r;
  r.xc = (b.x0 + b.x1) / (2.0 * frame_w);
  r.yc = (b.y0 + b.y1) / (2.0 * frame_h);
  r.w = static_cast<double>(b.width()) / frame_w;
  r.h = static_cast<double>(b.height()) / frame_h;
  return r;
}

template <typename Image>
struct CropResult {
  Image patch;
  BBox crop_rect;
};

/// Box grown by `pad` on each side, clamped to the frame.
inline BBox padded_crop_rect(const BBox& box, int pad, int frame_w, int frame_h) {
  auto grown = clip_box(BBox{box.x0 - pad, box.y0 - pad, box.x1 + pad, box.y1 + pad,
                             box.confidence},
                        frame_w, frame_h);
  if (!grown) throw InvalidInput("crop_resize: box does not intersect the frame");
  return *grown;
}

inline CropResult<Frame> crop_resize(const Frame& frame, const BBox& box, int pad = 8,
                                     int target = 256) {
  const BBox rect = padded_crop_rect(box, pad, frame.width(), frame.height());
  return {resize_bilinear(frame, rect, target, target), rect};
}

inline CropResult<BinaryMask> crop_resize(const BinaryMask& mask, const BBox& box, int pad = 8,
                                          int target = 256) {
  const BBox rect = padded_crop_rect(box, pad, mask.width(), mask.height());
  return {resize_nearest(mask, rect, target, target), rect};
}

/// Writes a crop-space mask back into an otherwise empty full-frame mask.
inline BinaryMask paste_back(const BinaryMask& patch_mask, const BBox& crop_rect, int frame_w,
                             int frame_h) {
  require_box(crop_rect, frame_w, frame_h, "paste_back");
  BinaryMask out(frame_w, frame_h, std::uint8_t{0});
  const BinaryMask resized = resize_nearest(patch_mask, crop_rect.width(), crop_rect.height());
  for (int y = 0; y < crop_rect.height(); ++y) {
    std::ranges::copy(resized.row(y), out.row(crop_rect.y0 + y).begin() + crop_rect.x0);
  }
  return out;
}

/// Pixels of `mask` that lie inside `box`; everything else cleared.
inline BinaryMask restrict_mask(const BinaryMask& mask, const BBox& box) {
  BinaryMask out(mask.width(), mask.height(), std::uint8_t{0});
  const auto clipped = clip_box(box, mask.width(), mask.height());
  if (!clipped) return out;
  for (int y = clipped->y0; y < clipped->y1; ++y) {
    const auto src = mask.row(y);
    std::copy(src.begin() + clipped->x0, src.begin() + clipped->x1,
              out.row(y).begin() + clipped->x0);
  }
  return out;
}

inline BinaryMask binarize(const ProbabilityMap& p, float threshold = 0.5f) {
  BinaryMask out(p.width(), p.height());
  auto dst = out.data();
  auto src = p.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= threshold ? 1 : 0;
  return out;
}

inline ProbabilityMap to_probability(const BinaryMask& m) {
  ProbabilityMap out(m.width(), m.height());
  auto dst = out.data();
  auto src = m.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 1.0f : 0.0f;
  return out;
}

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

inline ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_shape(gt)) {
    throw InvalidInput("confusion_counts: mask dimensions differ (" +
                       std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                       " vs " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()) +
                       ")");
  }
  // Index by (pred << 1 | gt): 0 = tn, 1 = fn, 2 = fp, 3 = tp.
  std::array<std::int64_t, 4> bins{};
  const auto p = pred.data();
  const auto g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++bins[static_cast<std::size_t>(((p[i] != 0) << 1) | (g[i] != 0))];
  }
  return ConfusionCounts{bins[3], bins[2], bins[1], bins[0]};
}

}  // namespace glottisgate
