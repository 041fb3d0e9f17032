#pragma once

// Synthetic high-speed video with analytic ground truth. Frame t shows a dark
// ellipse (the glottis) on uniform tissue with semi-axes scaled by
// s(t) = max(0, sin(2*pi*f_vib*t/fps)), plus seeded Gaussian noise. Occluded
// frames show tissue only. Oracle backends serve the truth back to pipelines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "glottisgate/backends.hpp"
#include "glottisgate/core.hpp"
#include "glottisgate/error.hpp"

namespace glottisgate {

struct Occlusion {
  std::size_t start = 0;
  std::size_t length = 0;
};

struct SynthConfig {
  int width = 256;
  int height = 256;
  std::size_t n_frames = 502;
  double fps = 4000.0;
  double f_vib = 200.0;
  double a_max = 12.0;  // horizontal semi-axis
  double b_max = 40.0;  // vertical semi-axis
  Point2 center{128.0, 128.0};
  int glottis_intensity = 40;
  int tissue_intensity = 180;
  double noise_sigma = 0.0;
  std::vector<Occlusion> occlusions;
  std::uint64_t seed = 1;

  void validate() const {
    if (width < 1 || height < 1) throw InvalidConfig("synth: frame size must be >= 1x1");
    if (n_frames < 1) throw InvalidConfig("synth: need at least one frame");
    if (!(fps > 0.0)) throw InvalidConfig("synth: fps must be > 0");
    if (!(f_vib >= 0.0 && f_vib < fps / 2.0)) {
      throw InvalidConfig("synth: f_vib must be in [0, fps/2)");
    }
    if (!(a_max > 0.0 && b_max > 0.0)) throw InvalidConfig("synth: semi-axes must be > 0");
    if (glottis_intensity < 0 || glottis_intensity > 255 || tissue_intensity < 0 ||
        tissue_intensity > 255) {
      throw InvalidConfig("synth: intensities must be in 0..255");
    }
    if (!(noise_sigma >= 0.0)) throw InvalidConfig("synth: noise_sigma must be >= 0");
    if (std::abs(glottis_intensity - tissue_intensity) < 2.0 * noise_sigma ||
        glottis_intensity == tissue_intensity) {
      throw InvalidConfig("synth: glottis and tissue intensities must differ by >= 2*noise_sigma");
    }
  }

  bool occluded(std::size_t t) const {
    return std::ranges::any_of(occlusions, [t](const Occlusion& o) {
      return t >= o.start && t < o.start + o.length;
    });
  }

  /// Opening factor s(t) in [0,1].
  double opening(std::size_t t) const {
    return std::max(0.0, std::sin(2.0 * std::numbers::pi * f_vib * static_cast<double>(t) / fps));
  }
};

struct SynthTruth {
  std::vector<BinaryMask> masks;
  std::vector<std::int64_t> areas;
  std::vector<std::optional<BBox>> boxes;
  std::vector<bool> occluded;

  std::size_t size() const noexcept { return masks.size(); }
};

struct SynthVideo {
  std::vector<Frame> frames;
  SynthTruth truth;
};

/// Pixel set of an axis-aligned ellipse, sampled at pixel centres.
inline BinaryMask rasterize_ellipse(int width, int height, Point2 c, double a, double b) {
  BinaryMask m(width, height, std::uint8_t{0});
  if (a <= 0.0 || b <= 0.0) return m;
  const int y_lo = std::max(0, static_cast<int>(std::floor(c.y - b)) - 1);
  const int y_hi = std::min(height - 1, static_cast<int>(std::ceil(c.y + b)) + 1);
  const int x_lo = std::max(0, static_cast<int>(std::floor(c.x - a)) - 1);
  const int x_hi = std::min(width - 1, static_cast<int>(std::ceil(c.x + a)) + 1);
  for (int y = y_lo; y <= y_hi; ++y) {
    const double dy = (y + 0.5 - c.y) / b;
    auto row = m.row(y);
    for (int x = x_lo; x <= x_hi; ++x) {
      const double dx = (x + 0.5 - c.x) / a;
      if (dx * dx + dy * dy <= 1.0) row[x] = 1;
    }
  }
  return m;
}

inline SynthVideo generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthVideo v;
  v.frames.reserve(cfg.n_frames);
  auto& tr = v.truth;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);
  for (std::size_t t = 0; t < cfg.n_frames; ++t) {
    const bool occ = cfg.occluded(t);
    const double s = occ ? 0.0 : cfg.opening(t);
    BinaryMask gt = rasterize_ellipse(cfg.width, cfg.height, cfg.center, cfg.a_max * s,
                                      cfg.b_max * s);
    Frame f(cfg.width, cfg.height);
    auto px = f.data();
    const auto bits = gt.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
      double val = bits[i] ? cfg.glottis_intensity : cfg.tissue_intensity;
      if (cfg.noise_sigma > 0.0) val += noise(rng);
      px[i] = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
    }
    tr.areas.push_back(mask_area(gt));
    tr.boxes.push_back(mask_to_bbox(gt));
    tr.occluded.push_back(occ);
    tr.masks.push_back(std::move(gt));
    v.frames.push_back(std::move(f));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Oracle backends

/// Deterministic pseudo-random confidence in [0,1) per frame.
inline std::function<double(std::size_t)> hashed_confidence(std::uint64_t seed) {
  return [seed](std::size_t frame_id) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(frame_id) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  };
}

inline std::function<double(std::size_t)> constant_confidence(double c) {
  return [c](std::size_t) { return c; };
}

/// Returns the ground-truth box except on missed, occluded or closed frames.
class OracleDetector final : public Detector {
 public:
  OracleDetector(std::shared_ptr<const SynthTruth> truth, std::set<std::size_t> misses = {},
                 std::function<double(std::size_t)> confidence = constant_confidence(0.9))
      : truth_(std::move(truth)), misses_(std::move(misses)), confidence_(std::move(confidence)) {}

  std::vector<Detection> detect(const Frame&, std::size_t frame_id) override {
    if (frame_id >= truth_->size()) {
      throw MissingPrediction("oracle detector: no truth for frame " + std::to_string(frame_id));
    }
    if (misses_.contains(frame_id) || truth_->occluded[frame_id]) return {};
    const auto& box = truth_->boxes[frame_id];
    if (!box) return {};
    Detection d{*box, confidence_(frame_id)};
    d.box.confidence = d.confidence;
    return {d};
  }

 private:
  std::shared_ptr<const SynthTruth> truth_;
  std::set<std::size_t> misses_;
  std::function<double(std::size_t)> confidence_;
};

enum class Corruption { None, Dilate, Erode, SpuriousBlob };

struct CorruptionConfig {
  Corruption kind = Corruption::None;
  int k = 1;                       // dilate/erode radius (Chebyshev)
  Point2 blob_center{24.0, 24.0};  // spurious blob, placed away from the glottis
  double blob_radius = 8.0;
};

inline BinaryMask morph(const BinaryMask& m, int k, bool dilate) {
  if (k <= 0) return m;
  const int w = m.width(), h = m.height();
  // Separable square structuring element: horizontal then vertical pass.
  BinaryMask tmp(w, h, std::uint8_t{0});
  for (int y = 0; y < h; ++y) {
    const auto src = m.row(y);
    auto dst = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      bool acc = !dilate;
      for (int dx = -k; dx <= k; ++dx) {
        const int xx = x + dx;
        const bool v = (xx >= 0 && xx < w) ? src[xx] != 0 : false;
        acc = dilate ? (acc || v) : (acc && v);
      }
      dst[x] = acc;
    }
  }
  BinaryMask out(w, h, std::uint8_t{0});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool acc = !dilate;
      for (int dy = -k; dy <= k; ++dy) {
        const int yy = y + dy;
        const bool v = (yy >= 0 && yy < h) ? tmp.at(x, yy) != 0 : false;
        acc = dilate ? (acc || v) : (acc && v);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

inline BinaryMask corrupt(const BinaryMask& gt, const CorruptionConfig& c) {
  switch (c.kind) {
    case Corruption::None: return gt;
    case Corruption::Dilate: return morph(gt, c.k, true);
    case Corruption::Erode: return morph(gt, c.k, false);
    case Corruption::SpuriousBlob: {
      BinaryMask out = gt;
      const BinaryMask blob = rasterize_ellipse(gt.width(), gt.height(), c.blob_center,
                                                c.blob_radius, c.blob_radius);
      auto o = out.data();
      const auto b = blob.data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = o[i] | b[i];
      return out;
    }
  }
  return gt;
}

/// Returns the (optionally corrupted) ground-truth mask; in crop mode the mask
/// is resampled from the crop rectangle to the input size.
class OracleSegmenter final : public Segmenter {
 public:
  explicit OracleSegmenter(std::shared_ptr<const SynthTruth> truth, CorruptionConfig corruption = {})
      : truth_(std::move(truth)), corruption_(corruption) {}

  BinaryMask full_frame_mask(std::size_t frame_id) const {
    if (frame_id >= truth_->size()) {
      throw MissingPrediction("oracle segmenter: no truth for frame " + std::to_string(frame_id));
    }
    return corrupt(truth_->masks[frame_id], corruption_);
  }

  ProbabilityMap segment(const Frame& input, const SegmentContext& ctx) override {
    BinaryMask m = full_frame_mask(ctx.frame_id);
    if (ctx.crop_rect) {
      m = resize_nearest(m, *ctx.crop_rect, input.width(), input.height());
    } else if (!m.same_shape(input)) {
      m = resize_nearest(m, input.width(), input.height());
    }
    return to_probability(m);
  }

 private:
  std::shared_ptr<const SynthTruth> truth_;
  CorruptionConfig corruption_;
};

}  // namespace glottisgate
