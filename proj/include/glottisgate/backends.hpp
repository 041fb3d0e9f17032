#pragma once

// Detector and segmenter interfaces, the classical baselines (Otsu inside the
// box, running-background motion tracker) and replay backends that serve
// precomputed predictions by frame id.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glottisgate/core.hpp"
#include "glottisgate/csv.hpp"
#include "glottisgate/error.hpp"
#include "glottisgate/image_io.hpp"

namespace glottisgate {

struct Detection {
  BBox box;
  double confidence = 1.0;

  bool operator==(const Detection&) const = default;
};

/// Confidence floor used when capturing detections for later re-thresholding.
inline constexpr double kCaptureFloor = 0.001;

/// Where the segmenter input came from. For crop pipelines `crop_rect` is the
/// source-frame rectangle the input patch was resampled from.
struct SegmentContext {
  std::size_t frame_id = 0;
  int source_width = 0;
  int source_height = 0;
  std::optional<BBox> crop_rect;
};

class Detector {
 public:
  virtual ~Detector() = default;
  /// Detections sorted by confidence, highest first. May be empty.
  virtual std::vector<Detection> detect(const Frame& frame, std::size_t frame_id) = 0;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  /// Per-pixel glottis probability with the same dimensions as `input`.
  virtual ProbabilityMap segment(const Frame& input, const SegmentContext& ctx) = 0;
};

inline void sort_by_confidence(std::vector<Detection>& dets) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    return a.confidence > b.confidence;
  });
}

/// Highest-confidence detection at or above `tau`.
inline std::optional<Detection> top_detection(std::span<const Detection> dets, double tau) {
  std::optional<Detection> best;
  for (const auto& d : dets) {
    if (d.confidence >= tau && (!best || d.confidence > best->confidence)) best = d;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Otsu

using Histogram = std::array<std::uint64_t, 256>;

inline Histogram histogram(const Frame& frame, const BBox& box) {
  Histogram h{};
  const auto b = clip_box(box, frame.width(), frame.height());
  if (!b) return h;
  for (int y = b->y0; y < b->y1; ++y) {
    const auto r = frame.row(y);
    for (int x = b->x0; x < b->x1; ++x) ++h[r[x]];
  }
  return h;
}

/// Level t maximising the between-class variance w0*w1*(mu0-mu1)^2 with class 0
/// being intensities <= t. Ties go to the lowest level. A single-intensity
/// histogram returns that intensity.
inline int otsu_level(const Histogram& hist) {
  std::uint64_t total = 0;
  std::uint64_t sum = 0;
  for (int i = 0; i < 256; ++i) {
    total += hist[static_cast<std::size_t>(i)];
    sum += static_cast<std::uint64_t>(i) * hist[static_cast<std::size_t>(i)];
  }
  if (total == 0) throw InvalidInput("otsu_level: empty histogram");

  int first = 0;
  while (hist[static_cast<std::size_t>(first)] == 0) ++first;

  // Between-class variance is proportional to (S0*n1 - S1*n0)^2 / (n0*n1).
  // Compared exactly with 128-bit integers while the products fit.
  const bool exact = total <= (std::uint64_t{1} << 18);
  __extension__ typedef unsigned __int128 u128;
  __extension__ typedef __int128 i128;
  u128 best_num = 0;
  u128 best_den = 1;
  long double best_var = 0.0L;
  int best = -1;

  std::uint64_t n0 = 0;
  std::uint64_t s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += hist[static_cast<std::size_t>(t)];
    s0 += static_cast<std::uint64_t>(t) * hist[static_cast<std::size_t>(t)];
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::uint64_t s1 = sum - s0;
    if (exact) {
      const i128 diff = static_cast<i128>(s0) * n1 - static_cast<i128>(s1) * n0;
      const u128 num = static_cast<u128>(diff < 0 ? -diff : diff) *
                       static_cast<u128>(diff < 0 ? -diff : diff);
      const u128 den = static_cast<u128>(n0) * n1;
      if (best < 0 || num * best_den > best_num * den) {
        best_num = num;
        best_den = den;
        best = t;
      }
    } else {
      const long double w0 = static_cast<long double>(n0) / total;
      const long double w1 = 1.0L - w0;
      const long double m0 = static_cast<long double>(s0) / n0;
      const long double m1 = static_cast<long double>(s1) / n1;
      const long double var = w0 * w1 * (m0 - m1) * (m0 - m1);
      if (best < 0 || var > best_var) {
        best_var = var;
        best = t;
      }
    }
  }
  return best < 0 ? first : best;
}

/// Inverted Otsu inside `box`: the dark class is foreground. Regions of a
/// single intensity carry no contrast and give an empty mask.
inline BinaryMask otsu_segment(const Frame& frame, const BBox& box) {
  BinaryMask out(frame.width(), frame.height(), std::uint8_t{0});
  const auto b = clip_box(box, frame.width(), frame.height());
  if (!b) return out;
  const Histogram h = histogram(frame, *b);
  const auto distinct = std::ranges::count_if(h, [](std::uint64_t c) { return c > 0; });
  if (distinct < 2) return out;
  const int level = otsu_level(h);
  for (int y = b->y0; y < b->y1; ++y) {
    const auto src = frame.row(y);
    auto dst = out.row(y);
    for (int x = b->x0; x < b->x1; ++x) dst[x] = src[x] <= level ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Motion baseline: running background subtraction.

struct MotionConfig {
  std::size_t init_frames = 10;
  double alpha = 0.05;
  double delta = 25.0;

  void validate() const {
    if (init_frames < 1) throw InvalidConfig("motion init_frames must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfig("motion alpha must be in [0,1]");
  }
};

class MotionTracker {
 public:
  explicit MotionTracker(MotionConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const MotionConfig& config() const noexcept { return cfg_; }
  std::size_t frames_seen() const noexcept { return frames_seen_; }
  bool initialized() const noexcept { return frames_seen_ >= cfg_.init_frames; }
  bool has_background() const noexcept { return frames_seen_ > 0; }

  /// Accumulates one initialization frame into the per-pixel mean.
  void add_init_frame(const Frame& frame) {
    if (initialized()) throw InvalidState("motion tracker already initialized");
    if (frames_seen_ == 0) {
      width_ = frame.width();
      height_ = frame.height();
      background_.assign(frame.size(), 0.0);
    } else if (!frame.same_shape(width_, height_)) {
      throw InvalidInput("motion tracker: frame size changed");
    }
    const auto px = frame.data();
    const double n = static_cast<double>(frames_seen_);
    for (std::size_t i = 0; i < px.size(); ++i) {
      background_[i] = (background_[i] * n + px[i]) / (n + 1.0);
    }
    ++frames_seen_;
  }

  /// Foreground inside `box` where background - intensity >= delta. The
  /// background is then updated on every pixel that is not foreground.
  BinaryMask segment(const Frame& frame, const std::optional<BBox>& box) {
    if (!initialized()) throw InvalidState("motion tracker used before initialization");
    if (!frame.same_shape(width_, height_)) throw InvalidInput("motion tracker: frame size changed");
    BinaryMask mask(width_, height_, std::uint8_t{0});
    if (box) {
      if (const auto b = clip_box(*box, width_, height_)) {
        for (int y = b->y0; y < b->y1; ++y) {
          const auto src = frame.row(y);
          auto dst = mask.row(y);
          for (int x = b->x0; x < b->x1; ++x) {
            const double bg = background_[static_cast<std::size_t>(y) * width_ + x];
            dst[x] = (bg - src[x] >= cfg_.delta) ? 1 : 0;
          }
        }
      }
    }
    const auto px = frame.data();
    const auto m = mask.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
      if (!m[i]) background_[i] = (1.0 - cfg_.alpha) * background_[i] + cfg_.alpha * px[i];
    }
    ++frames_seen_;
    return mask;
  }

  std::span<const double> background() const noexcept { return background_; }

 private:
  MotionConfig cfg_;
  std::size_t frames_seen_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<double> background_;
};

inline MotionTracker motion_init(std::span<const Frame> frames, MotionConfig cfg = {}) {
  if (frames.empty()) throw InvalidInput("motion_init: need at least one frame");
  cfg.init_frames = frames.size();
  MotionTracker t(cfg);
  for (const auto& f : frames) t.add_init_frame(f);
  return t;
}

inline std::pair<MotionTracker, BinaryMask> motion_segment(MotionTracker state, const Frame& frame,
                                                           const BBox& box) {
  BinaryMask m = state.segment(frame, box);
  return {std::move(state), std::move(m)};
}

// ---------------------------------------------------------------------------
// Replay

/// Serves detections recorded in `frame_id,x0,y0,x1,y1,confidence` CSV form.
/// Frames without rows have no detection.
class ReplayDetector final : public Detector {
 public:
  ReplayDetector() = default;
  explicit ReplayDetector(std::map<std::size_t, std::vector<Detection>> records)
      : records_(std::move(records)) {
    for (auto& [id, dets] : records_) sort_by_confidence(dets);
  }

  static ReplayDetector from_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto c_id = t.column("frame_id");
    const auto c_x0 = t.column("x0");
    const auto c_y0 = t.column("y0");
    const auto c_x1 = t.column("x1");
    const auto c_y1 = t.column("y1");
    const auto c_conf = t.column("confidence");
    std::map<std::size_t, std::vector<Detection>> records;
    for (const auto& r : t.rows) {
      Detection d;
      d.box.x0 = csv::parse_number<int>(r[c_x0]);
      d.box.y0 = csv::parse_number<int>(r[c_y0]);
      d.box.x1 = csv::parse_number<int>(r[c_x1]);
      d.box.y1 = csv::parse_number<int>(r[c_y1]);
      d.confidence = csv::parse_number<double>(r[c_conf]);
      if (d.box.x1 <= d.box.x0 || d.box.y1 <= d.box.y0) {
        throw InvalidInput(path.string() + ": degenerate box in detection record");
      }
      if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
        throw InvalidInput(path.string() + ": confidence outside [0,1]");
      }
      d.box.confidence = d.confidence;
      records[csv::parse_number<std::size_t>(r[c_id])].push_back(d);
    }
    return ReplayDetector(std::move(records));
  }

  std::vector<Detection> detect(const Frame&, std::size_t frame_id) override {
    return lookup(frame_id);
  }

  std::vector<Detection> lookup(std::size_t frame_id) const {
    const auto it = records_.find(frame_id);
    return it == records_.end() ? std::vector<Detection>{} : it->second;
  }

  const std::map<std::size_t, std::vector<Detection>>& records() const noexcept {
    return records_;
  }

 private:
  std::map<std::size_t, std::vector<Detection>> records_;
};

inline void write_detections_csv(const std::filesystem::path& path,
                                 const std::map<std::size_t, std::vector<Detection>>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "frame_id,x0,y0,x1,y1,confidence\n";
  for (const auto& [id, dets] : records) {
    for (const auto& d : dets) {
      out << id << ',' << d.box.x0 << ',' << d.box.y0 << ',' << d.box.x1 << ',' << d.box.y1 << ','
          << csv::format(d.confidence) << '\n';
    }
  }
}

/// Numeric stem of an image file name, if it has one ("17.png" -> 17).
inline std::optional<std::size_t> numeric_stem(const std::filesystem::path& p) {
  const auto stem = p.stem().string();
  if (stem.empty()) return std::nullopt;
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), v);
  if (ec != std::errc{} || ptr != stem.data() + stem.size()) return std::nullopt;
  return v;
}

/// Serves masks stored as `<frame_id>.png` (or .pgm) in a directory.
class ReplaySegmenter final : public Segmenter {
 public:
  explicit ReplaySegmenter(const std::filesystem::path& dir) : dir_(dir) {
    if (!std::filesystem::is_directory(dir)) throw MissingInput("no such directory: " + dir.string());
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (!e.is_regular_file() || !is_image_file(e.path())) continue;
      if (const auto id = numeric_stem(e.path())) files_[*id] = e.path();
    }
  }

  BinaryMask mask(std::size_t frame_id) const {
    const auto it = files_.find(frame_id);
    if (it == files_.end()) {
      throw MissingPrediction("no stored mask for frame " + std::to_string(frame_id) + " in " +
                              dir_.string());
    }
    return read_mask(it->second);
  }

  ProbabilityMap segment(const Frame& input, const SegmentContext& ctx) override {
    BinaryMask m = mask(ctx.frame_id);
    if (!m.same_shape(input)) {
      throw InvalidInput("replay mask for frame " + std::to_string(ctx.frame_id) + " is " +
                         std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                         ", segmenter input is " + std::to_string(input.width()) + "x" +
                         std::to_string(input.height()));
    }
    return to_probability(m);
  }

  std::size_t size() const noexcept { return files_.size(); }

 private:
  std::filesystem::path dir_;
  std::map<std::size_t, std::filesystem::path> files_;
};

}  // namespace glottisgate
