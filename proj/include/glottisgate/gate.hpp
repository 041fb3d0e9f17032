#pragma once

// Temporal consistency guard. The segmenter output at frame t is kept
// (restricted to the active box) iff the detector fired at least once in the
// window {t - hold_window + 1, ..., t}; otherwise the output is the zero mask.
// The box centre is drift-clamped on fresh detections; its size always comes
// from the latest detection.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "glottisgate/core.hpp"
#include "glottisgate/error.hpp"

namespace glottisgate {

/// Hold window that never expires once a detection has occurred.
inline constexpr std::size_t kHoldForever = std::numeric_limits<std::size_t>::max();

struct GateConfig {
  std::size_t hold_window = 4;
  double drift_clamp = 30.0;

  void validate() const {
    if (hold_window < 1) throw InvalidConfig("hold_window must be >= 1");
    if (!(drift_clamp >= 0.0)) throw InvalidConfig("drift_clamp must be >= 0");
  }
};

enum class GateStatus { Detected, Held, Zeroed, Ungated };

inline std::string_view to_string(GateStatus s) {
  switch (s) {
    case GateStatus::Detected: return "Detected";
    case GateStatus::Held: return "Held";
    case GateStatus::Zeroed: return "Zeroed";
    case GateStatus::Ungated: return "Ungated";
  }
  return "?";
}

inline GateStatus parse_gate_status(std::string_view s) {
  if (s == "Detected") return GateStatus::Detected;
  if (s == "Held") return GateStatus::Held;
  if (s == "Zeroed") return GateStatus::Zeroed;
  if (s == "Ungated") return GateStatus::Ungated;
  throw InvalidInput("unknown gate status '" + std::string(s) + "'");
}

struct GateState {
  static constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

  std::optional<BBox> held_box;
  std::size_t frames_since_detection = kNever;

  bool cold() const noexcept { return !held_box.has_value(); }
};

/// Gating decision without the mask work; shared by `gate_step` and sweeps.
struct GateDecision {
  GateStatus status = GateStatus::Zeroed;
  std::optional<BBox> active_box;
};

struct GateOutcome {
  BinaryMask gated_mask;
  std::optional<BBox> active_box;
  GateStatus status = GateStatus::Zeroed;
};

/// Translates `box` (keeping its size where it fits) so it lies in the frame.
inline BBox place_in_frame(BBox b, int frame_w, int frame_h) {
  auto shift_into = [](int& lo, int& hi, int limit) {
    if (hi - lo >= limit) {
      lo = 0;
      hi = limit;
      return;
    }
    if (lo < 0) {
      hi -= lo;
      lo = 0;
    }
    if (hi > limit) {
      lo -= hi - limit;
      hi = limit;
    }
  };
  shift_into(b.x0, b.x1, frame_w);
  shift_into(b.y0, b.y1, frame_h);
  return b;
}

/// Limits how far the box centre may move from `prev_center` in one step.
/// Beyond `max_px` the box is translated along the line towards its own centre
/// so that the centre sits `max_px` from `prev_center`. Shifts are integral;
/// among the four floor/ceil roundings the one closest to the ideal position
/// that stays within `max_px` is used.
inline BBox clamp_drift(Point2 prev_center, const BBox& new_box, double max_px, int frame_w,
                        int frame_h) {
  if (max_px < 0.0) throw InvalidInput("clamp_drift: max_px must be >= 0");
  const Point2 c = new_box.center();
  const double dx = c.x - prev_center.x;
  const double dy = c.y - prev_center.y;
  const double d = std::hypot(dx, dy);
  if (d <= max_px) return place_in_frame(new_box, frame_w, frame_h);

  const double k = max_px / d;
  const double ideal_sx = prev_center.x + dx * k - c.x;
  const double ideal_sy = prev_center.y + dy * k - c.y;

  int best_sx = static_cast<int>(std::lround(ideal_sx));
  int best_sy = static_cast<int>(std::lround(ideal_sy));
  double best_err = std::numeric_limits<double>::infinity();
  bool best_inside = false;
  for (double sx : {std::floor(ideal_sx), std::ceil(ideal_sx)}) {
    for (double sy : {std::floor(ideal_sy), std::ceil(ideal_sy)}) {
      const double dist = std::hypot(c.x + sx - prev_center.x, c.y + sy - prev_center.y);
      const bool inside = dist <= max_px + 1e-9;
      const double err = std::hypot(sx - ideal_sx, sy - ideal_sy);
      if ((inside && !best_inside) || (inside == best_inside && err < best_err)) {
        best_inside = inside;
        best_err = err;
        best_sx = static_cast<int>(sx);
        best_sy = static_cast<int>(sy);
      }
    }
  }
  BBox out = new_box;
  out.x0 += best_sx;
  out.x1 += best_sx;
  out.y0 += best_sy;
  out.y1 += best_sy;
  return place_in_frame(out, frame_w, frame_h);
}

/// Advances the gate by one frame. Only box bookkeeping; no mask work.
inline std::pair<GateState, GateDecision> gate_decide(const GateState& state,
                                                      const GateConfig& cfg,
                                                      const std::optional<BBox>& detection,
                                                      int frame_w, int frame_h) {
  GateState next = state;
  GateDecision d;
  if (detection) {
    BBox box = *detection;
    if (state.held_box) {
      box = clamp_drift(state.held_box->center(), box, cfg.drift_clamp, frame_w, frame_h);
    } else {
      box = place_in_frame(box, frame_w, frame_h);
    }
    next.held_box = box;
    next.frames_since_detection = 0;
    d.status = GateStatus::Detected;
    d.active_box = box;
    return {next, d};
  }
  const std::size_t misses = state.frames_since_detection == GateState::kNever
                                 ? GateState::kNever
                                 : state.frames_since_detection + 1;
  next.frames_since_detection = misses;
  if (state.held_box && misses < cfg.hold_window) {
    d.status = GateStatus::Held;
    d.active_box = state.held_box;
  } else {
    d.status = GateStatus::Zeroed;
  }
  return {next, d};
}

inline std::pair<GateState, GateOutcome> gate_step(const GateState& state, const GateConfig& cfg,
                                                   const std::optional<BBox>& detection,
                                                   const BinaryMask& raw_mask) {
  auto [next, d] = gate_decide(state, cfg, detection, raw_mask.width(), raw_mask.height());
  GateOutcome out;
  out.status = d.status;
  out.active_box = d.active_box;
  if (d.active_box) {
    out.gated_mask = restrict_mask(raw_mask, *d.active_box);
  } else {
    out.gated_mask = BinaryMask(raw_mask.width(), raw_mask.height(), std::uint8_t{0});
  }
  return {std::move(next), std::move(out)};
}

inline GateState reset(const GateState&) { return GateState{}; }

/// Stateful convenience wrapper: one instance per video stream.
class DetectionGate {
 public:
  explicit DetectionGate(GateConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  GateOutcome step(const std::optional<BBox>& detection, const BinaryMask& raw_mask) {
    auto [next, out] = gate_step(state_, cfg_, detection, raw_mask);
    state_ = std::move(next);
    return out;
  }

  GateDecision decide(const std::optional<BBox>& detection, int frame_w, int frame_h) {
    auto [next, d] = gate_decide(state_, cfg_, detection, frame_w, frame_h);
    state_ = std::move(next);
    return d;
  }

  void reset() { state_ = glottisgate::reset(state_); }
  const GateState& state() const noexcept { return state_; }
  const GateConfig& config() const noexcept { return cfg_; }

 private:
  GateConfig cfg_;
  GateState state_;
};

}  // namespace glottisgate
