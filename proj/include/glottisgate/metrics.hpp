#pragma once

// Per-frame overlap scores, dataset aggregation and the two post-processing
// sweeps (detector confidence threshold and hold window). Frames where both
// prediction and ground truth are empty score DSC = IoU = 1.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "glottisgate/backends.hpp"
#include "glottisgate/core.hpp"
#include "glottisgate/csv.hpp"
#include "glottisgate/gate.hpp"
#include "glottisgate/pipelines.hpp"

namespace glottisgate {

inline double dsc(const ConfusionCounts& c) {
  const auto den = 2 * c.tp + c.fp + c.fn;
  return den == 0 ? 1.0 : static_cast<double>(2 * c.tp) / static_cast<double>(den);
}

inline double iou(const ConfusionCounts& c) {
  const auto den = c.tp + c.fp + c.fn;
  return den == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(den);
}

inline constexpr double kPassThreshold = 0.5;

struct EvalRow {
  std::string method;
  /// Fraction of evaluated frames on which the detector fired (raw, pre-hold).
  double det_recall = 0.0;
  /// Fraction of evaluated frames whose gated output was not zeroed.
  double gated_coverage = 0.0;
  double mean_dsc = 0.0;
  double mean_iou = 0.0;
  double pass_rate_dsc_ge_05 = 0.0;
  std::size_t n_frames = 0;
  std::size_t n_excluded = 0;

  static std::string csv_header() {
    return "method,det_recall,mean_dsc,mean_iou,pass_rate_dsc_ge_05,n_frames,n_excluded,"
           "gated_coverage";
  }
  std::string csv_line() const {
    return method + ',' + csv::format(det_recall) + ',' + csv::format(mean_dsc) + ',' +
           csv::format(mean_iou) + ',' + csv::format(pass_rate_dsc_ge_05) + ',' +
           std::to_string(n_frames) + ',' + std::to_string(n_excluded) + ',' +
           csv::format(gated_coverage);
  }
};

struct FrameScore {
  double dsc = 0.0;
  double iou = 0.0;
};

inline FrameScore score_frame(const BinaryMask& pred, const BinaryMask& gt) {
  const auto c = confusion_counts(pred, gt);
  return {dsc(c), iou(c)};
}

/// Averages per-frame scores over non-excluded frames. `results[i]` is
/// compared with `gts[i]`.
inline EvalRow evaluate(std::span<const FrameResult> results, std::span<const BinaryMask> gts,
                        std::string method = {}) {
  if (results.size() != gts.size()) {
    throw InvalidInput("evaluate: " + std::to_string(results.size()) + " results but " +
                       std::to_string(gts.size()) + " ground-truth masks");
  }
  EvalRow row;
  row.method = std::move(method);
  row.n_frames = results.size();
  bool ungated = !results.empty();
  double sum_dsc = 0.0, sum_iou = 0.0;
  std::size_t passes = 0, fired = 0, covered = 0, counted = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.excluded) {
      ++row.n_excluded;
      continue;
    }
    ++counted;
    if (r.gate_status != GateStatus::Ungated) ungated = false;
    const auto s = score_frame(r.mask, gts[i]);
    sum_dsc += s.dsc;
    sum_iou += s.iou;
    passes += s.dsc >= kPassThreshold;
    fired += r.detection.has_value();
    covered += r.gate_status != GateStatus::Zeroed;
  }
  if (counted > 0) {
    const double n = static_cast<double>(counted);
    row.mean_dsc = sum_dsc / n;
    row.mean_iou = sum_iou / n;
    row.pass_rate_dsc_ge_05 = static_cast<double>(passes) / n;
    row.det_recall = ungated ? 1.0 : static_cast<double>(fired) / n;
    row.gated_coverage = static_cast<double>(covered) / n;
  }
  return row;
}

// ---------------------------------------------------------------------------
// Re-gating from stored predictions

/// Produces the output mask of frame `index` given the gate's active box
/// (absent when zeroed). Lets sweeps re-gate without re-running inference.
using MaskProvider =
    std::function<BinaryMask(std::size_t index, const std::optional<BBox>& active_box)>;

/// Replays the gate over stored detections. `detections[i]` are all stored
/// detections for frame i; only the top-1 at or above `cfg.tau` is a firing.
inline std::vector<FrameResult> regate(const RunConfig& cfg, int frame_w, int frame_h,
                                       std::span<const std::vector<Detection>> detections,
                                       const MaskProvider& masks,
                                       std::span<const std::size_t> frame_ids = {},
                                       std::span<const bool> excluded = {}) {
  cfg.gate.validate();
  std::vector<FrameResult> out(detections.size());
  GateState state;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    FrameResult& r = out[i];
    r.frame_id = frame_ids.empty() ? i : frame_ids[i];
    r.excluded = !excluded.empty() && excluded[i];
    if (cfg.pipeline == PipelineKind::SegmenterOnly) {
      r.gate_status = GateStatus::Ungated;
      r.mask = masks(i, full_frame_box(frame_w, frame_h));
      r.area_px2 = mask_area(r.mask);
      continue;
    }
    r.detection = top_detection(detections[i], cfg.tau);
    std::optional<BBox> det_box;
    if (r.detection) {
      det_box = clip_box(r.detection->box, frame_w, frame_h);
      if (det_box) {
        det_box->confidence = r.detection->confidence;
      } else {
        r.detection.reset();
      }
    }
    if (!cfg.temporal) state = reset(state);
    auto [next, d] = gate_decide(state, cfg.gate, det_box, frame_w, frame_h);
    state = next;
    r.gate_status = d.status;
    r.active_box = d.active_box;
    r.mask = masks(i, d.active_box);
    r.area_px2 = mask_area(r.mask);
  }
  return out;
}

/// Mask provider for full-frame segmenter output: restrict to the box or zero.
inline MaskProvider restricting_provider(std::span<const BinaryMask> raw_masks) {
  return [raw_masks](std::size_t i, const std::optional<BBox>& box) {
    const BinaryMask& raw = raw_masks[i];
    if (!box) return BinaryMask(raw.width(), raw.height(), std::uint8_t{0});
    return restrict_mask(raw, *box);
  };
}

/// Mask provider for the crop pipeline: segments each distinct (frame, box)
/// once and reuses the result.
inline MaskProvider caching_crop_provider(std::span<const Frame> frames, Segmenter& segmenter,
                                          int pad, int target,
                                          std::span<const std::size_t> frame_ids = {}) {
  using Key = std::tuple<std::size_t, int, int, int, int>;
  auto cache = std::make_shared<std::map<Key, BinaryMask>>();
  return [frames, &segmenter, pad, target, frame_ids, cache](
             std::size_t i, const std::optional<BBox>& box) -> BinaryMask {
    const Frame& f = frames[i];
    if (!box) return BinaryMask(f.width(), f.height(), std::uint8_t{0});
    const Key key{i, box->x0, box->y0, box->x1, box->y1};
    if (auto it = cache->find(key); it != cache->end()) return it->second;
    auto crop = crop_resize(f, *box, pad, target);
    const SegmentContext ctx{frame_ids.empty() ? i : frame_ids[i], f.width(), f.height(),
                             crop.crop_rect};
    BinaryMask m = paste_back(binarize(segmenter.segment(crop.patch, ctx)), crop.crop_rect,
                              f.width(), f.height());
    cache->emplace(key, m);
    return m;
  };
}

/// Full-frame segmenter output, computed on first use and then restricted
/// like `restricting_provider`. Frames that are never gated open are never
/// segmented, matching the live pipeline.
inline MaskProvider caching_full_frame_provider(std::span<const Frame> frames, Segmenter& segmenter,
                                                std::span<const std::size_t> frame_ids = {}) {
  auto cache = std::make_shared<std::map<std::size_t, BinaryMask>>();
  return [frames, &segmenter, frame_ids, cache](std::size_t i,
                                                const std::optional<BBox>& box) -> BinaryMask {
    const Frame& f = frames[i];
    if (!box) return BinaryMask(f.width(), f.height(), std::uint8_t{0});
    auto it = cache->find(i);
    if (it == cache->end()) {
      const SegmentContext ctx{frame_ids.empty() ? i : frame_ids[i], f.width(), f.height(),
                               std::nullopt};
      it = cache->emplace(i, binarize(segmenter.segment(f, ctx))).first;
    }
    return restrict_mask(it->second, *box);
  };
}

/// Provider matching `process_video` for every pipeline that re-gates
/// without state. Motion keeps a running background, so it cannot.
inline MaskProvider sweep_mask_provider(const RunConfig& cfg, std::span<const Frame> frames,
                                        Segmenter* segmenter,
                                        std::span<const std::size_t> frame_ids = {}) {
  switch (cfg.pipeline) {
    case PipelineKind::Otsu:
      return [frames](std::size_t i, const std::optional<BBox>& box) {
        const Frame& f = frames[i];
        if (!box) return BinaryMask(f.width(), f.height(), std::uint8_t{0});
        return otsu_segment(f, *box);
      };
    case PipelineKind::SegmenterOnly:
    case PipelineKind::LocalizerSegmenter:
      if (!segmenter) throw InvalidConfig("sweep: pipeline needs a segmenter");
      return caching_full_frame_provider(frames, *segmenter, frame_ids);
    case PipelineKind::LocalizerCropSegmenter:
      if (!segmenter) throw InvalidConfig("sweep: pipeline needs a segmenter");
      return caching_crop_provider(frames, *segmenter, cfg.crop_pad, cfg.crop_target, frame_ids);
    case PipelineKind::Motion:
      break;
  }
  throw InvalidConfig("sweeps are not available for the motion pipeline (stateful background)");
}

struct TauPoint {
  double tau = 0.0;
  EvalRow row;
  /// tau is below the capture floor, so lower-confidence detections that
  /// were never stored would have fired.
  bool below_floor = false;
};

inline std::vector<TauPoint> tau_sweep(const RunConfig& base, int frame_w, int frame_h,
                                       std::span<const std::vector<Detection>> detections,
                                       const MaskProvider& masks, std::span<const BinaryMask> gts,
                                       std::span<const double> taus,
                                       double capture_floor = kCaptureFloor,
                                       std::span<const bool> excluded = {}) {
  std::vector<TauPoint> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    RunConfig cfg = base;
    // Values above 1 act as a "never fire" ceiling.
    cfg.tau = tau;
    const auto results = regate(cfg, frame_w, frame_h, detections, masks, {}, excluded);
    TauPoint p;
    p.tau = tau;
    p.below_floor = tau < capture_floor;
    p.row = evaluate(results, gts, "tau=" + csv::format(tau));
    out.push_back(std::move(p));
  }
  return out;
}

/// Convenience overload for full-frame segmenter masks.
inline std::vector<TauPoint> tau_sweep(const RunConfig& base,
                                       std::span<const std::vector<Detection>> detections,
                                       std::span<const BinaryMask> raw_masks,
                                       std::span<const BinaryMask> gts,
                                       std::span<const double> taus) {
  if (raw_masks.empty()) throw InvalidInput("tau_sweep: no masks");
  return tau_sweep(base, raw_masks.front().width(), raw_masks.front().height(), detections,
                   restricting_provider(raw_masks), gts, taus);
}

struct HoldPoint {
  std::size_t hold = 0;  // kHoldForever for the unbounded hold
  EvalRow row;
};

inline std::string hold_label(std::size_t hold) {
  return hold == kHoldForever ? std::string("inf") : std::to_string(hold);
}

/// Re-gates with each hold window. A hold of 0 means no hold at all, which is
/// the same gate as a window of 1.
inline std::vector<HoldPoint> hold_sweep(const RunConfig& base, int frame_w, int frame_h,
                                         std::span<const std::vector<Detection>> detections,
                                         const MaskProvider& masks,
                                         std::span<const BinaryMask> gts,
                                         std::span<const std::size_t> holds,
                                         std::span<const bool> excluded = {}) {
  std::vector<HoldPoint> out;
  out.reserve(holds.size());
  for (std::size_t hold : holds) {
    RunConfig cfg = base;
    cfg.temporal = true;
    cfg.gate.hold_window = std::max<std::size_t>(hold, 1);
    const auto results = regate(cfg, frame_w, frame_h, detections, masks, {}, excluded);
    out.push_back({hold, evaluate(results, gts, "hold=" + hold_label(hold))});
  }
  return out;
}

inline std::vector<HoldPoint> hold_sweep(const RunConfig& base,
                                         std::span<const std::vector<Detection>> detections,
                                         std::span<const BinaryMask> raw_masks,
                                         std::span<const BinaryMask> gts,
                                         std::span<const std::size_t> holds) {
  if (raw_masks.empty()) throw InvalidInput("hold_sweep: no masks");
  return hold_sweep(base, raw_masks.front().width(), raw_masks.front().height(), detections,
                    restricting_provider(raw_masks), gts, holds);
}

}  // namespace glottisgate
