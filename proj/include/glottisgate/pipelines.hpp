#pragma once

// The five inference pipelines:
//   segmenter-only           full-frame segmenter, no gate
//   localizer-segmenter      full-frame segmenter restricted to the gated box
//   localizer-crop-segmenter gated box (+pad) cropped, resized, segmented, pasted back
//   motion                   running-background baseline inside the gated box
//   otsu                     inverted Otsu inside the gated box

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glottisgate/backends.hpp"
#include "glottisgate/core.hpp"
#include "glottisgate/error.hpp"
#include "glottisgate/gate.hpp"

namespace glottisgate {

enum class PipelineKind { SegmenterOnly, LocalizerSegmenter, LocalizerCropSegmenter, Motion, Otsu };

inline std::string_view to_string(PipelineKind k) {
  switch (k) {
    case PipelineKind::SegmenterOnly: return "segmenter-only";
    case PipelineKind::LocalizerSegmenter: return "localizer-segmenter";
    case PipelineKind::LocalizerCropSegmenter: return "localizer-crop-segmenter";
    case PipelineKind::Motion: return "motion";
    case PipelineKind::Otsu: return "otsu";
  }
  return "?";
}

inline PipelineKind parse_pipeline(std::string_view s) {
  for (auto k : {PipelineKind::SegmenterOnly, PipelineKind::LocalizerSegmenter,
                 PipelineKind::LocalizerCropSegmenter, PipelineKind::Motion, PipelineKind::Otsu}) {
    if (s == to_string(k)) return k;
  }
  throw InvalidConfig("unknown pipeline '" + std::string(s) + "'");
}

inline bool uses_detector(PipelineKind k) { return k != PipelineKind::SegmenterOnly; }
inline bool uses_segmenter(PipelineKind k) {
  return k == PipelineKind::SegmenterOnly || k == PipelineKind::LocalizerSegmenter ||
         k == PipelineKind::LocalizerCropSegmenter;
}

struct RunConfig {
  PipelineKind pipeline = PipelineKind::LocalizerSegmenter;
  double tau = 0.25;
  GateConfig gate;
  double fps = 4000.0;
  /// false = frame-level mode: gate state is reset before every frame.
  bool temporal = true;
  int crop_pad = 8;
  int crop_target = 256;
  MotionConfig motion;

  void validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidConfig("tau must be in [0,1]");
    if (!(fps > 0.0)) throw InvalidConfig("fps must be > 0");
    if (crop_pad < 0) throw InvalidConfig("crop padding must be >= 0");
    if (crop_target < 1) throw InvalidConfig("crop target must be >= 1");
    gate.validate();
    motion.validate();
  }
};

struct FrameResult {
  std::size_t frame_id = 0;
  BinaryMask mask;
  /// Top-1 detection at or above tau, before the gate touched it.
  std::optional<Detection> detection;
  /// Box the output was restricted to (after drift clamp / hold).
  std::optional<BBox> active_box;
  GateStatus gate_status = GateStatus::Zeroed;
  std::int64_t area_px2 = 0;
  bool excluded = false;
};

struct PipelineBackends {
  Detector* detector = nullptr;
  Segmenter* segmenter = nullptr;
};

struct PipelineState {
  GateState gate;
  std::optional<MotionTracker> motion;
  int width = 0;
  int height = 0;
  std::size_t frames_processed = 0;
};

inline void require_backends(const RunConfig& cfg, const PipelineBackends& b) {
  if (uses_detector(cfg.pipeline) && !b.detector) {
    throw InvalidConfig(std::string(to_string(cfg.pipeline)) + " pipeline needs a detector");
  }
  if (uses_segmenter(cfg.pipeline) && !b.segmenter) {
    throw InvalidConfig(std::string(to_string(cfg.pipeline)) + " pipeline needs a segmenter");
  }
}

/// Output mask for one gated frame once the active box is known.
inline BinaryMask segment_in_box(const RunConfig& cfg, PipelineState& state,
                                 const PipelineBackends& b, const Frame& frame,
                                 std::size_t frame_id, const std::optional<BBox>& box) {
  const int w = frame.width();
  const int h = frame.height();
  switch (cfg.pipeline) {
    case PipelineKind::SegmenterOnly:
    case PipelineKind::LocalizerSegmenter: {
      if (cfg.pipeline == PipelineKind::LocalizerSegmenter && !box) {
        return BinaryMask(w, h, std::uint8_t{0});
      }
      const SegmentContext ctx{frame_id, w, h, std::nullopt};
      const BinaryMask raw = binarize(b.segmenter->segment(frame, ctx));
      if (cfg.pipeline == PipelineKind::SegmenterOnly) return raw;
      return restrict_mask(raw, *box);
    }
    case PipelineKind::LocalizerCropSegmenter: {
      if (!box) return BinaryMask(w, h, std::uint8_t{0});
      auto crop = crop_resize(frame, *box, cfg.crop_pad, cfg.crop_target);
      const SegmentContext ctx{frame_id, w, h, crop.crop_rect};
      const BinaryMask patch = binarize(b.segmenter->segment(crop.patch, ctx));
      return paste_back(patch, crop.crop_rect, w, h);
    }
    case PipelineKind::Otsu:
      if (!box) return BinaryMask(w, h, std::uint8_t{0});
      return otsu_segment(frame, *box);
    case PipelineKind::Motion:
      return state.motion->segment(frame, box);
  }
  return BinaryMask(w, h, std::uint8_t{0});
}

inline FrameResult process_frame(const RunConfig& cfg, PipelineState& state,
                                 const PipelineBackends& b, const Frame& frame,
                                 std::size_t frame_id) {
  if (state.frames_processed == 0) {
    state.width = frame.width();
    state.height = frame.height();
  } else if (!frame.same_shape(state.width, state.height)) {
    throw InvalidInput("frame " + std::to_string(frame_id) + " is " + std::to_string(frame.width()) +
                       "x" + std::to_string(frame.height()) + ", video is " +
                       std::to_string(state.width) + "x" + std::to_string(state.height));
  }
  ++state.frames_processed;

  FrameResult r;
  r.frame_id = frame_id;

  if (cfg.pipeline == PipelineKind::SegmenterOnly) {
    r.mask = segment_in_box(cfg, state, b, frame, frame_id, std::nullopt);
    r.gate_status = GateStatus::Ungated;
    r.area_px2 = mask_area(r.mask);
    return r;
  }

  const auto dets = b.detector->detect(frame, frame_id);
  r.detection = top_detection(dets, cfg.tau);
  if (!cfg.temporal) state.gate = reset(state.gate);
  std::optional<BBox> det_box;
  if (r.detection) {
    det_box = r.detection->box;
    det_box->confidence = r.detection->confidence;
    det_box = clip_box(*det_box, frame.width(), frame.height());
    if (!det_box) r.detection.reset();
  }
  auto [next, decision] = gate_decide(state.gate, cfg.gate, det_box, frame.width(), frame.height());
  state.gate = next;
  r.gate_status = decision.status;
  r.active_box = decision.active_box;

  if (cfg.pipeline == PipelineKind::Motion) {
    if (!state.motion) state.motion.emplace(cfg.motion);
    if (!state.motion->initialized()) {
      state.motion->add_init_frame(frame);
      r.mask = BinaryMask(frame.width(), frame.height(), std::uint8_t{0});
      r.excluded = true;
      return r;
    }
  }

  r.mask = segment_in_box(cfg, state, b, frame, frame_id, r.active_box);
  r.area_px2 = mask_area(r.mask);
  return r;
}

/// Runs a whole video with fresh per-video state. `frame_ids` defaults to
/// 0..N-1.
inline std::vector<FrameResult> process_video(const RunConfig& cfg, const PipelineBackends& b,
                                              std::span<const Frame> frames,
                                              std::span<const std::size_t> frame_ids = {}) {
  cfg.validate();
  require_backends(cfg, b);
  if (frames.empty()) throw InvalidInput("process_video: empty video");
  if (!frame_ids.empty() && frame_ids.size() != frames.size()) {
    throw InvalidInput("process_video: frame id count does not match frame count");
  }
  PipelineState state;
  std::vector<FrameResult> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.push_back(process_frame(cfg, state, b, frames[i], frame_ids.empty() ? i : frame_ids[i]));
  }
  return out;
}

}  // namespace glottisgate
