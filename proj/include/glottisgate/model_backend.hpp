#pragma once

// ONNX model adapters for trained localizer/segmenter weights. Inference goes
// through OpenCV's DNN module when the build defines GLOTTISGATE_WITH_ONNX;
// otherwise the factories throw FeatureDisabled and callers should fall back
// to the replay backends.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "glottisgate/backends.hpp"
#include "glottisgate/core.hpp"
#include "glottisgate/error.hpp"

#ifdef GLOTTISGATE_WITH_ONNX
#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#endif

namespace glottisgate {

struct ModelIoSpec {
  std::string input_name;   // empty: the network's first input
  std::string output_name;  // empty: the network's default output
  int input_size = 256;
  double input_scale = 1.0 / 255.0;
  /// Apply a logistic sigmoid to segmenter outputs (for logit heads).
  bool sigmoid = false;
  /// Detections below this confidence are dropped before they reach the gate.
  double confidence_floor = kCaptureFloor;
};

inline bool model_runtime_available() {
#ifdef GLOTTISGATE_WITH_ONNX
  return true;
#else
  return false;
#endif
}

inline constexpr const char* kModelDisabledMessage =
    "ONNX model support is not compiled in (configure with -DGLOTTISGATE_WITH_ONNX=ON and "
    "OpenCV's dnn module); use replay backends (--detector replay:FILE, --segmenter "
    "replay:DIR) with predictions exported from your inference runtime";

#ifdef GLOTTISGATE_WITH_ONNX

namespace detail {

class OnnxNet {
 public:
  OnnxNet(const std::filesystem::path& path, ModelIoSpec spec) : spec_(std::move(spec)) {
    if (!std::filesystem::exists(path)) throw MissingInput("no such model: " + path.string());
    try {
      net_ = cv::dnn::readNetFromONNX(path.string());
    } catch (const cv::Exception& e) {
      throw InvalidInput("cannot load ONNX model " + path.string() + ": " + e.what());
    }
    net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
  }

  /// Letterboxes `frame` to the model input and runs one forward pass.
  cv::Mat run(const Frame& frame, LetterboxTransform& t) {
    auto lb = letterbox(frame, spec_.input_size);
    t = lb.transform;
    const int s = spec_.input_size;
    cv::Mat blob({1, 1, s, s}, CV_32F);
    float* dst = blob.ptr<float>();
    const auto px = lb.image.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
      dst[i] = static_cast<float>(px[i] * spec_.input_scale);
    }
    std::lock_guard lock(mutex_);
    net_.setInput(blob, spec_.input_name);
    return spec_.output_name.empty() ? net_.forward().clone() : net_.forward(spec_.output_name).clone();
  }

  const ModelIoSpec& spec() const noexcept { return spec_; }

 private:
  ModelIoSpec spec_;
  cv::dnn::Net net_;
  std::mutex mutex_;
};

}  // namespace detail

/// Single-class YOLO-style head: output [1, 5, N] or [1, N, 5] holding
/// (cx, cy, w, h, score) in model-input pixels.
class OnnxDetector final : public Detector {
 public:
  OnnxDetector(const std::filesystem::path& path, ModelIoSpec spec) : net_(path, std::move(spec)) {}

  std::vector<Detection> detect(const Frame& frame, std::size_t) override {
    LetterboxTransform t;
    cv::Mat out = net_.run(frame, t);
    if (out.dims != 3 || out.size[0] != 1 || (out.size[1] != 5 && out.size[2] != 5)) {
      throw InvalidInput("detector output must have shape [1,5,N] or [1,N,5]");
    }
    const bool channels_first = out.size[1] == 5;
    const int n = channels_first ? out.size[2] : out.size[1];
    const float* p = out.ptr<float>();
    auto value = [&](int field, int i) {
      return channels_first ? p[field * n + i] : p[i * 5 + field];
    };
    std::vector<Detection> dets;
    for (int i = 0; i < n; ++i) {
      const double conf = value(4, i);
      if (!(conf >= net_.spec().confidence_floor)) continue;
      const double cx = value(0, i), cy = value(1, i), w = value(2, i), h = value(3, i);
      const Point2 a = t.inverse({cx - w / 2.0, cy - h / 2.0});
      const Point2 b = t.inverse({cx + w / 2.0, cy + h / 2.0});
      BBox box{static_cast<int>(std::floor(a.x)), static_cast<int>(std::floor(a.y)),
               static_cast<int>(std::ceil(b.x)), static_cast<int>(std::ceil(b.y)),
               std::min(1.0, conf)};
      const auto clipped = clip_box(box, frame.width(), frame.height());
      if (!clipped) continue;
      dets.push_back({*clipped, std::min(1.0, conf)});
    }
    sort_by_confidence(dets);
    return dets;
  }

 private:
  detail::OnnxNet net_;
};

/// Segmentation head: output [1, 1, S, S] probabilities (or logits with
/// `sigmoid`), mapped back through the letterbox to the input size.
class OnnxSegmenter final : public Segmenter {
 public:
  OnnxSegmenter(const std::filesystem::path& path, ModelIoSpec spec) : net_(path, std::move(spec)) {}

  ProbabilityMap segment(const Frame& input, const SegmentContext&) override {
    LetterboxTransform t;
    cv::Mat out = net_.run(input, t);
    const int s = net_.spec().input_size;
    if (out.total() != static_cast<std::size_t>(s) * static_cast<std::size_t>(s)) {
      throw InvalidInput("segmenter output must hold input_size x input_size values");
    }
    ProbabilityMap full(s, s);
    const float* p = out.ptr<float>();
    auto dst = full.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      float v = p[i];
      if (net_.spec().sigmoid) v = 1.0f / (1.0f + std::exp(-v));
      dst[i] = std::clamp(v, 0.0f, 1.0f);
    }
    return resize_nearest(full, t.content(), input.width(), input.height());
  }

 private:
  detail::OnnxNet net_;
};

#endif  // GLOTTISGATE_WITH_ONNX

inline std::unique_ptr<Detector> make_model_detector(const std::filesystem::path& path,
                                                     const ModelIoSpec& spec) {
#ifdef GLOTTISGATE_WITH_ONNX
  return std::make_unique<OnnxDetector>(path, spec);
#else
  (void)path;
  (void)spec;
  throw FeatureDisabled(kModelDisabledMessage);
#endif
}

inline std::unique_ptr<Segmenter> make_model_segmenter(const std::filesystem::path& path,
                                                       const ModelIoSpec& spec) {
#ifdef GLOTTISGATE_WITH_ONNX
  return std::make_unique<OnnxSegmenter>(path, spec);
#else
  (void)path;
  (void)spec;
  throw FeatureDisabled(kModelDisabledMessage);
#endif
}

}  // namespace glottisgate
