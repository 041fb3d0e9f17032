#include <gtest/gtest.h>

#include "glottisgate/gaw.hpp"
#include "glottisgate/metrics.hpp"
#include "glottisgate/pipelines.hpp"
#include "glottisgate/synth.hpp"

using namespace glottisgate;

namespace {

struct Fixture {
  SynthVideo video;
  std::shared_ptr<SynthTruth> truth;

  explicit Fixture(SynthConfig cfg) : video(generate(cfg)), truth(std::make_shared<SynthTruth>(video.truth)) {}

  std::vector<FrameResult> run(const RunConfig& rc, Detector* det, Segmenter* seg) const {
    return process_video(rc, {det, seg}, video.frames);
  }
};

SynthConfig small(std::size_t n = 80) {
  SynthConfig c;
  c.width = c.height = 128;
  c.center = {64, 64};
  c.a_max = 10;
  c.b_max = 25;
  c.n_frames = n;
  return c;
}

RunConfig with(PipelineKind k) {
  RunConfig rc;
  rc.pipeline = k;
  return rc;
}

}  // namespace

TEST(Pipeline, ParseNames) {
  for (auto k : {PipelineKind::SegmenterOnly, PipelineKind::LocalizerSegmenter,
                 PipelineKind::LocalizerCropSegmenter, PipelineKind::Motion, PipelineKind::Otsu}) {
    EXPECT_EQ(parse_pipeline(to_string(k)), k);
  }
  EXPECT_THROW(parse_pipeline("yolo"), InvalidConfig);
}

TEST(Pipeline, OracleLocalizerSegmenterIsExact) {
  Fixture f(small());
  OracleDetector det(f.truth);
  OracleSegmenter seg(f.truth);
  const auto rs = f.run(with(PipelineKind::LocalizerSegmenter), &det, &seg);
  ASSERT_EQ(rs.size(), 80u);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ(rs[i].frame_id, i);
    if (f.truth->areas[i] > 0) {
      EXPECT_EQ(rs[i].mask, f.truth->masks[i]);
      EXPECT_EQ(rs[i].gate_status, GateStatus::Detected);
    }
    EXPECT_EQ(rs[i].area_px2, f.truth->areas[i]);
  }
  EXPECT_DOUBLE_EQ(evaluate(rs, f.truth->masks).mean_dsc, 1.0);
}

TEST(Pipeline, SilentDetectorBeyondHoldZeroes) {
  Fixture f(small(60));
  std::set<std::size_t> misses;
  for (std::size_t t = 0; t < 60; ++t) misses.insert(t);
  OracleDetector det(f.truth, misses);
  OracleSegmenter seg(f.truth);
  for (const auto& r : f.run(with(PipelineKind::LocalizerSegmenter), &det, &seg)) {
    EXPECT_EQ(r.area_px2, 0);
    EXPECT_EQ(r.gate_status, GateStatus::Zeroed);
  }
}

TEST(Pipeline, CropPipelineClipsOutsideCropRect) {
  // Detector box 3 px short of GT on the right; pad 0 so the crop rect equals the box.
  const BinaryMask gt = rasterize_ellipse(64, 64, {32, 32}, 10, 10);
  const BBox gt_box = *mask_to_bbox(gt);
  const BBox short_box{gt_box.x0, gt_box.y0, gt_box.x1 - 3, gt_box.y1, 0.9};
  struct FixedDet : Detector {
    BBox b;
    std::vector<Detection> detect(const Frame&, std::size_t) override { return {{b, 0.9}}; }
  } det;
  det.b = short_box;
  SynthTruth t;
  t.masks = {gt};
  t.areas = {mask_area(gt)};
  t.boxes = {gt_box};
  t.occluded = {false};
  OracleSegmenter seg(std::make_shared<SynthTruth>(t));
  RunConfig rc = with(PipelineKind::LocalizerCropSegmenter);
  rc.crop_pad = 0;
  rc.crop_target = 64;
  const std::vector<Frame> frames{Frame(64, 64, std::uint8_t{100})};
  const auto rs = process_video(rc, {&det, &seg}, frames);
  const auto expected = restrict_mask(gt, short_box);
  EXPECT_EQ(rs[0].mask, expected);
  const double clipped = 1.0 - static_cast<double>(mask_area(expected)) / mask_area(gt);
  const double d = dsc(confusion_counts(rs[0].mask, gt));
  EXPECT_NEAR(d, 2.0 * (1 - clipped) / (2 - clipped), 1e-12);
  EXPECT_LT(d, 1.0);
}

TEST(Pipeline, CropPipelineOracleIsExactWithPadding) {
  Fixture f(small(40));
  OracleDetector det(f.truth);
  OracleSegmenter seg(f.truth);
  const auto rs = f.run(with(PipelineKind::LocalizerCropSegmenter), &det, &seg);
  // Crop and paste back through nearest resampling of the same rectangle.
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (f.truth->areas[i] == 0) continue;
    EXPECT_GE(dsc(confusion_counts(rs[i].mask, f.truth->masks[i])), 0.97) << i;
  }
}

TEST(Pipeline, TemporalFlagIrrelevantWhenAlwaysFiring) {
  Fixture f(small());
  // Box from a permanently visible ellipse: use a constant-fire detector.
  struct Always : Detector {
    std::vector<Detection> detect(const Frame&, std::size_t) override { return {{{40, 30, 90, 100, 0.8}, 0.8}}; }
  } det;
  OracleSegmenter seg(f.truth);
  RunConfig a = with(PipelineKind::LocalizerSegmenter), b = a;
  b.temporal = false;
  const auto ra = f.run(a, &det, &seg), rb = f.run(b, &det, &seg);
  for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(ra[i].mask, rb[i].mask);
}

TEST(Pipeline, OcclusionHoldThenZero) {
  Fixture f(small(80));
  std::set<std::size_t> misses;
  for (std::size_t t = 40; t < 50; ++t) misses.insert(t);
  struct Gapped : Detector {
    std::set<std::size_t> gap;
    std::vector<Detection> detect(const Frame&, std::size_t id) override {
      if (gap.contains(id)) return {};
      return {{{40, 30, 90, 100, 0.8}, 0.8}};
    }
  } det;
  det.gap = misses;
  OracleSegmenter seg(f.truth);
  const auto rs = f.run(with(PipelineKind::LocalizerSegmenter), &det, &seg);
  for (std::size_t t = 40; t < 50; ++t) {
    EXPECT_EQ(rs[t].gate_status, t < 43 ? GateStatus::Held : GateStatus::Zeroed) << t;
    if (t >= 43) {
      EXPECT_EQ(rs[t].area_px2, 0);
    }
  }
}

TEST(Pipeline, SegmenterOnlyIsUngated) {
  Fixture f(small(20));
  OracleSegmenter seg(f.truth, {Corruption::SpuriousBlob, 1, {10, 10}, 4});
  const auto rs = f.run(with(PipelineKind::SegmenterOnly), nullptr, &seg);
  for (const auto& r : rs) {
    EXPECT_EQ(r.gate_status, GateStatus::Ungated);
    EXPECT_FALSE(r.detection);
    EXPECT_GT(r.area_px2, 0);
  }
}

TEST(Pipeline, OtsuPipeline) {
  Fixture f(small(40));
  OracleDetector det(f.truth);
  const auto rs = f.run(with(PipelineKind::Otsu), &det, nullptr);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (f.truth->areas[i] < 20) continue;
    EXPECT_GE(dsc(confusion_counts(rs[i].mask, f.truth->masks[i])), 0.9) << i;
  }
}

TEST(Pipeline, MotionExcludesInitFrames) {
  Fixture f(small(40));
  struct Always : Detector {
    std::vector<Detection> detect(const Frame&, std::size_t) override { return {{{30, 20, 100, 110, 0.8}, 0.8}}; }
  } det;
  const auto rs = f.run(with(PipelineKind::Motion), &det, nullptr);
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_EQ(rs[i].excluded, i < 10);
  const auto g = extract_waveform(rs, 4000);
  EXPECT_EQ(g.analyzed().size(), 30u);
  const auto row = evaluate(rs, f.truth->masks);
  EXPECT_EQ(row.n_excluded, 10u);
}

TEST(Pipeline, Errors) {
  Fixture f(small(4));
  OracleSegmenter seg(f.truth);
  EXPECT_THROW(f.run(with(PipelineKind::LocalizerSegmenter), nullptr, &seg), InvalidConfig);
  EXPECT_THROW(process_video(with(PipelineKind::SegmenterOnly), {nullptr, &seg}, {}), InvalidInput);
  std::vector<Frame> mixed{Frame(128, 128), Frame(64, 64)};
  EXPECT_THROW(process_video(with(PipelineKind::SegmenterOnly), {nullptr, &seg}, mixed), InvalidInput);
  RunConfig bad = with(PipelineKind::Otsu);
  bad.tau = -0.1;
  EXPECT_THROW(bad.validate(), InvalidConfig);
}

TEST(Pipeline, WaveformTracksTruth) {
  Fixture f(small(200));
  OracleDetector det(f.truth);
  OracleSegmenter seg(f.truth);
  const auto rs = f.run(with(PipelineKind::LocalizerSegmenter), &det, &seg);
  const auto g = extract_waveform(rs, 4000);
  double se = 0, ss = 0;
  for (std::size_t i = 0; i < g.areas.size(); ++i) {
    const double d = g.areas[i] - static_cast<double>(f.truth->areas[i]);
    se += d * d;
    ss += static_cast<double>(f.truth->areas[i] * f.truth->areas[i]);
  }
  EXPECT_LE(std::sqrt(se / ss), 0.05);
}
