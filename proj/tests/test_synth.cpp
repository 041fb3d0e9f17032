#include <gtest/gtest.h>

#include "glottisgate/backends.hpp"
#include "glottisgate/gaw.hpp"
#include "glottisgate/metrics.hpp"
#include "glottisgate/synth.hpp"

using namespace glottisgate;

TEST(Synth, TwentyCyclesGiveTwoHundredHertz) {
  SynthConfig cfg;
  cfg.n_frames = 400;
  const auto v = generate(cfg);
  GawSeries g;
  for (auto a : v.truth.areas) g.areas.push_back(static_cast<double>(a));
  EXPECT_DOUBLE_EQ(f0_fft(g), 200.0);
  // One open phase per 20-frame cycle.
  int rises = 0;
  for (std::size_t t = 1; t < g.areas.size(); ++t) rises += g.areas[t - 1] == 0 && g.areas[t] > 0;
  EXPECT_EQ(rises, 20);
}

TEST(Synth, OcclusionFlagsAndZeroArea) {
  SynthConfig cfg;
  cfg.n_frames = 150;
  cfg.occlusions = {{100, 10}};
  const auto v = generate(cfg);
  for (std::size_t t = 0; t < cfg.n_frames; ++t) {
    const bool occ = t >= 100 && t < 110;
    EXPECT_EQ(v.truth.occluded[t], occ);
    if (occ) {
      EXPECT_EQ(v.truth.areas[t], 0);
      EXPECT_FALSE(v.truth.boxes[t]);
    }
  }
}

TEST(Synth, NoiseFreeOtsuInsideTruthBox) {
  SynthConfig cfg;
  cfg.n_frames = 40;
  const auto v = generate(cfg);
  for (std::size_t t = 0; t < cfg.n_frames; ++t) {
    if (!v.truth.boxes[t]) continue;
    const BBox b = *v.truth.boxes[t];
    const BBox padded{b.x0 - 4, b.y0 - 4, b.x1 + 4, b.y1 + 4, 1.0};
    EXPECT_GE(dsc(confusion_counts(otsu_segment(v.frames[t], padded), v.truth.masks[t])), 0.99);
  }
}

TEST(Synth, SeededAndDeterministic) {
  SynthConfig cfg;
  cfg.n_frames = 5;
  cfg.noise_sigma = 8;
  const auto a = generate(cfg), b = generate(cfg);
  EXPECT_EQ(a.frames, b.frames);
  cfg.seed = 2;
  EXPECT_NE(generate(cfg).frames, a.frames);
}

TEST(Synth, InvalidConfigs) {
  SynthConfig c;
  c.f_vib = 2000;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = {};
  c.noise_sigma = 80;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = {};
  c.n_frames = 0;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = {};
  c.tissue_intensity = c.glottis_intensity;
  EXPECT_THROW(generate(c), InvalidConfig);
}

TEST(Synth, RasterizedEllipseIsSymmetric) {
  const auto m = rasterize_ellipse(64, 64, {32, 32}, 10, 20);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) EXPECT_EQ(m.at(x, y), m.at(63 - x, 63 - y));
  EXPECT_NEAR(static_cast<double>(mask_area(m)), std::numbers::pi * 200, 0.03 * std::numbers::pi * 200);
}

TEST(Oracles, DetectorRespectsMissesAndOcclusion) {
  SynthConfig cfg;
  cfg.n_frames = 60;
  cfg.occlusions = {{30, 5}};
  const auto v = generate(cfg);
  auto truth = std::make_shared<SynthTruth>(v.truth);
  OracleDetector det(truth, {5, 6});
  for (std::size_t t = 0; t < cfg.n_frames; ++t) {
    const auto d = det.detect(v.frames[t], t);
    const bool expect = truth->boxes[t] && t != 5 && t != 6 && !truth->occluded[t];
    EXPECT_EQ(!d.empty(), expect) << t;
    if (!d.empty()) {
      EXPECT_EQ(d[0].box.x0, truth->boxes[t]->x0);
    }
  }
  EXPECT_THROW(det.detect(v.frames[0], 60), MissingPrediction);
}

TEST(Oracles, SegmenterCropModeResamples) {
  SynthConfig cfg;
  cfg.n_frames = 10;
  const auto v = generate(cfg);
  auto truth = std::make_shared<SynthTruth>(v.truth);
  OracleSegmenter seg(truth);
  const std::size_t t = 5;
  const BBox rect = padded_crop_rect(*truth->boxes[t], 8, cfg.width, cfg.height);
  const auto crop = crop_resize(v.frames[t], rect, 0, 256);
  const auto p = binarize(seg.segment(crop.patch, {t, cfg.width, cfg.height, rect}));
  EXPECT_EQ(p, crop_resize(truth->masks[t], rect, 0, 256).patch);
}

TEST(Oracles, CorruptionKinds) {
  const auto gt = rasterize_ellipse(64, 64, {40, 40}, 6, 10);
  EXPECT_GT(mask_area(corrupt(gt, {Corruption::Dilate, 1, {}, 0})), mask_area(gt));
  EXPECT_LT(mask_area(corrupt(gt, {Corruption::Erode, 1, {}, 0})), mask_area(gt));
  const auto blob = corrupt(gt, {Corruption::SpuriousBlob, 1, {10, 10}, 4});
  EXPECT_EQ(restrict_mask(blob, *mask_to_bbox(gt)), gt);
  EXPECT_GT(mask_area(blob), mask_area(gt));
}

TEST(Oracles, HashedConfidenceIsUniformish) {
  const auto c = hashed_confidence(9);
  int below = 0;
  for (std::size_t i = 0; i < 20000; ++i) {
    const double v = c(i);
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    below += v < 0.25;
  }
  EXPECT_NEAR(below / 20000.0, 0.25, 0.015);
  EXPECT_EQ(c(17), hashed_confidence(9)(17));
}
