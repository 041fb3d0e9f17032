#include <gtest/gtest.h>

#include "glottisgate/core.hpp"
#include "glottisgate/error.hpp"
#include "oracles.hpp"

using namespace glottisgate;

namespace {

BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m(w, h, std::uint8_t{0});
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.at(x, y) = 1;
  return m;
}

}  // namespace

TEST(Raster, RejectsZeroSize) {
  EXPECT_THROW(Frame(0, 4), InvalidInput);
  EXPECT_THROW(BinaryMask(4, 0), InvalidInput);
  EXPECT_THROW(Frame(2, 2, std::vector<std::uint8_t>(3)), InvalidInput);
}

TEST(Letterbox, WideFrame) {
  const auto t = letterbox_transform(512, 256, 256);
  EXPECT_DOUBLE_EQ(t.scale, 0.5);
  EXPECT_EQ(t.scaled_width, 256);
  EXPECT_EQ(t.scaled_height, 128);
  EXPECT_EQ(t.pad_left, 0);
  EXPECT_EQ(t.pad_top, 64);
  EXPECT_EQ(256 - t.scaled_height - t.pad_top, 64);
}

TEST(Letterbox, SquareIsIdentity) {
  Frame f(256, 256);
  oracle::Gen g(3);
  for (auto& p : f.data()) p = static_cast<std::uint8_t>(g.uniform_int(0, 255));
  const auto lb = letterbox(f, 256);
  EXPECT_DOUBLE_EQ(lb.transform.scale, 1.0);
  EXPECT_EQ(lb.transform.pad_left, 0);
  EXPECT_EQ(lb.transform.pad_top, 0);
  EXPECT_EQ(lb.image, f);
}

TEST(Letterbox, FourByThree) {
  const auto t = letterbox_transform(400, 300, 256);
  EXPECT_DOUBLE_EQ(t.scale, 0.64);
  EXPECT_EQ(t.scaled_width, 256);
  EXPECT_EQ(t.scaled_height, 192);
  EXPECT_EQ(t.pad_top, 32);
  EXPECT_EQ(256 - 192 - t.pad_top, 32);
}

TEST(Letterbox, OddPadGoesBottomRight) {
  const auto t = letterbox_transform(100, 99, 100);
  EXPECT_EQ(t.scaled_height, 99);
  EXPECT_EQ(t.pad_top, 0);
  const auto t2 = letterbox_transform(10, 7, 10);
  EXPECT_EQ(t2.pad_top, 1);  // 3 pad rows: 1 top, 2 bottom
}

TEST(Letterbox, ZeroSizedInputThrows) {
  EXPECT_THROW(letterbox_transform(0, 10, 256), InvalidInput);
  EXPECT_THROW(letterbox_transform(10, 10, 0), InvalidInput);
}

TEST(Letterbox, PaddingIsZeroAndMaskStaysBinary) {
  Frame f(40, 20, std::uint8_t{200});
  const auto lb = letterbox(f, 64);
  EXPECT_EQ(lb.image.at(0, 0), 0);
  EXPECT_EQ(lb.image.at(32, 32), 200);
  oracle::Gen g(5);
  const auto m = letterbox(g.mask(40, 20, 0.4), 64);
  for (auto v : m.image.data()) EXPECT_TRUE(v == 0 || v == 1);
  EXPECT_EQ(m.transform.pad_top, lb.transform.pad_top);
}

TEST(Letterbox, ForwardInverseRoundTrip) {
  oracle::Gen g(11);
  for (int i = 0; i < 200; ++i) {
    const int w = g.uniform_int(1, 800), h = g.uniform_int(1, 800);
    const auto t = letterbox_transform(w, h, g.uniform_int(16, 512));
    const Point2 p{g.uniform(0, w), g.uniform(0, h)};
    const auto q = t.inverse(t.forward(p));
    EXPECT_NEAR(q.x, p.x, 1e-9);
    EXPECT_NEAR(q.y, p.y, 1e-9);
    EXPECT_LE(t.scaled_width + t.pad_left, t.target);
    EXPECT_LE(t.scaled_height + t.pad_top, t.target);
    EXPECT_TRUE(t.scaled_width == t.target || t.scaled_height == t.target);
  }
}

TEST(MaskToBbox, Examples) {
  const auto m = rect_mask(64, 64, 10, 20, 31, 41);
  EXPECT_EQ(mask_to_bbox(m), (BBox{10, 20, 31, 41, 1.0}));
  EXPECT_FALSE(mask_to_bbox(BinaryMask(8, 8, std::uint8_t{0})));
  BinaryMask one(16, 16, std::uint8_t{0});
  one.at(5, 7) = 1;
  EXPECT_EQ(mask_to_bbox(one), (BBox{5, 7, 6, 8, 1.0}));
}

TEST(MaskToBbox, TightProperty) {
  oracle::Gen g(21);
  for (int i = 0; i < 200; ++i) {
    const auto m = g.blobs(g.uniform_int(1, 40), g.uniform_int(1, 40), g.uniform_int(1, 3));
    const auto b = mask_to_bbox(m);
    ASSERT_TRUE(b);
    EXPECT_EQ(mask_area(restrict_mask(m, *b)), mask_area(m));
    // Every side touches a set pixel.
    auto row_has = [&](int y) { for (int x = 0; x < m.width(); ++x) if (m.at(x, y)) return true; return false; };
    auto col_has = [&](int x) { for (int y = 0; y < m.height(); ++y) if (m.at(x, y)) return true; return false; };
    EXPECT_TRUE(row_has(b->y0) && row_has(b->y1 - 1) && col_has(b->x0) && col_has(b->x1 - 1));
  }
}

TEST(LabelRecord, Examples) {
  const auto a = bbox_to_label_record({0, 0, 256, 256, 1.0}, 256, 256);
  EXPECT_EQ(a.to_line(), "0 0.5 0.5 1 1");
  const auto b = bbox_to_label_record({64, 64, 192, 192, 1.0}, 256, 256);
  EXPECT_EQ(b.to_line(), "0 0.5 0.5 0.5 0.5");
  const auto c = bbox_to_label_record({10, 20, 31, 41, 1.0}, 256, 256);
  EXPECT_DOUBLE_EQ(c.xc, 0.080078125);
  EXPECT_DOUBLE_EQ(c.yc, 0.119140625);
  EXPECT_DOUBLE_EQ(c.w, 0.08203125);
  EXPECT_DOUBLE_EQ(c.h, 0.08203125);
  EXPECT_EQ(c.to_line(), "0 0.080078125 0.119140625 0.08203125 0.08203125");
  EXPECT_THROW(bbox_to_label_record({0, 0, 257, 10, 1.0}, 256, 256), InvalidInput);
}

TEST(CropResize, Examples) {
  Frame f(256, 256, std::uint8_t{7});
  const auto c = crop_resize(f, {100, 100, 140, 140, 1.0});
  EXPECT_EQ(c.crop_rect, (BBox{92, 92, 148, 148, 1.0}));
  EXPECT_EQ(c.patch.width(), 256);
  EXPECT_EQ(c.patch.height(), 256);
  EXPECT_EQ(crop_resize(f, {0, 0, 10, 10, 1.0}).crop_rect, (BBox{0, 0, 18, 18, 1.0}));

  oracle::Gen g(4);
  Frame r(256, 256);
  for (auto& p : r.data()) p = static_cast<std::uint8_t>(g.uniform_int(0, 255));
  EXPECT_EQ(crop_resize(r, {0, 0, 256, 256, 1.0}, 0, 256).patch, r);
}

TEST(PasteBack, Examples) {
  BinaryMask all(256, 256, std::uint8_t{1});
  const BBox rect{92, 92, 148, 148, 1.0};
  EXPECT_EQ(paste_back(all, rect, 256, 256), rect_mask(256, 256, 92, 92, 148, 148));
  EXPECT_TRUE(mask_is_empty(paste_back(BinaryMask(256, 256, std::uint8_t{0}), rect, 256, 256)));
  EXPECT_THROW(paste_back(all, {200, 200, 300, 300, 1.0}, 256, 256), InvalidInput);
}

TEST(PasteBack, FullFrameRoundTripPreservesArea) {
  oracle::Gen g(8);
  int checked = 0;
  while (checked < 100) {
    const int w = g.uniform_int(64, 200), h = g.uniform_int(64, 200);
    const auto m = g.blobs(w, h, g.uniform_int(1, 3));
    if (mask_area(m) < 100) continue;
    const BBox full = full_frame_box(w, h);
    const auto crop = crop_resize(m, full, 0, 256);
    const auto back = paste_back(crop.patch, crop.crop_rect, w, h);
    const double a0 = static_cast<double>(mask_area(m));
    EXPECT_NEAR(static_cast<double>(mask_area(back)), a0, 0.02 * a0);
    ++checked;
  }
}

TEST(RestrictMask, Examples) {
  BinaryMask m(32, 32, std::uint8_t{0});
  oracle::Gen g(1);
  for (auto& p : m.data()) p = g.coin() ? 1 : 0;
  EXPECT_EQ(restrict_mask(m, full_frame_box(32, 32)), m);

  const auto sq = rect_mask(32, 32, 0, 0, 11, 11);
  EXPECT_EQ(restrict_mask(sq, {5, 5, 20, 20, 1.0}), rect_mask(32, 32, 5, 5, 11, 11));
  EXPECT_TRUE(mask_is_empty(restrict_mask(sq, {20, 20, 30, 30, 1.0})));
}

TEST(RestrictMask, SubsetAndIdempotent) {
  oracle::Gen g(2);
  for (int i = 0; i < 200; ++i) {
    const int w = g.uniform_int(1, 40), h = g.uniform_int(1, 40);
    const auto m = g.mask(w, h, 0.5);
    const auto b = g.box(w, h);
    const auto r = restrict_mask(m, b);
    EXPECT_EQ(restrict_mask(r, b), r);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) EXPECT_EQ(r.at(x, y) != 0, m.at(x, y) != 0 && b.contains(x, y));
  }
}

TEST(Confusion, Examples) {
  oracle::Gen g(9);
  BinaryMask a(256, 256, std::uint8_t{0});
  int placed = 0;
  while (placed < 100) {
    auto& p = a.at(g.uniform_int(0, 255), g.uniform_int(0, 255));
    if (!p) {
      p = 1;
      ++placed;
    }
  }
  EXPECT_EQ(confusion_counts(a, a), (ConfusionCounts{100, 0, 0, 65436}));

  const auto p = rect_mask(4, 4, 0, 0, 2, 2);
  const auto gt = rect_mask(4, 4, 1, 0, 3, 2);
  EXPECT_EQ(confusion_counts(p, gt), (ConfusionCounts{2, 2, 2, 10}));

  BinaryMask e(5, 3, std::uint8_t{0});
  EXPECT_EQ(confusion_counts(e, e), (ConfusionCounts{0, 0, 0, 15}));
  EXPECT_THROW(confusion_counts(e, BinaryMask(3, 5)), InvalidInput);
}

TEST(Confusion, CountsPartitionFrame) {
  oracle::Gen g(10);
  for (int i = 0; i < 200; ++i) {
    const int w = g.uniform_int(1, 30), h = g.uniform_int(1, 30);
    const auto p = g.mask(w, h, g.uniform(0, 1));
    const auto t = g.mask(w, h, g.uniform(0, 1));
    const auto c = confusion_counts(p, t);
    EXPECT_EQ(c.total(), static_cast<std::int64_t>(w) * h);
    EXPECT_EQ(c.tp + c.fp, mask_area(p));
    EXPECT_EQ(c.tp + c.fn, mask_area(t));
  }
}

TEST(Binarize, ThresholdIsInclusive) {
  ProbabilityMap p(3, 1);
  p.at(0, 0) = 0.49999f;
  p.at(1, 0) = 0.5f;
  p.at(2, 0) = 1.0f;
  const auto m = binarize(p);
  EXPECT_EQ(m.at(0, 0), 0);
  EXPECT_EQ(m.at(1, 0), 1);
  EXPECT_EQ(m.at(2, 0), 1);
}

TEST(Resize, NearestKeepsValuesBilinearConstant) {
  Frame f(13, 7, std::uint8_t{99});
  const auto r = resize_bilinear(f, 50, 31);
  for (auto v : r.data()) EXPECT_EQ(v, 99);
  oracle::Gen g(12);
  const auto m = g.mask(17, 9, 0.5);
  const auto up = resize_nearest(m, 34, 18);
  for (int y = 0; y < 18; ++y)
    for (int x = 0; x < 34; ++x) EXPECT_EQ(up.at(x, y), m.at(x / 2, y / 2));
}
