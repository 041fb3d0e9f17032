#include <gtest/gtest.h>

#include <fstream>

#include "glottisgate/dataset.hpp"
#include "glottisgate/metrics.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace glottisgate;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::vector<FrameResult> sample_results() {
  std::vector<FrameResult> rs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    rs[i].frame_id = 10 + i;
    rs[i].mask = BinaryMask(8, 8);
  }
  rs[0].gate_status = GateStatus::Detected;
  rs[0].detection = Detection{{1, 2, 5, 6, 0.75}, 0.75};
  rs[0].active_box = BBox{1, 2, 5, 6, 0.75};
  rs[0].area_px2 = 7;
  rs[1].gate_status = GateStatus::Held;
  rs[1].active_box = BBox{1, 2, 5, 6, 0.75};
  rs[1].area_px2 = 3;
  rs[2].excluded = true;
  return rs;
}

}  // namespace

TEST(Dataset, FrameCsvRoundTrip) {
  TempDir dir;
  const auto rs = sample_results();
  write_frame_csv(dir / "f.csv", rs);
  std::ifstream in(dir / "f.csv");
  std::string header, line0, line1, line2;
  std::getline(in, header);
  std::getline(in, line0);
  std::getline(in, line1);
  std::getline(in, line2);
  EXPECT_EQ(header, "frame_id,area_px2,status,conf,x0,y0,x1,y1");
  EXPECT_EQ(line0, "10,7,Detected,0.75,1,2,5,6");
  EXPECT_EQ(line1, "11,3,Held,,1,2,5,6");
  EXPECT_EQ(line2, "12,0,Zeroed,,,,,");
  const auto back = read_frame_csv(dir / "f.csv");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].conf, 0.75);
  EXPECT_EQ(back[1].status, GateStatus::Held);
  EXPECT_FALSE(back[1].conf);
  EXPECT_EQ(back[1].box->x1, 5);
  EXPECT_FALSE(back[2].box);
  EXPECT_THROW(read_frame_csv(dir / "absent.csv"), MissingInput);
}

TEST(Dataset, GawCsvSkipsExcludedFrames) {
  TempDir dir;
  write_gaw_csv(dir / "g.csv", sample_results());
  const auto g = read_gaw_csv(dir / "g.csv");
  EXPECT_EQ(g.ids, (std::vector<std::size_t>{10, 11}));
  EXPECT_EQ(g.areas, (std::vector<double>{7, 3}));
  write_file(dir / "bad.csv", "frame_id,area_px2\n2,1\n1,1\n");
  EXPECT_THROW(read_gaw_csv(dir / "bad.csv"), InvalidInput);
  write_file(dir / "neg.csv", "frame_id,area_px2\n1,-1\n");
  EXPECT_THROW(read_gaw_csv(dir / "neg.csv"), InvalidInput);
}

TEST(Dataset, TruthRoundTrip) {
  SynthConfig cfg;
  cfg.width = cfg.height = 64;
  cfg.center = {32, 32};
  cfg.a_max = 6;
  cfg.b_max = 12;
  cfg.n_frames = 30;
  cfg.occlusions = {{5, 3}};
  const auto v = generate(cfg);
  TempDir dir;
  write_truth_csv(dir / "truth.csv", v.truth);
  std::filesystem::create_directories(dir / "masks");
  for (std::size_t i = 0; i < v.truth.size(); ++i) {
    write_mask(dir / "masks" / frame_file_name(i), v.truth.masks[i]);
  }
  const auto back = read_truth(dir / "truth.csv", dir / "masks");
  EXPECT_EQ(back.masks, v.truth.masks);
  EXPECT_EQ(back.areas, v.truth.areas);
  EXPECT_EQ(back.occluded, v.truth.occluded);
  ASSERT_EQ(back.boxes.size(), v.truth.boxes.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    ASSERT_EQ(back.boxes[i].has_value(), v.truth.boxes[i].has_value());
    if (back.boxes[i]) {
      EXPECT_EQ(back.boxes[i]->x0, v.truth.boxes[i]->x0);
    }
  }
  std::filesystem::remove(dir / "masks" / "7.png");
  EXPECT_THROW(read_truth(dir / "truth.csv", dir / "masks"), MissingInput);
}

TEST(Dataset, FramesLoadInIdOrder) {
  TempDir dir;
  std::filesystem::create_directories(dir / "frames");
  for (std::size_t id : {10u, 2u, 33u}) {
    write_frame(dir / "frames" / frame_file_name(id), Frame(4, 4, static_cast<std::uint8_t>(id)));
  }
  write_file(dir / "frames" / "notes.txt", "ignored");
  const auto s = load_frames(dir / "frames");
  EXPECT_EQ(s.ids, (std::vector<std::size_t>{2, 10, 33}));
  EXPECT_EQ(s.frames[2].at(0, 0), 33);
  write_frame(dir / "frames" / "x1.png", Frame(4, 4));
  EXPECT_THROW(load_frames(dir / "frames"), InvalidInput);
  EXPECT_THROW(load_frames(dir / "nothing"), MissingInput);
  std::filesystem::create_directories(dir / "empty");
  EXPECT_THROW(load_frames(dir / "empty"), MissingInput);
}

TEST(Dataset, RecordingMeta) {
  TempDir dir;
  write_recording_meta(dir / "meta.csv", {4000.0, "p07", ClinicalStatus::Pathological, Sex::F});
  const auto m = read_recording_meta(dir / "meta.csv");
  EXPECT_EQ(m.fps, 4000.0);
  EXPECT_EQ(m.patient_id, "p07");
  EXPECT_EQ(m.status, ClinicalStatus::Pathological);
  EXPECT_EQ(m.sex, Sex::F);
  write_file(dir / "nofps.csv", "fps,patient_id,status,sex\n,p1,healthy,M\n");
  EXPECT_FALSE(read_recording_meta(dir / "nofps.csv").fps);
  write_file(dir / "zero.csv", "fps\n0\n");
  EXPECT_THROW(read_recording_meta(dir / "zero.csv"), InvalidInput);
  write_file(dir / "two.csv", "fps\n1\n2\n");
  EXPECT_THROW(read_recording_meta(dir / "two.csv"), InvalidInput);
}

TEST(Dataset, CohortMeta) {
  TempDir dir;
  write_file(dir / "m.csv", "patient_id,status,sex\na,healthy,F\nb,pathological,M\nc,excluded,F\n");
  const auto m = read_cohort_meta(dir / "m.csv");
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("b").status, ClinicalStatus::Pathological);
  EXPECT_EQ(m.at("a").sex, Sex::F);
  write_file(dir / "dup.csv", "patient_id,status,sex\na,healthy,F\na,healthy,F\n");
  EXPECT_THROW(read_cohort_meta(dir / "dup.csv"), InvalidInput);
}

TEST(Dataset, FeaturesJsonRoundTrip) {
  FeatureVector f;
  f.area_mean = 70.04867256637168;
  f.area_std = 1.0 / 3.0;
  f.area_range = 100;
  f.open_quotient = 0.45;
  f.f0 = 199.20318725099602;
  f.periodicity = 0.9999999999999998;
  f.cv = 0.1;
  TempDir dir;
  write_json(dir / "p.json", features_to_json(f));
  const auto g = read_features_json(dir / "p.json");
  for (std::size_t i = 0; i < FeatureVector::kNames.size(); ++i) EXPECT_EQ(g.get(i), f.get(i));
  const auto j = features_to_json(f);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>(FeatureVector::kNames.begin(), FeatureVector::kNames.end())));
  write_file(dir / "bad.json", R"({"area_mean": 1})");
  EXPECT_THROW(read_features_json(dir / "bad.json"), InvalidInput);
  write_file(dir / "junk.json", "{");
  EXPECT_THROW(read_features_json(dir / "junk.json"), InvalidInput);
}

TEST(SweepProvider, RegateMatchesLiveRunForEveryStatelessPipeline) {
  SynthConfig cfg;
  cfg.width = cfg.height = 96;
  cfg.center = {48, 48};
  cfg.a_max = 8;
  cfg.b_max = 20;
  cfg.n_frames = 60;
  cfg.noise_sigma = 4;
  cfg.occlusions = {{20, 6}};
  const auto v = generate(cfg);
  auto truth = std::make_shared<SynthTruth>(v.truth);
  OracleDetector det(truth, {3, 4, 40}, hashed_confidence(5));
  OracleSegmenter seg(truth, {Corruption::SpuriousBlob, 1, {10, 10}, 5});
  std::vector<std::vector<Detection>> dets;
  for (std::size_t i = 0; i < v.frames.size(); ++i) dets.push_back(det.detect(v.frames[i], i));

  for (auto kind : {PipelineKind::SegmenterOnly, PipelineKind::LocalizerSegmenter,
                    PipelineKind::LocalizerCropSegmenter, PipelineKind::Otsu}) {
    RunConfig rc;
    rc.pipeline = kind;
    rc.crop_target = 64;
    const auto live = process_video(rc, {&det, &seg}, v.frames);
    const auto provider = sweep_mask_provider(rc, v.frames, &seg);
    const auto re = regate(rc, cfg.width, cfg.height, dets, provider);
    ASSERT_EQ(live.size(), re.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      EXPECT_EQ(live[i].mask, re[i].mask) << to_string(kind) << " frame " << i;
      EXPECT_EQ(live[i].gate_status, re[i].gate_status);
    }
  }
  RunConfig motion;
  motion.pipeline = PipelineKind::Motion;
  EXPECT_THROW(sweep_mask_provider(motion, v.frames, nullptr), InvalidConfig);
  RunConfig ls;
  EXPECT_THROW(sweep_mask_provider(ls, v.frames, nullptr), InvalidConfig);
}
