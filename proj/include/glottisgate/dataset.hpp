#pragma once

// On-disk recording layout and the CSV/JSON record formats exchanged between
// CLI commands. A recording directory holds `frames/`, optional `masks/`,
// `meta.csv` and, for synthetic data, `truth.csv`.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glottisgate/backends.hpp"
#include "glottisgate/core.hpp"
#include "glottisgate/csv.hpp"
#include "glottisgate/error.hpp"
#include "glottisgate/gaw.hpp"
#include "glottisgate/image_io.hpp"
#include "glottisgate/pipelines.hpp"
#include "glottisgate/stats.hpp"
#include "glottisgate/synth.hpp"

namespace glottisgate {

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Image files of a directory keyed by numeric stem. Files whose stem is not a
/// number are an error, so a stray "frame_a.png" is never silently skipped.
inline std::map<std::size_t, std::filesystem::path> list_numbered_images(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw MissingInput("no such directory: " + dir.string());
  std::map<std::size_t, std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file() || !is_image_file(e.path())) continue;
    const auto id = numeric_stem(e.path());
    if (!id) throw InvalidInput(e.path().string() + ": image name must be <frame_id>.png");
    if (!out.emplace(*id, e.path()).second) {
      throw InvalidInput(dir.string() + ": two images for frame " + std::to_string(*id));
    }
  }
  if (out.empty()) throw MissingInput(dir.string() + ": no frames");
  return out;
}

struct FrameSequence {
  std::vector<std::size_t> ids;  // ascending
  std::vector<Frame> frames;
};

inline FrameSequence load_frames(const std::filesystem::path& dir) {
  FrameSequence s;
  for (const auto& [id, path] : list_numbered_images(dir)) {
    s.ids.push_back(id);
    s.frames.push_back(read_frame(path));
  }
  return s;
}

/// Masks for exactly `ids`; a missing file is an error.
inline std::vector<BinaryMask> load_masks(const std::filesystem::path& dir,
                                          std::span<const std::size_t> ids) {
  const auto files = list_numbered_images(dir);
  std::vector<BinaryMask> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    const auto it = files.find(id);
    if (it == files.end()) {
      throw MissingInput(dir.string() + ": no mask for frame " + std::to_string(id));
    }
    out.push_back(read_mask(it->second));
  }
  return out;
}

inline std::string frame_file_name(std::size_t id) { return std::to_string(id) + ".png"; }

// ---------------------------------------------------------------------------
// Per-frame results: frame_id,area_px2,status,conf,x0,y0,x1,y1
// conf is the top-1 detection at or above tau (empty when none); the box is
// the active (gated) box (empty when zeroed or ungated).

struct FrameRecord {
  std::size_t frame_id = 0;
  std::int64_t area_px2 = 0;
  GateStatus status = GateStatus::Zeroed;
  std::optional<double> conf;
  std::optional<BBox> box;
};

inline constexpr const char* kFrameCsvHeader = "frame_id,area_px2,status,conf,x0,y0,x1,y1";

inline FrameRecord to_record(const FrameResult& r) {
  FrameRecord rec{r.frame_id, r.area_px2, r.gate_status, std::nullopt, r.active_box};
  if (r.detection) rec.conf = r.detection->confidence;
  return rec;
}

inline void write_frame_csv(const std::filesystem::path& path, std::span<const FrameResult> results) {
  auto out = detail::open_for_write(path);
  out << kFrameCsvHeader << '\n';
  for (const auto& r : results) {
    const auto rec = to_record(r);
    out << rec.frame_id << ',' << rec.area_px2 << ',' << to_string(rec.status) << ',';
    if (rec.conf) out << csv::format(*rec.conf);
    if (rec.box) {
      out << ',' << rec.box->x0 << ',' << rec.box->y0 << ',' << rec.box->x1 << ',' << rec.box->y1;
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

inline std::vector<FrameRecord> read_frame_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingInput("no such file: " + path.string());
  const auto t = csv::read(path);
  const std::size_t c_id = t.column("frame_id"), c_area = t.column("area_px2"),
                    c_status = t.column("status"), c_conf = t.column("conf"),
                    c_x0 = t.column("x0"), c_y0 = t.column("y0"), c_x1 = t.column("x1"),
                    c_y1 = t.column("y1");
  std::vector<FrameRecord> out;
  for (const auto& row : t.rows) {
    FrameRecord r;
    r.frame_id = csv::parse_number<std::size_t>(row[c_id]);
    r.area_px2 = csv::parse_number<std::int64_t>(row[c_area]);
    r.status = parse_gate_status(csv::trim(row[c_status]));
    if (!csv::trim(row[c_conf]).empty()) r.conf = csv::parse_number<double>(row[c_conf]);
    if (!csv::trim(row[c_x0]).empty()) {
      r.box = BBox{csv::parse_number<int>(row[c_x0]), csv::parse_number<int>(row[c_y0]),
                   csv::parse_number<int>(row[c_x1]), csv::parse_number<int>(row[c_y1]), 1.0};
    }
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// GAW: frame_id,area_px2 over the analyzed (non-excluded) frames.

struct GawRecord {
  std::vector<std::size_t> ids;
  std::vector<double> areas;
};

inline void write_gaw_csv(const std::filesystem::path& path, std::span<const FrameResult> results) {
  auto out = detail::open_for_write(path);
  out << "frame_id,area_px2\n";
  for (const auto& r : results) {
    if (!r.excluded) out << r.frame_id << ',' << r.area_px2 << '\n';
  }
}

inline GawRecord read_gaw_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingInput("no such file: " + path.string());
  const auto t = csv::read(path);
  const std::size_t c_id = t.column("frame_id"), c_area = t.column("area_px2");
  GawRecord g;
  for (const auto& row : t.rows) {
    g.ids.push_back(csv::parse_number<std::size_t>(row[c_id]));
    g.areas.push_back(csv::parse_number<double>(row[c_area]));
    if (g.areas.back() < 0) throw InvalidInput(path.string() + ": negative area");
  }
  if (!std::ranges::is_sorted(g.ids) || std::ranges::adjacent_find(g.ids) != g.ids.end()) {
    throw InvalidInput(path.string() + ": frame ids must be strictly increasing");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Synthetic truth: frame_id,area,occluded,x0,y0,x1,y1 plus masks/<id>.png.

inline void write_truth_csv(const std::filesystem::path& path, const SynthTruth& truth) {
  auto out = detail::open_for_write(path);
  out << "frame_id,area,occluded,x0,y0,x1,y1\n";
  for (std::size_t t = 0; t < truth.size(); ++t) {
    out << t << ',' << truth.areas[t] << ',' << (truth.occluded[t] ? 1 : 0);
    if (const auto& b = truth.boxes[t]) {
      out << ',' << b->x0 << ',' << b->y0 << ',' << b->x1 << ',' << b->y1;
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

/// Rebuilds oracle truth from a recording's truth CSV and mask directory.
/// Frame ids must be 0..N-1, as written by `synth`.
inline SynthTruth read_truth(const std::filesystem::path& truth_csv,
                             const std::filesystem::path& mask_dir) {
  if (!std::filesystem::exists(truth_csv)) throw MissingInput("no such file: " + truth_csv.string());
  const auto t = csv::read(truth_csv);
  const std::size_t c_id = t.column("frame_id"), c_area = t.column("area"),
                    c_occ = t.column("occluded"), c_x0 = t.column("x0"), c_y0 = t.column("y0"),
                    c_x1 = t.column("x1"), c_y1 = t.column("y1");
  SynthTruth truth;
  std::vector<std::size_t> ids;
  for (const auto& row : t.rows) {
    const auto id = csv::parse_number<std::size_t>(row[c_id]);
    if (id != ids.size()) throw InvalidInput(truth_csv.string() + ": frame ids must be 0..N-1");
    ids.push_back(id);
    truth.areas.push_back(csv::parse_number<std::int64_t>(row[c_area]));
    truth.occluded.push_back(csv::parse_number<int>(row[c_occ]) != 0);
    if (csv::trim(row[c_x0]).empty()) {
      truth.boxes.push_back(std::nullopt);
    } else {
      truth.boxes.push_back(BBox{csv::parse_number<int>(row[c_x0]), csv::parse_number<int>(row[c_y0]),
                                 csv::parse_number<int>(row[c_x1]), csv::parse_number<int>(row[c_y1]),
                                 1.0});
    }
  }
  truth.masks = load_masks(mask_dir, ids);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (mask_area(truth.masks[i]) != truth.areas[i]) {
      throw InvalidInput(truth_csv.string() + ": area of frame " + std::to_string(i) +
                         " disagrees with its mask");
    }
  }
  return truth;
}

// ---------------------------------------------------------------------------
// Recording metadata: one row of fps,patient_id,status,sex (any may be empty).

struct RecordingMeta {
  std::optional<double> fps;
  std::string patient_id;
  ClinicalStatus status = ClinicalStatus::Excluded;
  Sex sex = Sex::Unknown;
};

inline void write_recording_meta(const std::filesystem::path& path, const RecordingMeta& m) {
  auto out = detail::open_for_write(path);
  out << "fps,patient_id,status,sex\n";
  if (m.fps) out << csv::format(*m.fps);
  out << ',' << m.patient_id << ',' << to_string(m.status) << ',' << to_string(m.sex) << '\n';
}

inline RecordingMeta read_recording_meta(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingInput("no such file: " + path.string());
  const auto t = csv::read(path);
  if (t.rows.size() != 1) throw InvalidInput(path.string() + ": expected exactly one data row");
  const auto& row = t.rows.front();
  RecordingMeta m;
  if (t.has_column("fps") && !csv::trim(row[t.column("fps")]).empty()) {
    m.fps = csv::parse_number<double>(row[t.column("fps")]);
    if (!(*m.fps > 0.0)) throw InvalidInput(path.string() + ": fps must be positive");
  }
  if (t.has_column("patient_id")) m.patient_id = std::string(csv::trim(row[t.column("patient_id")]));
  if (t.has_column("status") && !csv::trim(row[t.column("status")]).empty()) {
    m.status = parse_status(csv::trim(row[t.column("status")]));
  }
  if (t.has_column("sex") && !csv::trim(row[t.column("sex")]).empty()) {
    m.sex = parse_sex(csv::trim(row[t.column("sex")]));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Cohort metadata: patient_id,status,sex.

struct CohortEntry {
  ClinicalStatus status = ClinicalStatus::Excluded;
  Sex sex = Sex::Unknown;
};

inline std::map<std::string, CohortEntry> read_cohort_meta(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingInput("no such file: " + path.string());
  const auto t = csv::read(path);
  const std::size_t c_id = t.column("patient_id"), c_status = t.column("status"),
                    c_sex = t.column("sex");
  std::map<std::string, CohortEntry> out;
  for (const auto& row : t.rows) {
    const std::string id(csv::trim(row[c_id]));
    if (id.empty()) throw InvalidInput(path.string() + ": empty patient_id");
    const CohortEntry e{parse_status(csv::trim(row[c_status])), parse_sex(csv::trim(row[c_sex]))};
    if (!out.emplace(id, e).second) throw InvalidInput(path.string() + ": duplicate patient " + id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features JSON: an object keyed by the seven feature names.

inline nlohmann::ordered_json features_to_json(const FeatureVector& f) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < FeatureVector::kNames.size(); ++i) j[FeatureVector::kNames[i]] = f.get(i);
  return j;
}

inline FeatureVector features_from_json(const nlohmann::json& j, const std::string& origin) {
  if (!j.is_object()) throw InvalidInput(origin + ": features must be a JSON object");
  FeatureVector f;
  for (std::size_t i = 0; i < FeatureVector::kNames.size(); ++i) {
    const auto it = j.find(FeatureVector::kNames[i]);
    if (it == j.end() || !it->is_number()) {
      throw InvalidInput(origin + ": missing numeric feature '" + FeatureVector::kNames[i] + "'");
    }
    f.set(i, it->get<double>());
  }
  return f;
}

inline FeatureVector read_features_json(const std::filesystem::path& path) {
  const auto text = detail::read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
  return features_from_json(j, path.string());
}

/// Two-space indented JSON with a trailing newline.
inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  auto out = detail::open_for_write(path);
  out << j.dump(2) << '\n';
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = detail::open_for_write(path);
  out << text;
}

}  // namespace glottisgate
