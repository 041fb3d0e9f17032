// glottisgate command-line driver. Every command writes its outputs plus one
// manifest.json into --out; all outputs except the manifest timestamp are a
// pure function of the inputs and flags.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "glottisgate/backends.hpp"
#include "glottisgate/core.hpp"
#include "glottisgate/dataset.hpp"
#include "glottisgate/error.hpp"
#include "glottisgate/gate.hpp"
#include "glottisgate/gaw.hpp"
#include "glottisgate/image_io.hpp"
#include "glottisgate/metrics.hpp"
#include "glottisgate/model_backend.hpp"
#include "glottisgate/montage.hpp"
#include "glottisgate/pipelines.hpp"
#include "glottisgate/stats.hpp"
#include "glottisgate/svg.hpp"
#include "glottisgate/synth.hpp"

#ifndef GLOTTISGATE_VERSION
#define GLOTTISGATE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace glottisgate;

namespace {

constexpr double kDefaultFps = 4000.0;

// ---------------------------------------------------------------------------
// Hashing and manifest

std::string to_hex(const unsigned char* p, unsigned n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * n);
  for (unsigned i = 0; i < n; ++i) {
    s.push_back(kDigits[p[i] >> 4]);
    s.push_back(kDigits[p[i] & 15]);
  }
  return s;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: init failed");
    }
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  void update(const std::string& s) { update(s.data(), s.size()); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned n = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &n);
    return to_hex(md, n);
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string hash_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput("cannot open " + p.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  }
  std::ranges::sort(out, [](const fs::path& a, const fs::path& b) {
    return a.generic_string() < b.generic_string();
  });
  return out;
}

/// Files hash directly; a directory hashes the sorted list of
/// (relative path, file hash) pairs.
std::string hash_path(const fs::path& p) {
  if (fs::is_regular_file(p)) return hash_file(p);
  if (!fs::is_directory(p)) throw MissingInput("no such file or directory: " + p.string());
  Sha256 h;
  for (const auto& rel : files_under(p)) {
    h.update(rel.generic_string());
    h.update("\0", 1);
    h.update(hash_file(p / rel));
    h.update("\n", 1);
  }
  return h.hex();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json conventions() {
  json c = json::object();
  c["empty_frame_scores"] = "frames where prediction and ground truth are both empty score DSC = IoU = 1";
  c["pass_rate"] = "fraction of evaluated frames with DSC >= 0.5";
  c["det_recall"] = "raw top-1 detector firings at or above tau (before hold) over evaluated frames; 1 for ungated runs";
  c["area_std"] = "population standard deviation over open frames (area > 0)";
  c["group_std"] = "sample standard deviation (n - 1) in comparison reports";
  c["open_quotient"] = "fraction of frames with area > 0.1 * mean open-frame area";
  c["masks"] = "PNG foreground is >= 128 on read; written as 0/255";
  c["frame_ids"] = "numeric file stems, processed in ascending order";
  c["gaw"] = "lists analyzed frames only; motion initialization frames are omitted";
  c["fisher"] = "two-sided, summing tables no more probable than the observed one";
  return c;
}

class Manifest {
 public:
  Manifest(std::string command, fs::path out) : command_(std::move(command)), out_(std::move(out)) {}

  json config = json::object();

  void input(const std::string& role, const fs::path& p) {
    json entry = json::object();
    entry["role"] = role;
    entry["path"] = p.generic_string();
    entry["sha256"] = hash_path(p);
    inputs_.push_back(std::move(entry));
  }

  void write() const {
    json m = json::object();
    m["tool"] = "glottisgate";
    m["version"] = GLOTTISGATE_VERSION;
    m["command"] = command_;
    m["config"] = config;
    m["inputs"] = inputs_;
    json outputs = json::array();
    for (const auto& rel : files_under(out_)) {
      if (rel == "manifest.json") continue;
      outputs.push_back(rel.generic_string());
    }
    m["outputs"] = outputs;
    m["conventions"] = conventions();
    m["timestamp"] = utc_timestamp();
    write_json(out_ / "manifest.json", m);
  }

 private:
  std::string command_;
  fs::path out_;
  json inputs_ = json::array();
};

json read_manifest_config(const fs::path& dir) {
  const fs::path p = dir / "manifest.json";
  if (!fs::exists(p)) return json::object();
  try {
    std::ifstream in(p);
    const auto j = json::parse(in);
    return j.contains("config") ? j["config"] : json::object();
  } catch (const json::exception& e) {
    throw InvalidInput(p.string() + ": " + e.what());
  }
}

void prepare_out(const std::string& out) {
  if (out.empty()) throw InvalidConfig("--out is required");
  fs::create_directories(out);
  if (fs::exists(fs::path(out) / "manifest.json")) fs::remove(fs::path(out) / "manifest.json");
}

// ---------------------------------------------------------------------------
// Flag parsing helpers

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto t = csv::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

template <typename T>
T parse_flag(const std::string& flag, std::string_view value) {
  try {
    return csv::parse_number<T>(value);
  } catch (const InvalidInput&) {
    throw InvalidConfig(flag + ": not a number: '" + std::string(value) + "'");
  }
}

std::size_t parse_hold(const std::string& s) {
  if (s == "inf") return kHoldForever;
  return std::max<std::size_t>(parse_flag<std::size_t>("--hold-frames", s), 1);
}

/// "0..20,inf" -> 0,1,...,20,inf.
std::vector<std::size_t> parse_holds(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    if (item == "inf") {
      out.push_back(kHoldForever);
    } else if (const auto dots = item.find(".."); dots != std::string::npos) {
      const auto lo = parse_flag<std::size_t>("--holds", item.substr(0, dots));
      const auto hi = parse_flag<std::size_t>("--holds", item.substr(dots + 2));
      if (hi < lo) throw InvalidConfig("--holds: empty range " + item);
      for (std::size_t h = lo; h <= hi; ++h) out.push_back(h);
    } else {
      out.push_back(parse_flag<std::size_t>("--holds", item));
    }
  }
  if (out.empty()) throw InvalidConfig("--holds: no values");
  return out;
}

std::vector<double> parse_taus(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    const double t = parse_flag<double>("--taus", item);
    if (!(t >= 0.0)) throw InvalidConfig("--taus: values must be >= 0");
    out.push_back(t);
  }
  if (out.empty()) throw InvalidConfig("--taus: no values");
  return out;
}

/// "3,7-9" -> {3,7,8,9}.
std::set<std::size_t> parse_frame_set(const std::string& s) {
  std::set<std::size_t> out;
  for (const auto& item : split_list(s)) {
    if (const auto dash = item.find('-'); dash != std::string::npos) {
      const auto lo = parse_flag<std::size_t>("--oracle-misses", item.substr(0, dash));
      const auto hi = parse_flag<std::size_t>("--oracle-misses", item.substr(dash + 1));
      if (hi < lo) throw InvalidConfig("--oracle-misses: empty range " + item);
      for (std::size_t f = lo; f <= hi; ++f) out.insert(f);
    } else {
      out.insert(parse_flag<std::size_t>("--oracle-misses", item));
    }
  }
  return out;
}

CorruptionConfig parse_corruption(const std::string& s) {
  CorruptionConfig c;
  if (s.empty() || s == "none") return c;
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (kind == "dilate" || kind == "erode") {
    c.kind = kind == "dilate" ? Corruption::Dilate : Corruption::Erode;
    c.k = arg.empty() ? 1 : parse_flag<int>("--oracle-corruption", arg);
    if (c.k < 1) throw InvalidConfig("--oracle-corruption: radius must be >= 1");
    return c;
  }
  if (kind == "blob") {
    const auto parts = split_list(arg);
    if (parts.size() != 3) throw InvalidConfig("--oracle-corruption: blob:X,Y,R");
    c.kind = Corruption::SpuriousBlob;
    c.blob_center = {parse_flag<double>("--oracle-corruption", parts[0]),
                     parse_flag<double>("--oracle-corruption", parts[1])};
    c.blob_radius = parse_flag<double>("--oracle-corruption", parts[2]);
    return c;
  }
  throw InvalidConfig("--oracle-corruption: expected none, dilate:K, erode:K or blob:X,Y,R");
}

std::function<double(std::size_t)> parse_confidence(const std::string& s, std::uint64_t seed) {
  if (s == "hashed") return hashed_confidence(seed);
  const double c = parse_flag<double>("--oracle-confidence", s);
  if (!(c >= 0.0 && c <= 1.0)) throw InvalidConfig("--oracle-confidence must be in [0,1] or 'hashed'");
  return constant_confidence(c);
}

// ---------------------------------------------------------------------------
// Recordings and backends

struct Recording {
  std::string name;
  fs::path dir;  // empty when only --frames was given
  fs::path frames_dir;
  double fps = kDefaultFps;
  FrameSequence seq;
};

struct InputOptions {
  std::vector<std::string> datasets;
  std::string frames;
  double fps = 0.0;  // <= 0: from meta.csv or the default
};

std::vector<Recording> resolve_recordings(const InputOptions& in) {
  std::vector<Recording> recs;
  if (!in.frames.empty()) {
    if (!in.datasets.empty()) throw InvalidConfig("give either --frames or --dataset, not both");
    Recording r;
    r.frames_dir = in.frames;
    r.name = fs::path(in.frames).lexically_normal().filename().string();
    recs.push_back(std::move(r));
  }
  for (const auto& d : in.datasets) {
    Recording r;
    r.dir = d;
    r.frames_dir = r.dir / "frames";
    r.name = fs::path(d).lexically_normal().filename().string();
    if (r.name.empty()) r.name = fs::path(d).lexically_normal().parent_path().filename().string();
    recs.push_back(std::move(r));
  }
  if (recs.empty()) throw InvalidConfig("no input: give --frames DIR or --dataset DIR");
  std::set<std::string> names;
  for (const auto& r : recs) {
    if (!names.insert(r.name).second) {
      throw InvalidConfig("two recordings share the directory name '" + r.name + "'");
    }
  }
  for (auto& r : recs) {
    if (!fs::is_directory(r.frames_dir)) throw MissingInput("no such directory: " + r.frames_dir.string());
    std::optional<double> meta_fps;
    if (!r.dir.empty() && fs::exists(r.dir / "meta.csv")) meta_fps = read_recording_meta(r.dir / "meta.csv").fps;
    if (in.fps > 0.0) {
      r.fps = in.fps;
    } else if (meta_fps) {
      r.fps = *meta_fps;
    } else {
      spdlog::warn("{}: no fps given and none in meta.csv; assuming {} frames/s", r.name, kDefaultFps);
      r.fps = kDefaultFps;
    }
  }
  return recs;
}

struct BackendOptions {
  std::string pipeline;
  std::string detector;
  std::string segmenter;
  double tau = 0.25;
  std::string hold = "4";
  double drift = 30.0;
  bool frame_mode = false;
  std::uint64_t seed = 0;
  std::string oracle_confidence = "0.9";
  std::string oracle_misses;
  std::string oracle_corruption = "none";
  int model_input = 256;
  bool model_sigmoid = false;
  int crop_pad = 8;
  int crop_target = 256;
};

std::pair<std::string, std::string> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

/// Replaces "{rec}" with the recording directory so one spec serves many
/// recordings.
fs::path expand(const std::string& path, const Recording& rec) {
  std::string s = path;
  const auto pos = s.find("{rec}");
  if (pos != std::string::npos) {
    if (rec.dir.empty()) throw InvalidConfig("'{rec}' in a backend path needs --dataset");
    s.replace(pos, 5, rec.dir.string());
  }
  return s;
}

RunConfig make_run_config(const BackendOptions& o, double fps) {
  RunConfig rc;
  if (!o.pipeline.empty()) {
    rc.pipeline = parse_pipeline(o.pipeline);
  } else if (o.segmenter == "otsu") {
    rc.pipeline = PipelineKind::Otsu;
  } else if (o.segmenter == "motion") {
    rc.pipeline = PipelineKind::Motion;
  }
  if ((o.segmenter == "otsu" && rc.pipeline != PipelineKind::Otsu) ||
      (o.segmenter == "motion" && rc.pipeline != PipelineKind::Motion)) {
    throw InvalidConfig("--segmenter " + o.segmenter + " requires --pipeline " + o.segmenter);
  }
  rc.tau = o.tau;
  rc.gate.hold_window = parse_hold(o.hold);
  rc.gate.drift_clamp = o.drift;
  rc.fps = fps;
  rc.temporal = !o.frame_mode;
  rc.crop_pad = o.crop_pad;
  rc.crop_target = o.crop_target;
  rc.validate();
  return rc;
}

json run_config_json(const RunConfig& rc, const BackendOptions& o) {
  json j = json::object();
  j["pipeline"] = std::string(to_string(rc.pipeline));
  j["detector"] = o.detector;
  j["segmenter"] = o.segmenter;
  j["tau"] = rc.tau;
  j["hold_frames"] = hold_label(rc.gate.hold_window);
  j["drift_clamp_px"] = rc.gate.drift_clamp;
  j["frame_mode"] = !rc.temporal;
  j["crop_pad"] = rc.crop_pad;
  j["crop_target"] = rc.crop_target;
  j["motion"] = {{"init_frames", rc.motion.init_frames}, {"alpha", rc.motion.alpha}, {"delta", rc.motion.delta}};
  j["seed"] = o.seed;
  if (o.detector == "oracle" || o.segmenter == "oracle") {
    j["oracle_confidence"] = o.oracle_confidence;
    j["oracle_misses"] = o.oracle_misses;
    j["oracle_corruption"] = o.oracle_corruption;
  }
  if (o.detector.starts_with("model:") || o.segmenter.starts_with("model:")) {
    j["model_input"] = o.model_input;
    j["model_sigmoid"] = o.model_sigmoid;
  }
  return j;
}

struct Backends {
  std::unique_ptr<Detector> detector;
  std::unique_ptr<Segmenter> segmenter;
  PipelineBackends view() const { return {detector.get(), segmenter.get()}; }
};

std::shared_ptr<const SynthTruth> load_oracle_truth(const Recording& rec) {
  if (rec.dir.empty()) throw InvalidConfig("oracle backends need --dataset DIR with truth.csv and masks/");
  return std::make_shared<SynthTruth>(read_truth(rec.dir / "truth.csv", rec.dir / "masks"));
}

Backends make_backends(const BackendOptions& o, const RunConfig& rc, const Recording& rec) {
  Backends b;
  ModelIoSpec io;
  io.input_size = o.model_input;
  io.sigmoid = o.model_sigmoid;
  std::shared_ptr<const SynthTruth> truth;
  auto oracle_truth = [&] {
    if (!truth) truth = load_oracle_truth(rec);
    return truth;
  };
  if (uses_detector(rc.pipeline) && !o.detector.empty()) {
    const auto [kind, arg] = split_spec(o.detector);
    if (kind == "replay") {
      const fs::path p = expand(arg, rec);
      if (!fs::exists(p)) throw MissingInput("no such detection file: " + p.string());
      b.detector = std::make_unique<ReplayDetector>(ReplayDetector::from_csv(p));
    } else if (kind == "model") {
      b.detector = make_model_detector(expand(arg, rec), io);
    } else if (kind == "oracle") {
      b.detector = std::make_unique<OracleDetector>(oracle_truth(), parse_frame_set(o.oracle_misses),
                                                    parse_confidence(o.oracle_confidence, o.seed));
    } else {
      throw InvalidConfig("--detector: expected replay:FILE, model:FILE or oracle");
    }
  }
  if (uses_segmenter(rc.pipeline)) {
    const auto [kind, arg] = split_spec(o.segmenter);
    if (kind == "replay") {
      b.segmenter = std::make_unique<ReplaySegmenter>(expand(arg, rec));
    } else if (kind == "model") {
      b.segmenter = make_model_segmenter(expand(arg, rec), io);
    } else if (kind == "oracle") {
      b.segmenter = std::make_unique<OracleSegmenter>(oracle_truth(), parse_corruption(o.oracle_corruption));
    } else if (!kind.empty()) {
      throw InvalidConfig("--segmenter: expected replay:DIR, model:FILE, otsu, motion or oracle");
    }
  }
  require_backends(rc, b.view());
  return b;
}

void record_backend_inputs(Manifest& m, const BackendOptions& o, const RunConfig& rc,
                           const Recording& rec, const std::string& prefix) {
  auto add = [&](const std::string& spec, const std::string& role) {
    const auto [kind, arg] = split_spec(spec);
    if (kind == "replay" || kind == "model") m.input(prefix + role, expand(arg, rec));
  };
  if (uses_detector(rc.pipeline)) add(o.detector, "detector");
  if (uses_segmenter(rc.pipeline)) add(o.segmenter, "segmenter");
  if ((uses_detector(rc.pipeline) && o.detector == "oracle") ||
      (uses_segmenter(rc.pipeline) && o.segmenter == "oracle")) {
    m.input(prefix + "truth", rec.dir / "truth.csv");
    m.input(prefix + "truth_masks", rec.dir / "masks");
  }
}

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. The first failure
/// in index order is rethrown.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Output writers

json eval_row_json(const EvalRow& r) {
  json j = json::object();
  j["method"] = r.method;
  j["det_recall"] = r.det_recall;
  j["mean_dsc"] = r.mean_dsc;
  j["mean_iou"] = r.mean_iou;
  j["pass_rate_dsc_ge_05"] = r.pass_rate_dsc_ge_05;
  j["n_frames"] = r.n_frames;
  j["n_excluded"] = r.n_excluded;
  j["gated_coverage"] = r.gated_coverage;
  return j;
}

void write_masks(const fs::path& dir, std::span<const FrameResult> results) {
  fs::create_directories(dir);
  for (const auto& r : results) write_mask(dir / frame_file_name(r.frame_id), r.mask);
}

// ---------------------------------------------------------------------------
// Commands

struct SynthOptions {
  SynthConfig cfg;
  std::vector<double> center;
  std::vector<std::string> occlusions;
  std::string patient_id = "synthetic";
  std::string status = "healthy";
  std::string sex = "F";
  std::string oracle_confidence = "0.9";
  std::string out;
};

int cmd_synth(SynthOptions o) {
  prepare_out(o.out);
  if (!o.center.empty()) {
    if (o.center.size() != 2) throw InvalidConfig("--center takes X Y");
    o.cfg.center = {o.center[0], o.center[1]};
  } else {
    o.cfg.center = {o.cfg.width / 2.0, o.cfg.height / 2.0};
  }
  json occ = json::array();
  for (const auto& s : o.occlusions) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw InvalidConfig("--occlusion takes START:LENGTH");
    o.cfg.occlusions.push_back({parse_flag<std::size_t>("--occlusion", s.substr(0, colon)),
                                parse_flag<std::size_t>("--occlusion", s.substr(colon + 1))});
    occ.push_back({{"start", o.cfg.occlusions.back().start}, {"length", o.cfg.occlusions.back().length}});
  }
  const auto video = generate(o.cfg);
  const fs::path out = o.out;
  fs::create_directories(out / "frames");
  fs::create_directories(out / "masks");
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    write_frame(out / "frames" / frame_file_name(t), video.frames[t]);
    write_mask(out / "masks" / frame_file_name(t), video.truth.masks[t]);
  }
  write_truth_csv(out / "truth.csv", video.truth);
  write_recording_meta(out / "meta.csv", {o.cfg.fps, o.patient_id, parse_status(o.status), parse_sex(o.sex)});

  auto truth = std::make_shared<SynthTruth>(video.truth);
  OracleDetector det(truth, {}, parse_confidence(o.oracle_confidence, o.cfg.seed));
  std::map<std::size_t, std::vector<Detection>> records;
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    auto d = det.detect(video.frames[t], t);
    if (!d.empty()) records[t] = std::move(d);
  }
  write_detections_csv(out / "detections.csv", records);

  Manifest m("synth", out);
  const auto& c = o.cfg;
  m.config = {{"width", c.width}, {"height", c.height}, {"n_frames", c.n_frames}, {"fps", c.fps},
              {"f_vib", c.f_vib}, {"a_max", c.a_max}, {"b_max", c.b_max},
              {"center", {c.center.x, c.center.y}}, {"glottis_intensity", c.glottis_intensity},
              {"tissue_intensity", c.tissue_intensity}, {"noise_sigma", c.noise_sigma},
              {"occlusions", occ}, {"seed", c.seed}, {"patient_id", o.patient_id},
              {"status", o.status}, {"sex", o.sex}, {"oracle_confidence", o.oracle_confidence}};
  m.write();
  spdlog::info("synth: wrote {} frames to {}", video.frames.size(), out.string());
  return 0;
}

struct PrepLabelsOptions {
  std::string masks;
  int target = 256;
  std::string out;
};

int cmd_prep_labels(const PrepLabelsOptions& o) {
  prepare_out(o.out);
  if (o.target < 0) throw InvalidConfig("--target must be >= 0");
  const auto files = list_numbered_images(o.masks);
  const fs::path out = fs::path(o.out) / "labels";
  fs::create_directories(out);
  std::size_t positives = 0;
  for (const auto& [id, path] : files) {
    BinaryMask m = read_mask(path);
    if (o.target > 0) m = letterbox(m, o.target).image;
    std::ofstream f(out / (std::to_string(id) + ".txt"), std::ios::binary);
    if (const auto box = mask_to_bbox(m)) {
      f << bbox_to_label_record(*box, m.width(), m.height()).to_line() << '\n';
      ++positives;
    }
  }
  Manifest man("prep-labels", o.out);
  man.config = {{"target", o.target}, {"class", 0}};
  man.input("masks", o.masks);
  man.write();
  spdlog::info("prep-labels: {} label files, {} with a glottis box", files.size(), positives);
  return 0;
}

struct LetterboxOptions {
  std::string frames;
  std::string masks;
  int target = 256;
  std::string out;
};

int cmd_letterbox(const LetterboxOptions& o) {
  prepare_out(o.out);
  if (o.target < 1) throw InvalidConfig("--target must be >= 1");
  const fs::path out = o.out;
  const auto seq = load_frames(o.frames);
  fs::create_directories(out / "frames");
  std::ofstream tf(out / "transforms.csv", std::ios::binary);
  tf << "frame_id,scale,pad_left,pad_top,scaled_width,scaled_height\n";
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    const auto lb = letterbox(seq.frames[i], o.target);
    write_frame(out / "frames" / frame_file_name(seq.ids[i]), lb.image);
    const auto& t = lb.transform;
    tf << seq.ids[i] << ',' << csv::format(t.scale) << ',' << t.pad_left << ',' << t.pad_top << ','
       << t.scaled_width << ',' << t.scaled_height << '\n';
  }
  tf.close();
  Manifest man("letterbox", out);
  man.config = {{"target", o.target}, {"frame_interpolation", "bilinear"}, {"mask_interpolation", "nearest"}};
  man.input("frames", o.frames);
  if (!o.masks.empty()) {
    const auto masks = load_masks(o.masks, seq.ids);
    fs::create_directories(out / "masks");
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      if (!masks[i].same_shape(seq.frames[i])) {
        throw InvalidInput("mask " + std::to_string(seq.ids[i]) + " does not match its frame size");
      }
      write_mask(out / "masks" / frame_file_name(seq.ids[i]), letterbox(masks[i], o.target).image);
    }
    man.input("masks", o.masks);
  }
  man.write();
  return 0;
}

struct RunOptions {
  InputOptions input;
  BackendOptions backend;
  bool no_masks = false;
  unsigned workers = 1;
  std::string out;
};

int cmd_run(const RunOptions& o) {
  prepare_out(o.out);
  auto recs = resolve_recordings(o.input);
  const bool nested = recs.size() > 1;
  const fs::path out = o.out;
  // Validate the configuration once before any work starts.
  const RunConfig probe = make_run_config(o.backend, recs.front().fps);

  parallel_for(recs.size(), o.workers, [&](std::size_t i) {
    Recording& rec = recs[i];
    const RunConfig rc = make_run_config(o.backend, rec.fps);
    auto backends = make_backends(o.backend, rc, rec);
    rec.seq = load_frames(rec.frames_dir);
    const auto results = process_video(rc, backends.view(), rec.seq.frames, rec.seq.ids);
    const fs::path dst = nested ? out / rec.name : out;
    write_frame_csv(dst / "per_frame.csv", results);
    write_gaw_csv(dst / "gaw.csv", results);
    if (!o.no_masks) write_masks(dst / "masks", results);
    rec.seq = {};
    spdlog::info("run: {} ({} frames)", rec.name, results.size());
  });

  Manifest m("run", out);
  m.config = run_config_json(probe, o.backend);
  json fps = json::object();
  for (const auto& r : recs) fps[r.name] = r.fps;
  m.config["fps"] = recs.size() == 1 ? json(recs.front().fps) : fps;
  m.config["recordings"] = json::array();
  for (const auto& r : recs) m.config["recordings"].push_back(r.name);
  m.config["layout"] = nested ? "one subdirectory per recording" : "flat";
  m.config["write_masks"] = !o.no_masks;
  for (const auto& r : recs) {
    const std::string prefix = nested ? r.name + "/" : "";
    m.input(prefix + "frames", r.frames_dir);
    record_backend_inputs(m, o.backend, probe, r, prefix);
  }
  m.write();
  return 0;
}

/// Rebuilds per-frame results from a run directory. Frames missing from the
/// GAW file were excluded from analysis.
std::vector<FrameResult> load_run(const fs::path& run, bool need_masks) {
  const auto records = read_frame_csv(run / "per_frame.csv");
  const auto gaw = read_gaw_csv(run / "gaw.csv");
  const std::set<std::size_t> analyzed(gaw.ids.begin(), gaw.ids.end());
  std::vector<FrameResult> out;
  out.reserve(records.size());
  std::vector<std::size_t> ids;
  for (const auto& rec : records) ids.push_back(rec.frame_id);
  std::vector<BinaryMask> masks;
  if (need_masks) {
    if (!fs::is_directory(run / "masks")) {
      throw MissingInput(run.string() + ": run has no masks/ (was it run with --no-masks?)");
    }
    masks = load_masks(run / "masks", ids);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    FrameResult r;
    r.frame_id = rec.frame_id;
    r.area_px2 = rec.area_px2;
    r.gate_status = rec.status;
    r.active_box = rec.box;
    if (rec.conf) r.detection = Detection{rec.box.value_or(BBox{}), *rec.conf};
    r.excluded = !analyzed.contains(rec.frame_id);
    if (need_masks) {
      r.mask = std::move(masks[i]);
      if (mask_area(r.mask) != r.area_px2) {
        throw InvalidInput(run.string() + ": mask of frame " + std::to_string(r.frame_id) +
                           " disagrees with per_frame.csv");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

struct EvalOptions {
  std::string run;
  std::string gt;
  std::string method;
  std::string out;
};

int cmd_eval(const EvalOptions& o) {
  prepare_out(o.out);
  if (o.run.empty() || o.gt.empty()) throw InvalidConfig("eval needs --run DIR and --gt DIR");
  const auto results = load_run(o.run, true);
  std::vector<std::size_t> ids;
  for (const auto& r : results) ids.push_back(r.frame_id);
  const auto gts = load_masks(o.gt, ids);
  std::string method = o.method;
  if (method.empty()) {
    const auto cfg = read_manifest_config(o.run);
    method = cfg.contains("pipeline") ? cfg["pipeline"].get<std::string>() : "run";
  }
  const auto row = evaluate(results, gts, method);
  const fs::path out = o.out;
  write_text(out / "eval.csv", EvalRow::csv_header() + "\n" + row.csv_line() + "\n");
  write_json(out / "eval.json", eval_row_json(row));
  Manifest m("eval", out);
  m.config = {{"method", method}};
  m.input("run", o.run);
  m.input("gt", o.gt);
  m.write();
  spdlog::info("eval: mean DSC {:.4f}, IoU {:.4f}", row.mean_dsc, row.mean_iou);
  return 0;
}

struct SweepOptions {
  InputOptions input;
  BackendOptions backend;
  std::string gt;
  std::string taus = "0.001,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string holds = "0..20,inf";
  double capture_floor = kCaptureFloor;
  unsigned workers = 1;
  std::string out;
};

/// Everything a sweep needs from one inference pass.
struct SweepInputs {
  Recording rec;
  RunConfig rc;
  Backends backends;
  std::vector<std::vector<Detection>> detections;
  std::vector<BinaryMask> gts;
  std::vector<bool> excluded;
};

SweepInputs prepare_sweep(const SweepOptions& o) {
  auto recs = resolve_recordings(o.input);
  if (recs.size() != 1) throw InvalidConfig("sweeps take exactly one recording");
  SweepInputs s;
  s.rec = std::move(recs.front());
  s.rc = make_run_config(o.backend, s.rec.fps);
  if (s.rc.pipeline == PipelineKind::SegmenterOnly) {
    throw InvalidConfig("sweeps need a gated pipeline (segmenter-only has no detector)");
  }
  if (s.rc.pipeline == PipelineKind::Motion) {
    throw InvalidConfig("sweeps are not available for the motion pipeline (stateful background)");
  }
  if (!(o.capture_floor >= 0.0)) throw InvalidConfig("--capture-floor must be >= 0");
  s.backends = make_backends(o.backend, s.rc, s.rec);
  s.rec.seq = load_frames(s.rec.frames_dir);
  fs::path gt = o.gt;
  if (gt.empty()) {
    if (s.rec.dir.empty()) throw InvalidConfig("sweeps need --gt DIR (or --dataset DIR with masks/)");
    gt = s.rec.dir / "masks";
  }
  s.gts = load_masks(gt, s.rec.seq.ids);
  for (std::size_t i = 0; i < s.rec.seq.frames.size(); ++i) {
    auto dets = s.backends.detector->detect(s.rec.seq.frames[i], s.rec.seq.ids[i]);
    std::erase_if(dets, [&](const Detection& d) { return d.confidence < o.capture_floor; });
    s.detections.push_back(std::move(dets));
  }
  return s;
}

void record_sweep_manifest(Manifest& m, const SweepOptions& o, const SweepInputs& s) {
  m.config = run_config_json(s.rc, o.backend);
  m.config["fps"] = s.rec.fps;
  m.config["capture_floor"] = o.capture_floor;
  m.input("frames", s.rec.frames_dir);
  m.input("gt", o.gt.empty() ? s.rec.dir / "masks" : fs::path(o.gt));
  record_backend_inputs(m, o.backend, s.rc, s.rec, "");
}

int cmd_sweep_tau(const SweepOptions& o) {
  prepare_out(o.out);
  const auto taus = parse_taus(o.taus);
  auto s = prepare_sweep(o);
  const auto& f0 = s.rec.seq.frames.front();
  const auto provider = sweep_mask_provider(s.rc, s.rec.seq.frames, s.backends.segmenter.get(), s.rec.seq.ids);
  const auto points = tau_sweep(s.rc, f0.width(), f0.height(), s.detections, provider, s.gts, taus,
                                o.capture_floor);
  const fs::path out = o.out;
  std::string csv = "tau,below_floor," + EvalRow::csv_header() + "\n";
  json rows = json::array();
  std::vector<std::string> labels;
  std::vector<double> dsc, recall;
  for (const auto& p : points) {
    if (p.below_floor) {
      spdlog::warn("tau {} is below the capture floor {}; detections under the floor were never stored",
                   p.tau, o.capture_floor);
    }
    csv += csv::format(p.tau) + ',' + (p.below_floor ? "1" : "0") + ',' + p.row.csv_line() + '\n';
    json j = eval_row_json(p.row);
    j["tau"] = p.tau;
    j["below_floor"] = p.below_floor;
    rows.push_back(j);
    labels.push_back(csv::format(p.tau));
    dsc.push_back(p.row.mean_dsc);
    recall.push_back(p.row.det_recall);
  }
  write_text(out / "sweep_tau.csv", csv);
  write_json(out / "sweep_tau.json", rows);
  write_text(out / "sweep_tau.svg", svg::sweep_plot("Confidence threshold sweep", "tau", labels, dsc, recall));
  Manifest m("sweep-tau", out);
  record_sweep_manifest(m, o, s);
  m.config["taus"] = taus;
  m.write();
  return 0;
}

int cmd_sweep_hold(const SweepOptions& o) {
  prepare_out(o.out);
  const auto holds = parse_holds(o.holds);
  auto s = prepare_sweep(o);
  const auto& f0 = s.rec.seq.frames.front();
  const auto provider = sweep_mask_provider(s.rc, s.rec.seq.frames, s.backends.segmenter.get(), s.rec.seq.ids);
  const auto points = hold_sweep(s.rc, f0.width(), f0.height(), s.detections, provider, s.gts, holds);
  const fs::path out = o.out;
  std::string csv = "hold," + EvalRow::csv_header() + "\n";
  json rows = json::array();
  std::vector<std::string> labels;
  std::vector<double> dsc, recall;
  for (const auto& p : points) {
    csv += hold_label(p.hold) + ',' + p.row.csv_line() + '\n';
    json j = eval_row_json(p.row);
    j["hold"] = hold_label(p.hold);
    rows.push_back(j);
    labels.push_back(hold_label(p.hold));
    dsc.push_back(p.row.mean_dsc);
    recall.push_back(p.row.det_recall);
  }
  write_text(out / "sweep_hold.csv", csv);
  write_json(out / "sweep_hold.json", rows);
  write_text(out / "sweep_hold.svg", svg::sweep_plot("Hold duration sweep", "hold (frames)", labels, dsc, recall));
  Manifest m("sweep-hold", out);
  record_sweep_manifest(m, o, s);
  json hl = json::array();
  for (auto h : holds) hl.push_back(hold_label(h));
  m.config["holds"] = hl;
  m.write();
  return 0;
}

struct FeaturesOptions {
  std::string run;
  std::string gaw;
  double fps = 0.0;
  std::string name = "features";
  std::string out;
};

int cmd_features(const FeaturesOptions& o) {
  prepare_out(o.out);
  if (o.run.empty() == o.gaw.empty()) throw InvalidConfig("features needs exactly one of --run DIR or --gaw FILE");
  const fs::path gaw_path = o.run.empty() ? fs::path(o.gaw) : fs::path(o.run) / "gaw.csv";
  double fps = o.fps;
  if (!(fps > 0.0) && !o.run.empty()) {
    const auto cfg = read_manifest_config(o.run);
    if (cfg.contains("fps") && cfg["fps"].is_number()) fps = cfg["fps"].get<double>();
  }
  if (!(fps > 0.0)) {
    spdlog::warn("features: no fps given or recorded; assuming {} frames/s", kDefaultFps);
    fps = kDefaultFps;
  }
  const auto rec = read_gaw_csv(gaw_path);
  if (rec.areas.empty()) throw InvalidInput(gaw_path.string() + ": no frames");
  GawSeries g;
  g.areas = rec.areas;
  g.fps = fps;
  const auto f = features(g);
  if (o.name.empty() || o.name.find('/') != std::string::npos) throw InvalidConfig("--name must be a plain file stem");
  write_json(fs::path(o.out) / (o.name + ".json"), features_to_json(f));
  Manifest m("features", o.out);
  m.config = {{"fps", fps}, {"name", o.name}, {"max_lag", 50}};
  m.input("gaw", gaw_path);
  m.write();
  return 0;
}

struct CompareOptions {
  std::vector<std::string> features;
  std::string meta;
  double alpha = 0.05;
  std::string out;
};

/// Patient id of a features file: its stem, or the parent directory name when
/// the stem is the generic "features".
std::string patient_of(const fs::path& p) {
  const auto stem = p.stem().string();
  if (stem != "features") return stem;
  return fs::absolute(p).lexically_normal().parent_path().filename().string();
}

int cmd_compare(const CompareOptions& o) {
  prepare_out(o.out);
  if (o.features.empty()) throw InvalidConfig("compare needs --features FILE...");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw InvalidConfig("--alpha must be in (0,1)");
  const auto cohort = read_cohort_meta(o.meta);
  std::vector<fs::path> files(o.features.begin(), o.features.end());
  std::ranges::sort(files, [](const fs::path& a, const fs::path& b) { return patient_of(a) < patient_of(b); });
  std::vector<PatientRecord> records;
  std::set<std::string> seen;
  for (const auto& f : files) {
    const std::string id = patient_of(f);
    if (!seen.insert(id).second) throw InvalidInput("two feature files for patient " + id);
    const auto it = cohort.find(id);
    if (it == cohort.end()) throw InvalidInput(o.meta + ": no metadata for patient " + id);
    records.push_back({id, it->second.status, it->second.sex, read_features_json(f)});
  }
  const auto report = group_report(records, o.alpha);
  write_text(fs::path(o.out) / "report.txt", report.to_text());
  write_text(fs::path(o.out) / "report.csv", report.to_csv());
  Manifest m("compare", o.out);
  m.config = {{"alpha", o.alpha}, {"patients", seen.size()}, {"strata", {"F", "M"}},
              {"test", "Mann-Whitney U, two-sided, normal approximation with tie correction"}};
  m.input("meta", o.meta);
  for (const auto& f : files) m.input("features", f);
  m.write();
  return 0;
}

struct MontageOptions {
  std::string frames;
  std::string run;
  std::size_t panels = 12;
  std::string out;
};

int cmd_montage(const MontageOptions& o) {
  prepare_out(o.out);
  const auto seq = load_frames(o.frames);
  auto results = load_run(o.run, true);
  if (results.size() != seq.ids.size()) throw InvalidInput("montage: run and frames differ in length");
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].frame_id != seq.ids[i]) throw InvalidInput("montage: run and frames differ in frame ids");
  }
  const auto m = annotate_montage(seq.frames, results, o.panels);
  write_rgb_png(fs::path(o.out) / "montage.png", m.image);
  json idx = json::array();
  for (auto i : m.panel_indices) idx.push_back(seq.ids[i]);
  Manifest man("montage", o.out);
  man.config = {{"panels", o.panels}, {"panel_frame_ids", idx}};
  man.input("frames", o.frames);
  man.input("run", o.run);
  man.write();
  return 0;
}

// ---------------------------------------------------------------------------
// Wiring

void add_input_flags(CLI::App* c, InputOptions& in) {
  c->add_option("--dataset", in.datasets, "Recording directory with frames/, optional masks/, meta.csv, truth.csv");
  c->add_option("--frames", in.frames, "Directory of <frame_id>.png frames");
  c->add_option("--fps", in.fps, "Frame rate; default from meta.csv, else 4000");
}

void add_backend_flags(CLI::App* c, BackendOptions& b) {
  c->add_option("--pipeline", b.pipeline,
                "segmenter-only | localizer-segmenter | localizer-crop-segmenter | motion | otsu "
                "(default localizer-segmenter, or the --segmenter kind for otsu/motion)");
  c->add_option("--detector", b.detector, "replay:FILE | model:FILE | oracle ('{rec}' expands to the dataset dir)");
  c->add_option("--segmenter", b.segmenter, "replay:DIR | model:FILE | otsu | motion | oracle");
  c->add_option("--tau", b.tau, "Detector confidence threshold")->capture_default_str();
  c->add_option("--hold-frames", b.hold, "Hold window in frames, including the detection frame, or 'inf'")
      ->capture_default_str();
  c->add_option("--drift-clamp-px", b.drift, "Maximum box-centre shift between detections (px)")
      ->capture_default_str();
  c->add_flag("--frame-mode", b.frame_mode, "Disable temporal state: every frame gates on its own detection");
  c->add_option("--seed", b.seed, "Seed for oracle confidences")->capture_default_str();
  c->add_option("--oracle-confidence", b.oracle_confidence, "Oracle detector confidence: a number or 'hashed'")
      ->capture_default_str();
  c->add_option("--oracle-misses", b.oracle_misses, "Frames the oracle detector misses, e.g. 3,10-14");
  c->add_option("--oracle-corruption", b.oracle_corruption, "none | dilate:K | erode:K | blob:X,Y,R")
      ->capture_default_str();
  c->add_option("--model-input", b.model_input, "Square input size of model backends")->capture_default_str();
  c->add_flag("--model-sigmoid", b.model_sigmoid, "Segmenter model outputs logits");
  c->add_option("--crop-pad", b.crop_pad, "Crop padding on each side (px)")->capture_default_str();
  c->add_option("--crop-target", b.crop_target, "Crop segmenter input size")->capture_default_str();
}

spdlog::level::level_enum log_level_from_env() {
  const char* v = std::getenv("GLOTTISGATE_LOG");
  if (!v || !*v) return spdlog::level::info;
  const auto lvl = spdlog::level::from_str(v);
  // from_str maps unknown names to off; only accept "off" when asked for.
  if (lvl == spdlog::level::off && std::string_view(v) != "off") {
    spdlog::warn("GLOTTISGATE_LOG='{}' is not a log level; using info", v);
    return spdlog::level::info;
  }
  return lvl;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("glottisgate");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(log_level_from_env());

  CLI::App app{"glottisgate: detection-gated glottis segmentation, glottal area waveforms and statistics"};
  app.set_version_flag("--version", GLOTTISGATE_VERSION);
  app.require_subcommand(1);
  std::function<int()> action;

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic recording with exact ground truth");
  c_synth->add_option("--width", synth.cfg.width)->capture_default_str();
  c_synth->add_option("--height", synth.cfg.height)->capture_default_str();
  c_synth->add_option("--n-frames", synth.cfg.n_frames, "Number of frames")->capture_default_str();
  c_synth->add_option("--fps", synth.cfg.fps)->capture_default_str();
  c_synth->add_option("--f-vib", synth.cfg.f_vib, "Vibration frequency (Hz)")->capture_default_str();
  c_synth->add_option("--a-max", synth.cfg.a_max, "Horizontal semi-axis at full opening (px)")->capture_default_str();
  c_synth->add_option("--b-max", synth.cfg.b_max, "Vertical semi-axis at full opening (px)")->capture_default_str();
  c_synth->add_option("--center", synth.center, "Ellipse centre X Y (default frame centre)")->expected(2);
  c_synth->add_option("--glottis-intensity", synth.cfg.glottis_intensity)->capture_default_str();
  c_synth->add_option("--tissue-intensity", synth.cfg.tissue_intensity)->capture_default_str();
  c_synth->add_option("--noise", synth.cfg.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  c_synth->add_option("--occlusion", synth.occlusions, "START:LENGTH (repeatable)");
  c_synth->add_option("--seed", synth.cfg.seed, "Noise and confidence seed")->capture_default_str();
  c_synth->add_option("--patient-id", synth.patient_id)->capture_default_str();
  c_synth->add_option("--status", synth.status, "healthy | pathological")->capture_default_str();
  c_synth->add_option("--sex", synth.sex, "F | M")->capture_default_str();
  c_synth->add_option("--oracle-confidence", synth.oracle_confidence,
                      "Confidence in detections.csv: a number or 'hashed'")
      ->capture_default_str();
  c_synth->add_option("--out", synth.out, "Output recording directory");
  c_synth->callback([&] { action = [&] { return cmd_synth(synth); }; });

  PrepLabelsOptions labels;
  auto* c_labels = app.add_subcommand("prep-labels", "Derive YOLO box labels from masks");
  c_labels->add_option("--masks", labels.masks, "Directory of <frame_id>.png masks");
  c_labels->add_option("--target", labels.target, "Letterbox size before boxing (0 = native)")->capture_default_str();
  c_labels->add_option("--out", labels.out);
  c_labels->callback([&] { action = [&] { return cmd_prep_labels(labels); }; });

  LetterboxOptions lb;
  auto* c_lb = app.add_subcommand("letterbox", "Letterbox frames (and masks) to a square canvas");
  c_lb->add_option("--frames", lb.frames);
  c_lb->add_option("--masks", lb.masks);
  c_lb->add_option("--target", lb.target)->capture_default_str();
  c_lb->add_option("--out", lb.out);
  c_lb->callback([&] { action = [&] { return cmd_letterbox(lb); }; });

  RunOptions run;
  auto* c_run = app.add_subcommand("run", "Run a pipeline over one or more recordings");
  add_input_flags(c_run, run.input);
  add_backend_flags(c_run, run.backend);
  c_run->add_flag("--no-masks", run.no_masks, "Do not write mask PNGs");
  c_run->add_option("--workers", run.workers, "Recordings processed in parallel (0 = all cores)")
      ->capture_default_str();
  c_run->add_option("--out", run.out);
  c_run->callback([&] { action = [&] { return cmd_run(run); }; });

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Score a run against ground-truth masks");
  c_eval->add_option("--run", ev.run, "Output directory of 'run'");
  c_eval->add_option("--gt", ev.gt, "Ground-truth mask directory");
  c_eval->add_option("--method", ev.method, "Row label (default: the run's pipeline)");
  c_eval->add_option("--out", ev.out);
  c_eval->callback([&] { action = [&] { return cmd_eval(ev); }; });

  SweepOptions st;
  auto* c_st = app.add_subcommand("sweep-tau", "Sweep the confidence threshold from one inference pass");
  add_input_flags(c_st, st.input);
  add_backend_flags(c_st, st.backend);
  c_st->add_option("--gt", st.gt, "Ground-truth masks (default: <dataset>/masks)");
  c_st->add_option("--taus", st.taus, "Comma-separated thresholds")->capture_default_str();
  c_st->add_option("--capture-floor", st.capture_floor, "Detections below this are never stored")
      ->capture_default_str();
  c_st->add_option("--workers", st.workers, "Accepted for symmetry; a sweep covers one recording");
  c_st->add_option("--out", st.out);
  c_st->callback([&] { action = [&] { return cmd_sweep_tau(st); }; });

  SweepOptions sh;
  auto* c_sh = app.add_subcommand("sweep-hold", "Sweep the hold window from one inference pass");
  add_input_flags(c_sh, sh.input);
  add_backend_flags(c_sh, sh.backend);
  c_sh->add_option("--gt", sh.gt, "Ground-truth masks (default: <dataset>/masks)");
  c_sh->add_option("--holds", sh.holds, "Values and ranges, e.g. 0..20,inf")->capture_default_str();
  c_sh->add_option("--capture-floor", sh.capture_floor, "Detections below this are never stored")
      ->capture_default_str();
  c_sh->add_option("--workers", sh.workers, "Accepted for symmetry; a sweep covers one recording");
  c_sh->add_option("--out", sh.out);
  c_sh->callback([&] { action = [&] { return cmd_sweep_hold(sh); }; });

  FeaturesOptions ft;
  auto* c_ft = app.add_subcommand("features", "Kinematic features of a glottal area waveform");
  c_ft->add_option("--run", ft.run, "Output directory of 'run'");
  c_ft->add_option("--gaw", ft.gaw, "GAW CSV (frame_id,area_px2)");
  c_ft->add_option("--fps", ft.fps, "Frame rate (default: the run's, else 4000)");
  c_ft->add_option("--name", ft.name, "Output file stem (used as patient id by 'compare')")->capture_default_str();
  c_ft->add_option("--out", ft.out);
  c_ft->callback([&] { action = [&] { return cmd_features(ft); }; });

  CompareOptions cmp;
  auto* c_cmp = app.add_subcommand("compare", "Healthy vs pathological feature report stratified by sex");
  c_cmp->add_option("--features", cmp.features, "Feature JSON files (patient id = file stem)");
  c_cmp->add_option("--meta", cmp.meta, "CSV patient_id,status,sex");
  c_cmp->add_option("--alpha", cmp.alpha)->capture_default_str();
  c_cmp->add_option("--out", cmp.out);
  c_cmp->callback([&] { action = [&] { return cmd_compare(cmp); }; });

  MontageOptions mt;
  auto* c_mt = app.add_subcommand("montage", "Annotated grid of evenly spaced frames from a run");
  c_mt->add_option("--frames", mt.frames);
  c_mt->add_option("--run", mt.run);
  c_mt->add_option("--panels", mt.panels)->capture_default_str();
  c_mt->add_option("--out", mt.out);
  c_mt->callback([&] { action = [&] { return cmd_montage(mt); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    return action();
  } catch (const MissingInput& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const MissingPrediction& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const InvalidInput& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const InvalidConfig& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const FeatureDisabled& e) {
    spdlog::error("{}", e.what());
    return 4;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
