#pragma once

// Glottal area waveform and its seven kinematic features.
//
// Conventions:
//  * "open" frames are non-excluded frames with area > 0; area_mean and
//    area_std (population) are taken over open frames.
//  * area_range is max - min over all non-excluded frames.
//  * open_quotient is the fraction of non-excluded frames with area above 10%
//    of the open-frame mean.
//  * f0 is the argmax FFT bin in 1..N/2 of the mean-removed series, times fps/N.
//  * periodicity is the peak normalised autocorrelation over lags 1..50.
//  * Degenerate series (all zero / zero variance) give 0 for OQ, f0,
//    periodicity and cv.
// Features operate on the non-excluded frames, in order.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "glottisgate/error.hpp"
#include "glottisgate/pipelines.hpp"

namespace glottisgate {

struct GawSeries {
  std::vector<double> areas;
  double fps = 4000.0;
  std::vector<bool> excluded;  // empty or same length as areas

  bool is_excluded(std::size_t i) const { return !excluded.empty() && excluded[i]; }

  /// Areas of the frames that enter feature computation.
  std::vector<double> analyzed() const {
    std::vector<double> out;
    out.reserve(areas.size());
    for (std::size_t i = 0; i < areas.size(); ++i) {
      if (!is_excluded(i)) out.push_back(areas[i]);
    }
    return out;
  }
};

struct FeatureVector {
  double area_mean = 0.0;
  double area_std = 0.0;
  double area_range = 0.0;
  double open_quotient = 0.0;
  double f0 = 0.0;
  double periodicity = 0.0;
  double cv = 0.0;

  static constexpr std::array<const char*, 7> kNames = {
      "area_mean", "area_std", "area_range", "open_quotient", "f0", "periodicity", "cv"};

  double get(std::size_t i) const {
    switch (i) {
      case 0: return area_mean;
      case 1: return area_std;
      case 2: return area_range;
      case 3: return open_quotient;
      case 4: return f0;
      case 5: return periodicity;
      case 6: return cv;
      default: throw InvalidInput("feature index out of range");
    }
  }
  void set(std::size_t i, double v) {
    switch (i) {
      case 0: area_mean = v; break;
      case 1: area_std = v; break;
      case 2: area_range = v; break;
      case 3: open_quotient = v; break;
      case 4: f0 = v; break;
      case 5: periodicity = v; break;
      case 6: cv = v; break;
      default: throw InvalidInput("feature index out of range");
    }
  }
};

inline GawSeries extract_waveform(std::span<const FrameResult> results, double fps) {
  if (results.empty()) throw InvalidInput("extract_waveform: no frames");
  if (!(fps > 0.0)) throw InvalidInput("extract_waveform: fps must be > 0");
  GawSeries g;
  g.fps = fps;
  g.areas.reserve(results.size());
  g.excluded.reserve(results.size());
  for (const auto& r : results) {
    g.areas.push_back(static_cast<double>(r.area_px2));
    g.excluded.push_back(r.excluded);
  }
  return g;
}

namespace detail {

struct OpenStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

inline OpenStats open_stats(std::span<const double> a) {
  OpenStats s;
  double sum = 0.0;
  for (double v : a) {
    if (v > 0.0) {
      sum += v;
      ++s.count;
    }
  }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (double v : a) {
    if (v > 0.0) ss += (v - s.mean) * (v - s.mean);
  }
  s.std = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

inline double mean_of(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

inline bool zero_variance(std::span<const double> a) {
  return a.empty() || std::ranges::all_of(a, [&](double v) { return v == a.front(); });
}

// FFTW's planner is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// |X_k| for k = 0..N/2 of a real series.
inline std::vector<double> magnitude_spectrum(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x.begin(), x.end());
  const int bins = n / 2 + 1;
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(bins));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::vector<double> mag(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) mag[static_cast<std::size_t>(k)] = std::hypot(out[k][0], out[k][1]);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  return mag;
}

inline double open_quotient_of(std::span<const double> a) {
  const auto s = open_stats(a);
  if (s.count == 0) return 0.0;
  const double threshold = 0.1 * s.mean;
  std::size_t above = 0;
  for (double v : a) above += v > threshold;
  return static_cast<double>(above) / static_cast<double>(a.size());
}

inline double f0_of(std::span<const double> a, double fps) {
  if (a.size() < 4) throw InvalidInput("f0: need at least 4 samples");
  if (zero_variance(a)) return 0.0;
  const double m = mean_of(a);
  std::vector<double> centred(a.begin(), a.end());
  for (double& v : centred) v -= m;
  const auto mag = magnitude_spectrum(centred);
  const std::size_t half = a.size() / 2;
  std::size_t best = 1;
  for (std::size_t k = 2; k <= half; ++k) {
    if (mag[k] > mag[best]) best = k;
  }
  return static_cast<double>(best) * fps / static_cast<double>(a.size());
}

inline double periodicity_of(std::span<const double> a, std::size_t max_lag = 50) {
  const std::size_t n = a.size();
  if (n < 2 || zero_variance(a)) return 0.0;
  const double m = mean_of(a);
  std::vector<double> d(a.begin(), a.end());
  for (double& v : d) v -= m;
  const std::size_t lags = std::min(max_lag, n - 1);
  double best = -1.0;
  for (std::size_t k = 1; k <= lags; ++k) {
    double num = 0.0, e_head = 0.0, e_tail = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) {
      num += d[t] * d[t + k];
      e_head += d[t] * d[t];
      e_tail += d[t + k] * d[t + k];
    }
    const double den = std::sqrt(e_head * e_tail);
    const double r = den > 0.0 ? num / den : 0.0;
    best = std::max(best, r);
  }
  return best;
}

}  // namespace detail

inline double open_quotient(const GawSeries& g) {
  const auto a = g.analyzed();
  return detail::open_quotient_of(a);
}

inline double f0_fft(const GawSeries& g) {
  const auto a = g.analyzed();
  return detail::f0_of(a, g.fps);
}

/// Peak of r(k) = sum d_t d_{t+k} / sqrt(sum d_t^2 * sum d_{t+k}^2) over the
/// overlapping samples, d = A - mean(A), k = 1..50 (or 1..N-1 if shorter).
inline double periodicity(const GawSeries& g) {
  const auto a = g.analyzed();
  return detail::periodicity_of(a);
}

inline FeatureVector features(const GawSeries& g) {
  const auto a = g.analyzed();
  FeatureVector f;
  if (a.empty()) return f;
  const auto s = detail::open_stats(a);
  f.area_mean = s.mean;
  f.area_std = s.std;
  const auto [lo, hi] = std::ranges::minmax(a);
  f.area_range = hi - lo;
  f.open_quotient = detail::open_quotient_of(a);
  f.f0 = a.size() >= 4 ? detail::f0_of(a, g.fps) : 0.0;
  f.periodicity = detail::periodicity_of(a);
  f.cv = s.mean > 0.0 ? s.std / s.mean : 0.0;
  return f;
}

}  // namespace glottisgate
