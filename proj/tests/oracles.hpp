#pragma once

// Independent reference implementations and random generators shared by the
// test suites. Oracles favour obviously-correct brute force over speed.

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "glottisgate/backends.hpp"
#include "glottisgate/core.hpp"

namespace oracle {

using glottisgate::BinaryMask;
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Generators

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  double normal(double mu, double sigma) { return std::normal_distribution<double>(mu, sigma)(rng_); }

  std::vector<bool> bits(std::size_t n, double p) {
    std::vector<bool> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = coin(p);
    return v;
  }

  BinaryMask mask(int w, int h, double density) {
    BinaryMask m(w, h, std::uint8_t{0});
    for (auto& px : m.data()) px = coin(density) ? 1 : 0;
    return m;
  }

  /// Random filled rectangles; structured masks exercise boxes and overlaps.
  BinaryMask blobs(int w, int h, int count) {
    BinaryMask m(w, h, std::uint8_t{0});
    for (int i = 0; i < count; ++i) {
      const int x0 = uniform_int(0, w - 1), y0 = uniform_int(0, h - 1);
      const int x1 = uniform_int(x0 + 1, w), y1 = uniform_int(y0 + 1, h);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.at(x, y) = 1;
    }
    return m;
  }

  glottisgate::BBox box(int w, int h) {
    const int x0 = uniform_int(0, w - 1), y0 = uniform_int(0, h - 1);
    return {x0, y0, uniform_int(x0 + 1, w), uniform_int(y0 + 1, h), 1.0};
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Gate: output active at t iff the window sum over the last `hold` frames > 0.

inline std::vector<bool> gate_window(const std::vector<bool>& fired, std::size_t hold) {
  std::vector<bool> active(fired.size());
  for (std::size_t t = 0; t < fired.size(); ++t) {
    std::size_t sum = 0;
    const std::size_t start = (hold == 0 || t + 1 < hold) ? 0 : t + 1 - hold;
    for (std::size_t s = start; s <= t; ++s) sum += fired[s];
    active[t] = sum > 0;
  }
  return active;
}

// ---------------------------------------------------------------------------
// Overlap metrics from set cardinalities.

struct Overlap {
  double dsc;
  double iou;
};

inline Overlap overlap(const BinaryMask& p, const BinaryMask& g) {
  long inter = 0, sp = 0, sg = 0, uni = 0;
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      const bool a = p.at(x, y) != 0, b = g.at(x, y) != 0;
      inter += a && b;
      uni += a || b;
      sp += a;
      sg += b;
    }
  }
  if (sp + sg == 0) return {1.0, 1.0};
  return {2.0 * static_cast<double>(inter) / static_cast<double>(sp + sg),
          static_cast<double>(inter) / static_cast<double>(uni)};
}

// ---------------------------------------------------------------------------
// Otsu: between-class variance w0*w1*(mu0-mu1)^2 in exact rationals for every
// threshold; smallest maximiser wins.

inline int otsu_brute(const glottisgate::Histogram& h) {
  BigInt total = 0;
  for (auto c : h) total += c;
  std::optional<Rational> best;
  int best_t = -1;
  for (int t = 0; t < 256; ++t) {
    BigInt n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (int i = 0; i < 256; ++i) {
      const auto c = h[static_cast<std::size_t>(i)];
      if (i <= t) {
        n0 += c;
        s0 += BigInt(c) * i;
      } else {
        n1 += c;
        s1 += BigInt(c) * i;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const Rational w0(n0, total), w1(n1, total);
    const Rational d = Rational(s0, n0) - Rational(s1, n1);
    const Rational var = w0 * w1 * d * d;
    if (!best || var > *best) {
      best = var;
      best_t = t;
    }
  }
  if (best_t < 0) {
    for (int i = 0; i < 256; ++i)
      if (h[static_cast<std::size_t>(i)]) return i;
  }
  return best_t;
}

// ---------------------------------------------------------------------------
// Fisher exact: enumerate all tables with the observed margins, exact
// hypergeometric probabilities as rationals.

inline BigInt binom(long n, long k) {
  if (k < 0 || k > n) return 0;
  BigInt r = 1;
  for (long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double fisher_enum(long a, long b, long c, long d) {
  const long r0 = a + b, r1 = c + d, c0 = a + c, n = r0 + r1;
  const BigInt denom = binom(n, c0);
  auto prob = [&](long x) { return Rational(binom(r0, x) * binom(r1, c0 - x), denom); };
  const Rational obs = prob(a);
  Rational p = 0;
  for (long x = std::max(0L, c0 - r1); x <= std::min(r0, c0); ++x) {
    const Rational px = prob(x);
    if (px <= obs) p += px;
  }
  return static_cast<double>(p);
}

// ---------------------------------------------------------------------------
// Mann-Whitney exact p for tie-free samples from the classical recurrence
// f(u; m, n) = f(u - n; m - 1, n) + f(u; m, n - 1).

inline std::vector<long double> u_distribution(int m, int n) {
  // dist[m][n][u] built bottom-up.
  std::vector<std::vector<std::vector<long double>>> f(
      static_cast<std::size_t>(m + 1), std::vector<std::vector<long double>>(static_cast<std::size_t>(n + 1)));
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= n; ++j) {
      auto& cur = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      cur.assign(static_cast<std::size_t>(i * j + 1), 0.0L);
      if (i == 0 || j == 0) {
        cur[0] = 1.0L;
        continue;
      }
      const auto& a = f[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
      const auto& b = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)];
      for (int u = 0; u <= i * j; ++u) {
        long double v = 0.0L;
        if (u - j >= 0 && u - j < static_cast<int>(a.size())) v += a[static_cast<std::size_t>(u - j)];
        if (u < static_cast<int>(b.size())) v += b[static_cast<std::size_t>(u)];
        cur[static_cast<std::size_t>(u)] = v;
      }
    }
  }
  return f[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)];
}

/// U of `a` counts pairs (x in a, y in b) with x > y.
inline double u_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

inline double mw_exact_tie_free(const std::vector<double>& a, const std::vector<double>& b) {
  const int m = static_cast<int>(a.size()), n = static_cast<int>(b.size());
  const auto dist = u_distribution(m, n);
  const double u = u_statistic(a, b);
  const double mu = m * n / 2.0;
  long double total = 0.0L, extreme = 0.0L;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    total += dist[k];
    if (std::fabs(static_cast<double>(k) - mu) >= std::fabs(u - mu) - 1e-9) extreme += dist[k];
  }
  return std::min(1.0, static_cast<double>(extreme / total));
}

/// Two-sided exact p by enumerating every split of the pooled sample (ties
/// allowed, midranks). Exponential; keep n small.
inline double mw_exact_enum(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), n1 = a.size();
  auto u_of = [&](std::uint32_t subset) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) ((subset >> i) & 1u ? x : y).push_back(pooled[i]);
    return u_statistic(x, y);
  };
  const double mu = static_cast<double>(n1 * (n - n1)) / 2.0;
  const double obs = std::fabs(u_statistic(a, b) - mu);
  long total = 0, extreme = 0;
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    if (static_cast<std::size_t>(__builtin_popcount(s)) != n1) continue;
    ++total;
    extreme += std::fabs(u_of(s) - mu) >= obs - 1e-9;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Waveform features straight from their definitions; naive O(N^2) DFT.

struct Features {
  double area_mean, area_std, area_range, open_quotient, f0, periodicity, cv;
  double get(std::size_t i) const {
    const double v[] = {area_mean, area_std, area_range, open_quotient, f0, periodicity, cv};
    return v[i];
  }
};

inline Features features(const std::vector<double>& a, double fps) {
  Features f{};
  const std::size_t n = a.size();
  std::vector<double> open;
  for (double v : a)
    if (v > 0) open.push_back(v);
  if (!open.empty()) {
    double s = 0;
    for (double v : open) s += v;
    f.area_mean = s / static_cast<double>(open.size());
    double ss = 0;
    for (double v : open) ss += (v - f.area_mean) * (v - f.area_mean);
    f.area_std = std::sqrt(ss / static_cast<double>(open.size()));
    f.cv = f.area_std / f.area_mean;
    std::size_t above = 0;
    for (double v : a) above += v > 0.1 * f.area_mean;
    f.open_quotient = static_cast<double>(above) / static_cast<double>(n);
  }
  f.area_range = *std::max_element(a.begin(), a.end()) - *std::min_element(a.begin(), a.end());

  bool constant = true;
  for (double v : a) constant = constant && v == a.front();
  if (constant) return f;

  double mean = 0;
  for (double v : a) mean += v;
  mean /= static_cast<double>(n);

  std::size_t best_k = 1;
  double best_mag = -1;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(k) *
                              static_cast<long double>(t) / static_cast<long double>(n);
      re += (a[t] - mean) * std::cos(ang);
      im += (a[t] - mean) * std::sin(ang);
    }
    const double mag = static_cast<double>(std::sqrt(re * re + im * im));
    // Relative slack: equal-magnitude bins differ only by rounding.
    if (mag > best_mag * (1.0 + 1e-9)) {
      best_mag = mag;
      best_k = k;
    }
  }
  f.f0 = static_cast<double>(best_k) * fps / static_cast<double>(n);

  double best_r = -1.0;
  for (std::size_t k = 1; k <= std::min<std::size_t>(50, n - 1); ++k) {
    double num = 0, h = 0, t2 = 0;
    for (std::size_t t = 0; t + k < n; ++t) {
      num += (a[t] - mean) * (a[t + k] - mean);
      h += (a[t] - mean) * (a[t] - mean);
      t2 += (a[t + k] - mean) * (a[t + k] - mean);
    }
    const double r = (h > 0 && t2 > 0) ? num / std::sqrt(h * t2) : 0.0;
    best_r = std::max(best_r, r);
  }
  f.periodicity = best_r;
  return f;
}

}  // namespace oracle
