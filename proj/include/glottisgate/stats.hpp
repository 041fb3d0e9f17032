#pragma once

// Two-sided Mann-Whitney U (normal approximation with tie-corrected variance
// and continuity correction, or exact permutation distribution), Fisher's
// exact test for 2x2 tables, and the sex-stratified Healthy vs Pathological
// feature report.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glottisgate/error.hpp"
#include "glottisgate/gaw.hpp"

namespace glottisgate {

enum class MannWhitneyMethod { Asymptotic, Exact };

struct MannWhitneyResult {
  /// U statistic of the first sample.
  double u = 0.0;
  /// U statistic of the second sample; u + u_other = n1 * n2.
  double u_other = 0.0;
  double p_two_sided = 1.0;
  /// Tail probability in the observed direction.
  double p_one_sided = 1.0;
};

namespace detail {

/// Midranks (1-based) of the pooled sample and the tie term sum(t^3 - t).
inline std::vector<double> midranks(std::span<const double> pooled, double& tie_term) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  return ranks;
}

/// Exact null distribution of twice the rank sum of an n1-subset, by dynamic
/// programming over the pooled (doubled, hence integral) midranks.
/// Returns counts indexed by doubled rank sum.
inline std::vector<long double> rank_sum_distribution(std::span<const double> ranks,
                                                      std::size_t n1) {
  std::vector<int> r2(ranks.size());
  int total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    r2[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
    total += r2[i];
  }
  // counts[k][s]: subsets of size k with doubled rank sum s.
  std::vector<std::vector<long double>> counts(n1 + 1,
                                               std::vector<long double>(static_cast<std::size_t>(total) + 1, 0.0L));
  counts[0][0] = 1.0L;
  for (int r : r2) {
    for (std::size_t k = n1; k >= 1; --k) {
      auto& dst = counts[k];
      const auto& src = counts[k - 1];
      for (int s = total; s >= r; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
    }
  }
  return counts[n1];
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

inline MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                        MannWhitneyMethod method = MannWhitneyMethod::Asymptotic) {
  if (a.empty() || b.empty()) throw InvalidInput("mann_whitney_u: both groups must be non-empty");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  double tie_term = 0.0;
  const auto ranks = detail::midranks(pooled, tie_term);
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < n1; ++i) rank_sum_a += ranks[i];

  MannWhitneyResult res;
  const double nn = static_cast<double>(n1) * static_cast<double>(n2);
  res.u = rank_sum_a - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
  res.u_other = nn - res.u;
  const double mu = nn / 2.0;

  if (method == MannWhitneyMethod::Exact) {
    if (n1 + n2 > 200) throw InvalidInput("mann_whitney_u: exact mode limited to 200 samples");
    const auto dist = detail::rank_sum_distribution(ranks, n1);
    // Work in doubled units: 2U = 2R - n1(n1+1); distance from the centre 2mu = n1 n2.
    const long double offset = static_cast<long double>(n1) * (n1 + 1);
    const long double centre2 = static_cast<long double>(n1) * n2;
    const long double obs2 = 2.0L * res.u;
    const long double obs_dev = std::fabs(obs2 - centre2);
    long double all = 0.0L, extreme = 0.0L, le = 0.0L, ge = 0.0L;
    for (std::size_t s = 0; s < dist.size(); ++s) {
      if (dist[s] == 0.0L) continue;
      const long double u2 = static_cast<long double>(s) - offset;
      all += dist[s];
      if (std::fabs(u2 - centre2) >= obs_dev - 1e-9L) extreme += dist[s];
      if (u2 <= obs2 + 1e-9L) le += dist[s];
      if (u2 >= obs2 - 1e-9L) ge += dist[s];
    }
    res.p_two_sided = std::min(1.0, static_cast<double>(extreme / all));
    res.p_one_sided = std::min(1.0, static_cast<double>(std::min(le, ge) / all));
    return res;
  }

  const double n = static_cast<double>(n1 + n2);
  const double var = nn / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    res.p_two_sided = 1.0;
    res.p_one_sided = 1.0;
    return res;
  }
  const double z = std::max(0.0, std::fabs(res.u - mu) - 0.5) / std::sqrt(var);
  res.p_one_sided = detail::normal_sf(z);
  res.p_two_sided = std::min(1.0, 2.0 * res.p_one_sided);
  return res;
}

using Table2x2 = std::array<std::array<std::int64_t, 2>, 2>;

/// Two-sided Fisher exact p: total probability of all tables with the
/// observed margins that are no more probable than the observed table.
inline double fisher_exact_2x2(const Table2x2& t) {
  for (const auto& row : t) {
    for (auto c : row) {
      if (c < 0) throw InvalidInput("fisher_exact_2x2: negative cell");
    }
  }
  const std::int64_t r0 = t[0][0] + t[0][1];
  const std::int64_t r1 = t[1][0] + t[1][1];
  const std::int64_t c0 = t[0][0] + t[1][0];
  const std::int64_t n = r0 + r1;
  if (n == 0) throw InvalidInput("fisher_exact_2x2: empty table");

  auto lfact = [](std::int64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); };
  // log P(cell[0][0] = x) under the hypergeometric null.
  const double base = lfact(r0) + lfact(r1) + lfact(c0) + lfact(n - c0) - lfact(n);
  auto logp = [&](std::int64_t x) {
    return base - lfact(x) - lfact(r0 - x) - lfact(c0 - x) - lfact(r1 - c0 + x);
  };
  const std::int64_t lo = std::max<std::int64_t>(0, c0 - r1);
  const std::int64_t hi = std::min(r0, c0);
  const double obs = logp(t[0][0]);
  // Relative tolerance guards against rounding making equal tables unequal.
  const double limit = obs + 1e-7;
  double p = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double lp = logp(x);
    if (lp <= limit) p += std::exp(lp);
  }
  return std::min(1.0, p);
}

// ---------------------------------------------------------------------------
// Cohort report

enum class ClinicalStatus { Healthy, Pathological, Excluded };
enum class Sex { F, M, Unknown };

inline std::string_view to_string(ClinicalStatus s) {
  switch (s) {
    case ClinicalStatus::Healthy: return "Healthy";
    case ClinicalStatus::Pathological: return "Pathological";
    case ClinicalStatus::Excluded: return "Excluded";
  }
  return "?";
}

inline std::string_view to_string(Sex s) {
  switch (s) {
    case Sex::F: return "F";
    case Sex::M: return "M";
    case Sex::Unknown: return "Unknown";
  }
  return "?";
}

/// Anything other than healthy/pathological (unknown, other disorders) is excluded.
inline ClinicalStatus parse_status(std::string_view s) {
  std::string lower(s);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "healthy" || lower == "h") return ClinicalStatus::Healthy;
  if (lower == "pathological" || lower == "p") return ClinicalStatus::Pathological;
  return ClinicalStatus::Excluded;
}

inline Sex parse_sex(std::string_view s) {
  if (s == "F" || s == "f" || s == "female") return Sex::F;
  if (s == "M" || s == "m" || s == "male") return Sex::M;
  return Sex::Unknown;
}

struct PatientRecord {
  std::string patient_id;
  ClinicalStatus status = ClinicalStatus::Excluded;
  Sex sex = Sex::Unknown;
  FeatureVector features;
};

struct GroupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

inline GroupSummary summarize(std::span<const double> v) {
  GroupSummary s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct FeatureComparison {
  std::string feature;
  Sex stratum = Sex::F;
  GroupSummary healthy;
  GroupSummary pathological;
  /// Absent when a group is empty in this stratum.
  std::optional<double> p;
  bool significant = false;
  /// Fewer than two subjects in a group.
  bool unreliable = false;
};

struct GroupReport {
  double alpha = 0.05;
  std::vector<Sex> strata;
  std::vector<FeatureComparison> rows;  // feature-major, stratum-minor
  /// Sex x status counts: [Healthy, Pathological] x [F, M].
  Table2x2 sex_by_status{};
  std::optional<double> sex_imbalance_p;

  const FeatureComparison& at(std::string_view feature, Sex stratum) const {
    for (const auto& r : rows) {
      if (r.feature == feature && r.stratum == stratum) return r;
    }
    throw InvalidInput("no report row for " + std::string(feature));
  }

  std::string to_csv() const;
  std::string to_text() const;
};

inline GroupReport group_report(std::span<const PatientRecord> records, double alpha = 0.05,
                                std::vector<Sex> strata = {Sex::F, Sex::M}) {
  GroupReport rep;
  rep.alpha = alpha;
  rep.strata = strata;
  for (const auto& r : records) {
    if (r.status == ClinicalStatus::Excluded || r.sex == Sex::Unknown) continue;
    const std::size_t row = r.status == ClinicalStatus::Healthy ? 0 : 1;
    const std::size_t col = r.sex == Sex::F ? 0 : 1;
    ++rep.sex_by_status[row][col];
  }
  const auto& t = rep.sex_by_status;
  if (t[0][0] + t[0][1] + t[1][0] + t[1][1] > 0) rep.sex_imbalance_p = fisher_exact_2x2(t);

  for (std::size_t f = 0; f < FeatureVector::kNames.size(); ++f) {
    for (Sex s : strata) {
      std::vector<double> h, p;
      for (const auto& r : records) {
        if (r.status == ClinicalStatus::Excluded || r.sex != s) continue;
        (r.status == ClinicalStatus::Healthy ? h : p).push_back(r.features.get(f));
      }
      FeatureComparison c;
      c.feature = FeatureVector::kNames[f];
      c.stratum = s;
      c.healthy = summarize(h);
      c.pathological = summarize(p);
      if (!h.empty() && !p.empty()) {
        c.p = mann_whitney_u(h, p).p_two_sided;
        c.significant = *c.p < alpha;
      }
      c.unreliable = h.size() < 2 || p.size() < 2;
      rep.rows.push_back(std::move(c));
    }
  }
  return rep;
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  const double a = std::fabs(v);
  if (a != 0.0 && a < 10.0) {
    std::snprintf(buf, sizeof buf, "%.3f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.1f", v);
  }
  return buf;
}

inline std::string fmt_p(const std::optional<double>& p) {
  if (!p) return "n/a";
  char buf[32];
  if (*p < 0.001) return "<0.001";
  std::snprintf(buf, sizeof buf, "%.3f", *p);
  return buf;
}

inline std::string pad_to(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace detail

inline std::string GroupReport::to_csv() const {
  std::string out =
      "feature,stratum,healthy_n,healthy_mean,healthy_std,pathological_n,pathological_mean,"
      "pathological_std,p_value,significant,unreliable\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.17g,%.17g,%zu,%.17g,%.17g,", r.feature.c_str(),
                  std::string(to_string(r.stratum)).c_str(), r.healthy.n, r.healthy.mean,
                  r.healthy.std, r.pathological.n, r.pathological.mean, r.pathological.std);
    out += buf;
    if (r.p) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.p);
      out += buf;
    }
    out += r.significant ? ",1" : ",0";
    out += r.unreliable ? ",1\n" : ",0\n";
  }
  return out;
}

/// Feature rows; per stratum the columns H mean±std, P mean±std, p.
/// Significant p-values are starred, unreliable strata marked with '!'.
inline std::string GroupReport::to_text() const {
  using detail::fmt_num;
  using detail::fmt_p;
  using detail::pad_to;
  constexpr std::size_t kFeat = 15, kCell = 20, kP = 10;
  std::string out;
  std::string head1 = pad_to("", kFeat);
  std::string head2 = pad_to("Feature", kFeat);
  for (Sex s : strata) {
    std::size_t nh = 0, np = 0;
    for (const auto& r : rows) {
      if (r.stratum == s) {
        nh = r.healthy.n;
        np = r.pathological.n;
        break;
      }
    }
    head1 += pad_to(std::string(s == Sex::F ? "Female" : "Male"), 2 * kCell + kP);
    head2 += pad_to("H (n=" + std::to_string(nh) + ")", kCell) +
             pad_to("P (n=" + std::to_string(np) + ")", kCell) + pad_to("p", kP);
  }
  out += head1 + "\n" + head2 + "\n";
  for (const auto* name : FeatureVector::kNames) {
    std::string line = pad_to(name, kFeat);
    for (Sex s : strata) {
      const auto& r = at(name, s);
      auto cell = [](const GroupSummary& g) {
        return g.n == 0 ? std::string("-") : fmt_num(g.mean) + "±" + fmt_num(g.std);
      };
      std::string p = fmt_p(r.p);
      if (r.significant) p += "*";
      if (r.unreliable) p += "!";
      // '±' is two bytes in UTF-8; pad by display width.
      auto padded = [&](const std::string& c) {
        const std::size_t extra = c.find("±") == std::string::npos ? 0 : 1;
        return pad_to(c, kCell + extra);
      };
      line += padded(cell(r.healthy)) + padded(cell(r.pathological)) + pad_to(p, kP);
    }
    out += line + "\n";
  }
  const auto& t = sex_by_status;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "Sex balance: Healthy %lldF/%lldM, Pathological %lldF/%lldM; Fisher exact p=%s\n",
                static_cast<long long>(t[0][0]), static_cast<long long>(t[0][1]),
                static_cast<long long>(t[1][0]), static_cast<long long>(t[1][1]),
                fmt_p(sex_imbalance_p).c_str());
  out += buf;
  std::snprintf(buf, sizeof buf,
                "Two-sided Mann-Whitney U, alpha=%.2f, no multiple-comparison correction. "
                "* p < alpha; ! fewer than 2 subjects in a group.\n",
                alpha);
  out += buf;
  return out;
}

}  // namespace glottisgate
