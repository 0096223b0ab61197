// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gfz/common.hpp"

namespace gfz {

/// Campaign-suite statistics: hit counts, mean time-to-exposure with
/// timeout-censored entries recorded at the timeout value, Vargha-Delaney
/// effect size, and the Mann-Whitney U test (exact permutation distribution
/// for small samples, normal approximation with tie and continuity
/// corrections otherwise).

struct TteSample {
  std::vector<double> values;
  std::vector<bool> hit;  // parallel to values
  double timeout = 0.0;

  void add(double tte, bool was_hit) {
    if (tte > timeout)
      throw ValidationError("TTE above the timeout value");
    values.push_back(tte);
    hit.push_back(was_hit);
  }

  std::size_t hits() const {
    std::size_t n = 0;
    for (bool h : hit) n += h;
    return n;
  }
};

struct Summary {
  std::size_t runs = 0;
  double mu_tte = 0.0;
};

inline Summary summarize(const TteSample& s) {
  if (s.values.empty()) throw ValidationError("empty sample");
  double sum = 0;
  for (double v : s.values) sum += v;
  return {s.hits(), sum / static_cast<double>(s.values.size())};
}

inline double speedup(const TteSample& baseline, const TteSample& ours) {
  double mu_ours = summarize(ours).mu_tte;
  if (mu_ours == 0.0) throw ValidationError("speedup undefined: our mean TTE is zero");
  return summarize(baseline).mu_tte / mu_ours;
}

// Probability that a draw from `ours` beats (is smaller than) a draw from
// `baseline`, ties counting one half. Pairwise enumeration.
inline double a12(const std::vector<double>& ours, const std::vector<double>& baseline) {
  if (ours.empty() || baseline.empty()) throw ValidationError("empty sample");
  double wins = 0;
  for (double x : ours)
    for (double y : baseline) {
      if (x < y) wins += 1.0;
      else if (x == y) wins += 0.5;
    }
  return wins / (static_cast<double>(ours.size()) * static_cast<double>(baseline.size()));
}

namespace detail {

// U statistic oriented so larger means "ours smaller".
inline double u_statistic(const std::vector<double>& ours,
                          const std::vector<double>& baseline) {
  double u = 0;
  for (double x : ours)
    for (double y : baseline) {
      if (x < y) u += 1.0;
      else if (x == y) u += 0.5;
    }
  return u;
}

inline double exact_mw_p(const std::vector<double>& ours,
                         const std::vector<double>& baseline, double u_obs) {
  std::vector<double> pool = ours;
  pool.insert(pool.end(), baseline.begin(), baseline.end());
  const std::size_t n = pool.size(), m = ours.size();
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<long>(m), true);
  std::sort(mask.begin(), mask.end());  // lexicographically smallest arrangement

  std::uint64_t total = 0, at_least = 0;
  do {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) (mask[i] ? a : b).push_back(pool[i]);
    ++total;
    if (u_statistic(a, b) >= u_obs - 1e-9) ++at_least;
  } while (std::next_permutation(mask.begin(), mask.end()));
  return static_cast<double>(at_least) / static_cast<double>(total);
}

inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline double approx_mw_p(const std::vector<double>& ours,
                          const std::vector<double>& baseline, double u_obs) {
  const double m = static_cast<double>(ours.size());
  const double n = static_cast<double>(baseline.size());
  const double N = m + n;
  std::map<double, std::uint64_t> ties;
  for (double v : ours) ++ties[v];
  for (double v : baseline) ++ties[v];
  double tie_term = 0;
  for (const auto& [_, t] : ties) {
    double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  double var = m * n / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (var <= 0) return 1.0;  // fully tied pool, no evidence either way
  double z = (u_obs - m * n / 2.0 - 0.5) / std::sqrt(var);
  return normal_upper_tail(z);
}

}  // namespace detail

// One-sided p-value that `ours` is stochastically smaller. Exact permutation
// distribution when m + n <= 16.
inline double mann_whitney_p(const std::vector<double>& ours,
                             const std::vector<double>& baseline,
                             bool two_sided = false) {
  if (ours.empty() || baseline.empty()) throw ValidationError("empty sample");
  double u = detail::u_statistic(ours, baseline);
  double p;
  if (ours.size() + baseline.size() <= 16)
    p = detail::exact_mw_p(ours, baseline, u);
  else
    p = detail::approx_mw_p(ours, baseline, u);
  if (!two_sided) return p;
  double u_rev = detail::u_statistic(baseline, ours);
  double p_rev = (ours.size() + baseline.size() <= 16)
                     ? detail::exact_mw_p(baseline, ours, u_rev)
                     : detail::approx_mw_p(baseline, ours, u_rev);
  return std::min(1.0, 2.0 * std::min(p, p_rev));
}

// Aligned comparison table: Fuzzer, runs, muTTE, Speedup, A12, p-value.
struct ComparisonRow {
  std::string fuzzer;
  std::size_t runs = 0;
  double mu_tte = 0;
  std::optional<double> speedup;  // absent for the reference row
  std::optional<double> a12;
  std::optional<double> p_value;
};

inline std::string format_comparison_table(const std::vector<ComparisonRow>& rows,
                                           const std::string& title = "") {
  std::ostringstream out;
  if (!title.empty()) out << title << "\n";
  out << std::left << std::setw(14) << "Fuzzer" << std::right << std::setw(6) << "runs"
      << std::setw(12) << "muTTE" << std::setw(10) << "Speedup" << std::setw(8) << "A12"
      << std::setw(10) << "p-value" << "\n";
  auto num = [](std::optional<double> v, int prec) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << *v;
    return s.str();
  };
  for (const auto& r : rows) {
    out << std::left << std::setw(14) << r.fuzzer << std::right << std::setw(6) << r.runs
        << std::setw(12) << num(r.mu_tte, 2) << std::setw(10) << num(r.speedup, 2)
        << std::setw(8) << num(r.a12, 2) << std::setw(10) << num(r.p_value, 3) << "\n";
  }
  return out.str();
}

inline std::string format_comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "fuzzer,runs,mu_tte,speedup,a12,p_value\n";
  auto num = [](std::optional<double> v) {
    if (!v) return std::string("");
    std::ostringstream s;
    s << *v;
    return s.str();
  };
  for (const auto& r : rows)
    out << r.fuzzer << ',' << r.runs << ',' << r.mu_tte << ',' << num(r.speedup) << ','
        << num(r.a12) << ',' << num(r.p_value) << "\n";
  return out.str();
}

}  // namespace gfz
