#pragma once

// Mann-Whitney U test and the two-cell comparison report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "tmpc/core.hpp"

namespace tmpc::stats {

struct EmptySample : Error {
  using Error::Error;
};

struct MissingCell : Error {
  using Error::Error;
};

struct MannWhitneyResult {
  double U_a = 0.0;  // pairs with a > b, ties counted as 1/2
  double U_b = 0.0;
  double p_two_sided = 1.0;
  double p_one_sided = 1.0;  // tail in the observed direction
  double p_greater = 1.0;    // P(U >= U_a): evidence that a tends to exceed b
  double p_less = 1.0;       // P(U <= U_a)
  bool exact = false;
};

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw EmptySample("mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1); 0 for a single value.
inline double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Midranks (1-based) of the pooled sample, plus the tie-group sizes.
inline std::vector<double> midranks(const std::vector<double>& pooled, std::vector<std::size_t>* tie_sizes = nullptr) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    if (tie_sizes) tie_sizes->push_back(j - i + 1);
    i = j + 1;
  }
  return rank;
}

namespace detail {

inline double normal_upper(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Distribution of the doubled rank sum of a size-k subset, counted over all
// C(N, k) subsets. Doubled midranks are integers, so the DP is exact.
inline std::vector<double> doubled_rank_sum_counts(const std::vector<long>& doubled, std::size_t k) {
  std::vector<long> sorted = doubled;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const long max_sum = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), 0L);
  std::vector<std::vector<double>> c(k + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  c[0][0] = 1.0;
  for (long w : doubled) {
    for (std::size_t j = k; j >= 1; --j) {
      for (long s = max_sum; s >= w; --s) c[j][static_cast<std::size_t>(s)] += c[j - 1][static_cast<std::size_t>(s - w)];
    }
  }
  return c[k];
}

}  // namespace detail

/// Two-sample U test with midranks for ties. Exact enumeration when either
/// sample has fewer than 8 values, otherwise the normal approximation with
/// tie and continuity corrections.
inline MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw EmptySample("mann_whitney_u: both samples must be nonempty");
  for (double x : a)
    if (std::isnan(x)) throw InvalidArgument("mann_whitney_u: NaN in sample");
  for (double x : b)
    if (std::isnan(x)) throw InvalidArgument("mann_whitney_u: NaN in sample");

  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> ties;
  const auto rank = midranks(pooled, &ties);

  double ra = 0.0;
  for (std::size_t i = 0; i < na; ++i) ra += rank[i];
  const double nad = static_cast<double>(na);
  const double nbd = static_cast<double>(nb);
  MannWhitneyResult r;
  r.U_a = ra - nad * (nad + 1.0) / 2.0;
  r.U_b = nad * nbd - r.U_a;

  if (std::min(na, nb) < 8) {
    r.exact = true;
    std::vector<long> doubled(rank.size());
    for (std::size_t i = 0; i < rank.size(); ++i) doubled[i] = std::lround(2.0 * rank[i]);
    const auto counts = detail::doubled_rank_sum_counts(doubled, na);
    const long obs = std::lround(2.0 * ra);
    double total = 0.0, le = 0.0, ge = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      total += counts[s];
      if (static_cast<long>(s) <= obs) le += counts[s];
      if (static_cast<long>(s) >= obs) ge += counts[s];
    }
    r.p_less = le / total;
    r.p_greater = ge / total;
  } else {
    const double n = nad + nbd;
    double tie_term = 0.0;
    for (std::size_t t : ties) {
      const double td = static_cast<double>(t);
      tie_term += td * td * td - td;
    }
    const double var = nad * nbd / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    const double mu = nad * nbd / 2.0;
    if (var <= 0.0) {
      r.p_less = r.p_greater = 1.0;
    } else {
      const double sd = std::sqrt(var);
      r.p_greater = std::min(1.0, detail::normal_upper((r.U_a - mu - 0.5) / sd));
      r.p_less = std::min(1.0, detail::normal_upper((mu - r.U_a - 0.5) / sd));
    }
  }
  r.p_one_sided = std::min(r.p_less, r.p_greater);
  r.p_two_sided = std::min(1.0, 2.0 * r.p_one_sided);
  return r;
}

/// "***", "**", "*" at p < 0.001, 0.01, 0.05; empty otherwise.
inline std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

/// Relative change of a over the baseline b, in percent.
inline double percent_change(double mean_a, double mean_b) { return (mean_a - mean_b) / mean_b * 100.0; }

struct Comparison {
  std::string metric;
  std::size_t n_a = 0, n_b = 0;
  double mean_a = 0.0, std_a = 0.0;
  double mean_b = 0.0, std_b = 0.0;
  double percent_change = 0.0;
  MannWhitneyResult test;
  std::string stars;  // from the two-sided p
};

inline Comparison compare(const std::vector<double>& a, const std::vector<double>& b, const std::string& metric) {
  if (a.empty() || b.empty()) throw MissingCell("compare: cell has no completed trials");
  Comparison c;
  c.metric = metric;
  c.n_a = a.size();
  c.n_b = b.size();
  c.mean_a = mean(a);
  c.std_a = stddev(a);
  c.mean_b = mean(b);
  c.std_b = stddev(b);
  c.percent_change = stats::percent_change(c.mean_a, c.mean_b);
  c.test = mann_whitney_u(a, b);
  c.stars = stars(c.test.p_two_sided);
  return c;
}

}  // namespace tmpc::stats
