#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace swn::stats {

/// Compensated summation. Experiments reduce per-trial results with this in a
/// fixed order so reports are bit-identical at any worker count.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty sample");
  KahanSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

/// Unbiased sample variance (two-pass, compensated).
inline double sample_variance(const std::vector<double>& v, double mu) {
  if (v.size() < 2)
    throw std::invalid_argument("sample_variance: need at least 2 points");
  KahanSum s;
  for (double x : v) s.add((x - mu) * (x - mu));
  return s.value() / static_cast<double>(v.size() - 1);
}

/// Standard error of the sample mean.
inline double std_error(const std::vector<double>& v, double mu) {
  return std::sqrt(sample_variance(v, mu) / static_cast<double>(v.size()));
}

/// Kolmogorov-Smirnov statistic of an ascending sample against a CDF.
template <class Cdf>
double ks_statistic_sorted(const std::vector<double>& sorted, Cdf&& cdf) {
  if (sorted.empty())
    throw std::invalid_argument("ks_statistic_sorted: empty sample");
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(f - lo), std::abs(hi - f)));
  }
  return d;
}

} // namespace swn::stats
