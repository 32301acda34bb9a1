#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "parasitometrics/error.hpp"

namespace parasitometrics {

namespace detail {

// Linear interpolation between order statistics at position (n-1)*q/100.
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorCode::kEmptyInput, "percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) fail(ErrorCode::kOutOfRange, "percentile q must be in [0,100]");
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Location, spread and one-sided spreads of a sample. One-sided deviations
/// reflect the points on one side of the median (median-equal points belong to
/// both sides) and take the RMS distance from the median. All standard
/// deviations use the population (divide by n) convention.
class DistSummary {
 public:
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  double sigma_left = 0.0;
  double sigma_right = 0.0;

  double percentile(double q) const { return detail::percentile_sorted(sorted_, q); }
  const std::vector<double>& sorted_values() const { return sorted_; }

 private:
  friend DistSummary summarize(std::span<const double> values);
  std::vector<double> sorted_;
};

inline DistSummary summarize(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::kEmptyInput, "cannot summarize an empty sample");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFiniteInput, "sample contains a non-finite value");
  }
  DistSummary s;
  s.sorted_.assign(values.begin(), values.end());
  std::sort(s.sorted_.begin(), s.sorted_.end());
  const auto& x = s.sorted_;
  s.n = x.size();
  const double n = static_cast<double>(s.n);

  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);

  const std::size_t mid = s.n / 2;
  s.median = (s.n % 2 == 1) ? x[mid] : 0.5 * (x[mid - 1] + x[mid]);

  double left = 0.0, right = 0.0;
  std::size_t n_left = 0, n_right = 0;
  for (double v : x) {
    const double d2 = (v - s.median) * (v - s.median);
    if (v <= s.median) {
      left += d2;
      ++n_left;
    }
    if (v >= s.median) {
      right += d2;
      ++n_right;
    }
  }
  s.sigma_left = std::sqrt(left / static_cast<double>(n_left));
  s.sigma_right = std::sqrt(right / static_cast<double>(n_right));
  return s;
}

inline DistSummary summarize(const std::vector<double>& values) {
  return summarize(std::span<const double>(values));
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal quantile: alpha with Phi(alpha) = K.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by one
/// Halley refinement step against erfc, which brings the result to near full
/// double precision over (0,1).
inline double alpha_for_specificity(double K) {
  if (!(K > 0.0 && K < 1.0)) fail(ErrorCode::kOutOfRange, "target specificity K must be in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (K < p_low) {
    const double q = std::sqrt(-2.0 * std::log(K));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (K <= 1.0 - p_low) {
    const double q = K - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-K));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (K == 0.5) return 0.0;
  const double e = standard_normal_cdf(x) - K;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

}  // namespace parasitometrics
