#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "parasitometrics/error.hpp"

namespace parasitometrics {

struct PmfPoint {
  long long k = 0;
  double probability = 0.0;
};

inline double poisson_log_pmf(long long k, double lambda) {
  if (lambda == 0.0) return k == 0 ? 0.0 : -INFINITY;
  const double kd = static_cast<double>(k);
  return kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0);
}

/// Pr[count = k] for k = 0..k_max with lambda = P V, evaluated in log space.
/// Without k_max the support runs to the first k with cumulative >= 1 - 1e-9.
inline std::vector<PmfPoint> count_pmf(double P, double V, std::optional<long long> k_max = std::nullopt) {
  if (!(P >= 0.0) || !std::isfinite(P) || !(V > 0.0) || !std::isfinite(V)) {
    fail(ErrorCode::kInvalidInput, "count_pmf needs P >= 0 and V > 0");
  }
  if (k_max && *k_max < 0) fail(ErrorCode::kInvalidInput, "k_max must be >= 0");
  const double lambda = P * V;
  std::vector<PmfPoint> out;
  double cumulative = 0.0;
  for (long long k = 0;; ++k) {
    const double p = std::exp(poisson_log_pmf(k, lambda));
    out.push_back({k, p});
    cumulative += p;
    if (k_max) {
      if (k >= *k_max) break;
    } else if ((cumulative >= 1.0 - 1e-9 && k >= static_cast<long long>(lambda)) ||
               static_cast<double>(k) > lambda + 60.0 * std::sqrt(lambda) + 60.0) {
      break;
    }
  }
  return out;
}

/// Pr[count >= k_min] for a Poisson(lambda) count.
inline double probability_at_least(long long k_min, double lambda) {
  if (k_min <= 0) return 1.0;
  if (lambda <= 0.0) return 0.0;
  return boost::math::gamma_p(static_cast<double>(k_min), lambda);
}

/// Smallest examined volume (cV) with Pr[count >= k_min] >= confidence at
/// parasitemia P, by bisection on V.
inline double min_volume_for_detection(double P, long long k_min, double confidence) {
  if (!(P > 0.0) || !std::isfinite(P)) fail(ErrorCode::kInvalidInput, "P must be > 0");
  if (k_min < 1) fail(ErrorCode::kInvalidInput, "k_min must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) fail(ErrorCode::kInvalidInput, "confidence must be in (0,1)");
  auto ok = [&](double V) { return probability_at_least(k_min, P * V) >= confidence; };
  double hi = 1.0 / P;
  while (!ok(hi)) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200 && (hi - lo) > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Coefficient of variation of the Poisson count: the irreducible relative
/// quantitation error 1 / sqrt(P V).
inline double quantitation_relative_poisson_error(double P, double V) {
  if (!(P > 0.0) || !(V > 0.0)) fail(ErrorCode::kInvalidInput, "P and V must be > 0");
  return 1.0 / std::sqrt(P * V);
}

struct PoissonCurve {
  double parasitemia = 0.0;
  std::vector<double> volumes;
  std::vector<std::vector<PmfPoint>> pmf_points;
};

inline PoissonCurve poisson_curves(double P, const std::vector<double>& volumes) {
  PoissonCurve c;
  c.parasitemia = P;
  c.volumes = volumes;
  for (double v : volumes) c.pmf_points.push_back(count_pmf(P, v));
  return c;
}

}  // namespace parasitometrics
