#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parasitometrics/datamodel.hpp"
#include "parasitometrics/metrics.hpp"

namespace parasitometrics {

struct ExpectedRates {
  double F_hat = 0.0;  // expected FPR per cV
  double S_hat = 1.0;  // expected object sensitivity
};

inline void validate_rates(const ExpectedRates& r) {
  if (!(r.F_hat >= 0.0) || !std::isfinite(r.F_hat)) fail(ErrorCode::kInvalidRates, "F_hat must be finite and >= 0");
  if (!(r.S_hat > 0.0 && r.S_hat <= 1.0)) fail(ErrorCode::kInvalidRates, "S_hat must be in (0,1]");
}

struct ParasitemiaEstimate {
  double P_hat = 0.0;
  double raw = 0.0;
  bool negative_estimate = false;  // raw value was below zero and was clamped
};

/// P_hat = (n / V - F_hat) / S_hat, clamped at zero.
inline ParasitemiaEstimate estimate_parasitemia(double n, double examined_volume, const ExpectedRates& rates) {
  validate_rates(rates);
  if (!(examined_volume > 0.0)) fail(ErrorCode::kInvalidInput, "examined_volume must be > 0");
  if (!(n >= 0.0)) fail(ErrorCode::kInvalidInput, "object count must be >= 0");
  ParasitemiaEstimate e;
  e.raw = (n / examined_volume - rates.F_hat) / rates.S_hat;
  e.negative_estimate = e.raw < 0.0;
  e.P_hat = e.negative_estimate ? 0.0 : e.raw;
  return e;
}

/// Counting-error figure of merit sigma(S)/mu(S) + sigma(F)/(mu(S) P).
inline double quant_fom(double mu_S, double sigma_S, double sigma_F, double P) {
  if (!(mu_S > 0.0)) fail(ErrorCode::kZeroSensitivity, "mu(S) must be > 0");
  if (!(P > 0.0)) fail(ErrorCode::kNonpositiveParasitemia, "parasitemia must be > 0");
  return sigma_S / mu_S + sigma_F / (mu_S * P);
}

inline double quant_fom(const MetricDistribution& S, const MetricDistribution& F, double P) {
  return quant_fom(S.summary.mean, S.summary.stddev, F.summary.stddev, P);
}

struct VolumeErrorDecomposition {
  double P_hat_oracle_volume = 0.0;
  double volume_error_factor = 0.0;  // wbc_true / wbc_estimated
};

/// Rescales an estimate made with a WBC-derived volume to the estimate an
/// oracle WBC count would have given.
inline VolumeErrorDecomposition volume_error_decomposition(int wbc_true, int wbc_estimated, double P_hat) {
  if (wbc_true <= 0 || wbc_estimated <= 0) fail(ErrorCode::kZeroWbc, "WBC counts must be > 0");
  VolumeErrorDecomposition d;
  d.volume_error_factor = static_cast<double>(wbc_true) / static_cast<double>(wbc_estimated);
  d.P_hat_oracle_volume = P_hat * static_cast<double>(wbc_estimated) / static_cast<double>(wbc_true);
  return d;
}

// Uses the patient's recorded wbc_count as the estimate behind V; absent when
// the record carries no WBC count.
inline std::optional<VolumeErrorDecomposition> volume_error_decomposition(const PatientRecord& patient,
                                                                          int wbc_true, double P_hat) {
  if (!patient.wbc_count) return std::nullopt;
  return volume_error_decomposition(wbc_true, *patient.wbc_count, P_hat);
}

/// R^2 of an ordinary least-squares line with intercept.
inline double r_squared(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::kInvalidInput, "R^2 needs >= 2 paired values");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return 0.0;
  if (syy == 0.0) return 1.0;
  return (sxy * sxy) / (sxx * syy);
}

struct QuantPatient {
  double P_true = 0.0;
  double P_hat = 0.0;
  double rel_error = 0.0;
  bool negative_estimate = false;
};

struct BlandAltmanPoint {
  std::string patient_id;
  double mean_log = 0.0;
  double diff_log = 0.0;
};

inline constexpr double kLogFloor = 0.1;  // per cV, applied to P_hat before log10

inline constexpr std::string_view kLinearR2Note =
    "linear-scale R^2 across parasitemias spanning orders of magnitude is dominated by the "
    "highest samples and can give an illusion of strong fit; prefer the log-scale R^2 and "
    "Bland-Altman pairs";

struct QuantResult {
  std::map<std::string, QuantPatient> per_patient;
  std::vector<BlandAltmanPoint> bland_altman;
  double r2_linear = 0.0;
  double r2_log = 0.0;
  double rel_error_mean = 0.0;
  double rel_error_std = 0.0;
  std::string note{kLinearR2Note};
};

inline QuantResult quant_report(const CohortDataset& cohort, const OperatingPoint& op,
                                const ExpectedRates& rates) {
  validate_operating_point(op);
  validate_rates(rates);
  QuantResult r;
  std::vector<double> p_true, p_hat, log_true, log_hat, errs;
  for (const auto& p : cohort.patients()) {
    if (!p.positive() || !(p.true_parasitemia > 0.0)) continue;
    const auto c = patient_counts(p, op.C);
    const auto est = estimate_parasitemia(static_cast<double>(c.tp + c.fp), p.examined_volume, rates);
    QuantPatient q{p.true_parasitemia, est.P_hat, (est.P_hat - p.true_parasitemia) / p.true_parasitemia,
                   est.negative_estimate};
    r.per_patient[p.patient_id] = q;
    const double lh = std::log10(std::max(est.P_hat, kLogFloor));
    const double lt = std::log10(p.true_parasitemia);
    r.bland_altman.push_back({p.patient_id, (lh + lt) / 2.0, lh - lt});
    p_true.push_back(q.P_true);
    p_hat.push_back(q.P_hat);
    log_true.push_back(lt);
    log_hat.push_back(lh);
    errs.push_back(q.rel_error);
  }
  if (r.per_patient.size() < 2) {
    fail(ErrorCode::kInsufficientPositives, "quantitation report needs >= 2 positive patients");
  }
  r.r2_linear = r_squared(p_true, p_hat);
  r.r2_log = r_squared(log_true, log_hat);
  const auto s = summarize(errs);
  r.rel_error_mean = s.mean;
  r.rel_error_std = s.stddev;
  return r;
}

}  // namespace parasitometrics
