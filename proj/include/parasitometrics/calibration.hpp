#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "parasitometrics/datamodel.hpp"
#include "parasitometrics/metrics.hpp"
#include "parasitometrics/stats.hpp"

namespace parasitometrics {

enum class CalibrationMethod { kGaussian, kRobust, kPercentile, kManualScatter };

constexpr std::string_view calibration_method_name(CalibrationMethod m) {
  switch (m) {
    case CalibrationMethod::kGaussian: return "gaussian";
    case CalibrationMethod::kRobust: return "robust";
    case CalibrationMethod::kPercentile: return "percentile";
    case CalibrationMethod::kManualScatter: return "manual";
  }
  return "gaussian";
}

inline CalibrationMethod parse_calibration_method(std::string_view s) {
  for (auto m : {CalibrationMethod::kGaussian, CalibrationMethod::kRobust,
                 CalibrationMethod::kPercentile, CalibrationMethod::kManualScatter}) {
    if (calibration_method_name(m) == s) return m;
  }
  fail(ErrorCode::kInvalidInput, "unknown calibration method '" + std::string(s) + "'");
}

struct CalibrationConfig {
  double K = 0.95;  // target patient-level specificity
  CalibrationMethod method = CalibrationMethod::kGaussian;
  std::optional<double> beta;      // pessimistic LoD: denominator mu(S) - beta*sigma(S)
  bool plus_one = false;           // require one extra positive object per cV
  std::optional<double> manual_T;  // required by kManualScatter
};

// Coefficients of the LoD estimators: 2 x 1.65 (one clean-sample and one
// threshold excursion of 1.65 sigma each) and 1.65 for the one-sided form.
struct LodConstants {
  double gaussian = 3.3;
  double robust = 1.65;
  double breakeven_alpha = 1.65;
};

inline void validate_config(const CalibrationConfig& cfg) {
  if (!(cfg.K > 0.0 && cfg.K < 1.0)) fail(ErrorCode::kOutOfRange, "target specificity K must be in (0,1)");
  if (cfg.beta && !(*cfg.beta >= 0.0)) fail(ErrorCode::kInvalidInput, "beta must be >= 0");
}

/// Count threshold T (per cV) expected to give specificity K on negatives
/// drawn like F.
inline double calibrate_threshold(const MetricDistribution& F, const CalibrationConfig& cfg) {
  validate_config(cfg);
  const auto& s = F.summary;
  switch (cfg.method) {
    case CalibrationMethod::kGaussian:
      if (s.n < 2) fail(ErrorCode::kInsufficientPatients, "gaussian calibration needs >= 2 patients");
      return s.mean + alpha_for_specificity(cfg.K) * s.stddev;
    case CalibrationMethod::kRobust:
      if (s.n < 2) fail(ErrorCode::kInsufficientPatients, "robust calibration needs >= 2 patients");
      return s.median + alpha_for_specificity(cfg.K) * s.sigma_right;
    case CalibrationMethod::kPercentile:
      return s.percentile(cfg.K * 100.0);
    case CalibrationMethod::kManualScatter:
      if (!cfg.manual_T) fail(ErrorCode::kMissingManualT, "manual calibration requires an explicit T");
      if (!(*cfg.manual_T >= 0.0)) fail(ErrorCode::kOutOfRange, "manual T must be >= 0");
      return *cfg.manual_T;
  }
  return 0.0;
}

struct ScatterPoint {
  std::string patient_id;
  double fp_per_cv = 0.0;
};

/// Per-patient FP counts sorted ascending, for choosing T by eye.
inline std::vector<ScatterPoint> manual_scatter_export(const MetricDistribution& F) {
  std::vector<ScatterPoint> out;
  for (const auto& [id, v] : F.per_patient) out.push_back({id, v});
  std::stable_sort(out.begin(), out.end(),
                   [](const ScatterPoint& a, const ScatterPoint& b) { return a.fp_per_cv < b.fp_per_cv; });
  return out;
}

struct LodEstimate {
  double L = 0.0;  // parasites per cV
  CalibrationMethod method = CalibrationMethod::kGaussian;
  double mu_S = 0.0;  // location of S used (median for the robust method)
  double sigma_S = 0.0;
  double mu_F = 0.0;
  double sigma_F = 0.0;
  double sigma_L = 0.0;
  double sigma_R = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  bool plus_one = false;
  std::optional<double> beta;
};

/// LoD: the parasitemia at which a clean positive sample (low-FP tail of F)
/// with typical sensitivity just reaches T.
///   gaussian:   L = 3.3 sigma(F) / mu(S)
///   robust:     L = 1.65 (sigma_L(F) + sigma_R(F)) / median(S)
///   percentile / manual: L = (T - P_{1-K}(F)) / mu(S), the same breakeven
///               with the clean tail taken as the (1-K) percentile.
/// plus_one adds 1 to the numerator; beta replaces the denominator with
/// mu(S) - beta sigma(S).
inline LodEstimate estimate_lod(const MetricDistribution& F, const MetricDistribution& S,
                                const CalibrationConfig& cfg, const LodConstants& k = {}) {
  validate_config(cfg);
  const auto& f = F.summary;
  const auto& s = S.summary;
  LodEstimate e;
  e.method = cfg.method;
  e.plus_one = cfg.plus_one;
  e.beta = cfg.beta;
  e.mu_F = cfg.method == CalibrationMethod::kRobust ? f.median : f.mean;
  e.sigma_F = f.stddev;
  e.sigma_L = f.sigma_left;
  e.sigma_R = f.sigma_right;
  e.mu_S = cfg.method == CalibrationMethod::kRobust ? s.median : s.mean;
  e.sigma_S = s.stddev;

  switch (cfg.method) {
    case CalibrationMethod::kGaussian:
      if (f.n < 2) fail(ErrorCode::kInsufficientPatients, "LoD needs >= 2 negative patients");
      e.numerator = k.gaussian * f.stddev;
      break;
    case CalibrationMethod::kRobust:
      if (f.n < 2) fail(ErrorCode::kInsufficientPatients, "LoD needs >= 2 negative patients");
      e.numerator = k.robust * (f.sigma_left + f.sigma_right);
      break;
    case CalibrationMethod::kPercentile:
    case CalibrationMethod::kManualScatter: {
      const double T = calibrate_threshold(F, cfg);
      e.numerator = std::max(0.0, T - f.percentile((1.0 - cfg.K) * 100.0));
      break;
    }
  }
  // L must be positive; a clean, spread-free F gives 0 unless one object is required.
  if (!(e.numerator > 0.0) && !cfg.plus_one) {
    fail(ErrorCode::kZeroFprSpread, "FPR spread is zero so the LoD is 0; use plus_one");
  }
  if (cfg.plus_one) e.numerator += 1.0;
  e.denominator = e.mu_S - (cfg.beta ? *cfg.beta * e.sigma_S : 0.0);
  if (!(e.denominator > 0.0)) {
    fail(ErrorCode::kZeroSensitivity, "LoD denominator (sensitivity) must be > 0");
  }
  e.L = e.numerator / e.denominator;
  return e;
}

/// Signed gap between N for a clean positive sample at parasitemia L and the
/// threshold T = mu(F) + 1.65 sigma(F). Zero for L from the gaussian LoD.
inline double lod_breakeven_check(double L, double F_mu, double F_sigma, double S_mu,
                                  const LodConstants& k = {}) {
  const double n_clean = L * S_mu + F_mu - k.breakeven_alpha * F_sigma;
  const double threshold = F_mu + k.breakeven_alpha * F_sigma;
  return n_clean - threshold;
}

struct TuningRow {
  double C = 0.0;
  bool degenerate = false;
  std::string reason;
  double T = 0.0;
  double LoD = 0.0;
  double mu_F = 0.0;
  double sigma_F = 0.0;
  double sigma_L = 0.0;
  double sigma_R = 0.0;
  double mu_S = 0.0;
};

struct TuningResult {
  OperatingPoint best;
  double best_lod = 0.0;
  std::vector<TuningRow> table;
  bool used_training_positives = false;
};

/// 101 evenly spaced values on [0,1], plus every distinct observed score when
/// there are fewer than 512 of them.
inline std::vector<double> default_c_grid(const std::vector<const CohortDataset*>& cohorts) {
  std::set<double> grid;
  for (int i = 0; i <= 100; ++i) grid.insert(i / 100.0);
  std::set<double> observed;
  for (const auto* c : cohorts) {
    if (!c) continue;
    for (const auto& p : c->patients())
      for (const auto& o : p.objects) observed.insert(o.score);
  }
  if (observed.size() < 512) grid.insert(observed.begin(), observed.end());
  return {grid.begin(), grid.end()};
}

/// Exhaustive search over C: F on validation negatives, S on validation
/// positives when given (else training positives), T from the calibration
/// method, LoD from estimate_lod. Minimum LoD wins; ties go to the larger C.
inline TuningResult tune_operating_point(const CohortDataset& train_positives,
                                         const CohortDataset& validation_negatives,
                                         const CohortDataset* validation_positives,
                                         std::vector<double> C_grid, const CalibrationConfig& cfg) {
  validate_config(cfg);
  if (validation_negatives.count(GroundTruth::kNegative) == 0) {
    fail(ErrorCode::kNoNegativePatients, "tuning requires a validation set of negative patients");
  }
  if (C_grid.empty()) fail(ErrorCode::kInvalidInput, "C grid is empty");
  for (double c : C_grid) {
    if (!(c >= 0.0 && c <= 1.0)) fail(ErrorCode::kOutOfRange, "C grid values must lie in [0,1]");
  }
  std::sort(C_grid.begin(), C_grid.end());
  C_grid.erase(std::unique(C_grid.begin(), C_grid.end()), C_grid.end());

  TuningResult r;
  r.used_training_positives = validation_positives == nullptr;
  const CohortDataset& positives = validation_positives ? *validation_positives : train_positives;
  std::optional<std::size_t> best;
  for (double C : C_grid) {
    TuningRow row;
    row.C = C;
    try {
      const auto F = fpr_distribution(validation_negatives, C, true);
      const auto S = sensitivity_distribution(positives, C);
      row.T = calibrate_threshold(F, cfg);
      const auto lod = estimate_lod(F, S, cfg);
      row.LoD = lod.L;
      row.mu_F = lod.mu_F;
      row.sigma_F = lod.sigma_F;
      row.sigma_L = lod.sigma_L;
      row.sigma_R = lod.sigma_R;
      row.mu_S = lod.mu_S;
    } catch (const Error& e) {
      if (is_input_error(e.code())) throw;
      row.degenerate = true;
      row.reason = e.what();
    }
    r.table.push_back(row);
    if (!row.degenerate && (!best || row.LoD <= r.table[*best].LoD)) best = r.table.size() - 1;
  }
  if (!best) fail(ErrorCode::kAllCandidatesDegenerate, "no C on the grid yields a finite LoD");
  r.best = {r.table[*best].C, r.table[*best].T};
  r.best_lod = r.table[*best].LoD;
  return r;
}

}  // namespace parasitometrics
