#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parasitometrics/calibration.hpp"
#include "parasitometrics/curves.hpp"
#include "parasitometrics/metrics.hpp"
#include "parasitometrics/poisson.hpp"
#include "parasitometrics/quant.hpp"
#include "parasitometrics/report.hpp"
#include "parasitometrics/simulator.hpp"
#include "parasitometrics/stats.hpp"

namespace parasitometrics::checks {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

inline Check near(std::string name, double value, double expected, double tol, std::string detail = {}) {
  const bool ok = std::isfinite(value) && std::abs(value - expected) <= tol;
  return {std::move(name), ok, value, expected, tol, std::move(detail)};
}

inline Check within(std::string name, double value, double lo, double hi, std::string detail = {}) {
  return {std::move(name), value >= lo && value <= hi, value, 0.5 * (lo + hi), 0.5 * (hi - lo), std::move(detail)};
}

inline Check truth(std::string name, bool ok, std::string detail = {}) {
  return {std::move(name), ok, ok ? 1.0 : 0.0, 1.0, 0.0, std::move(detail)};
}

// ---------------------------------------------------------------------------
// Monte Carlo experiments
// ---------------------------------------------------------------------------

struct CalibrationSoundness {
  double T = 0.0;
  double specificity = 0.0;
  std::size_t n = 0;
};

/// Negatives with FPR ~ Normal(50, 20) truncated at 0 and V = 1 cV. T is
/// gaussian-calibrated on their FP counts; specificity is the fraction with
/// N < T.
inline CalibrationSoundness calibration_soundness_experiment(std::uint64_t seed, std::size_t n = 2000,
                                                             double K = 0.95) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.n_negative = n;
  cfg.n_positive = 0;
  cfg.examined_volume = 1.0;
  cfg.fpr.mean = 50.0;
  cfg.fpr.sd = 20.0;
  const auto counts = simulate_counts(cfg);
  std::map<std::string, double> f;
  for (const auto& c : counts) f[c.latent.patient_id] = static_cast<double>(c.fp) / c.examined_volume;
  const auto F = make_distribution(MetricKind::kFpr, f);
  CalibrationConfig cc;
  cc.K = K;
  CalibrationSoundness r;
  r.T = calibrate_threshold(F, cc);
  r.n = counts.size();
  std::size_t ok = 0;
  for (const auto& c : counts) ok += static_cast<double>(c.fp) < r.T;
  r.specificity = static_cast<double>(ok) / static_cast<double>(r.n);
  return r;
}

struct LodMeaning {
  double T = 0.0;
  double L = 0.0;
  double sensitivity_at_L = 0.0;
  double P95 = 0.0;      // parasitemia giving 95% patient sensitivity
  double optimism = 0.0; // (L - P95) / P95; negative means L is optimistic
};

/// Sensitivity of simulated positives at the gaussian LoD, plus the
/// parasitemia that gives exactly 95% sensitivity (bisection with common
/// random numbers). Object sensitivity is fixed at 0.8.
inline LodMeaning lod_empirical_experiment(std::uint64_t seed, std::size_t n_neg = 2000, std::size_t n_pos = 4000) {
  constexpr double kS = 0.8;
  SimConfig neg;
  neg.seed = seed;
  neg.n_negative = n_neg;
  neg.n_positive = 0;
  neg.examined_volume = 1.0;
  std::map<std::string, double> f;
  for (const auto& c : simulate_counts(neg)) f[c.latent.patient_id] = static_cast<double>(c.fp);
  const auto F = make_distribution(MetricKind::kFpr, f);
  const auto S = make_distribution(MetricKind::kObjectSensitivity, {{"fixed", kS}});
  CalibrationConfig cc;
  LodMeaning r;
  r.T = calibrate_threshold(F, cc);
  r.L = estimate_lod(F, S, cc).L;

  SimConfig pos = neg;
  pos.seed = seed + 1;
  pos.n_negative = 0;
  pos.n_positive = n_pos;
  pos.patient_sensitivity.type = SensitivitySpec::Type::kFixed;
  pos.patient_sensitivity.value = kS;
  pos.parasitemia.type = ParasitemiaSpec::Type::kFixed;
  auto sens_at = [&](double P) {
    pos.parasitemia.value = P;
    std::size_t hit = 0;
    const auto counts = simulate_counts(pos);
    for (const auto& c : counts) hit += static_cast<double>(c.tp + c.fp) >= r.T;
    return static_cast<double>(hit) / static_cast<double>(counts.size());
  };
  r.sensitivity_at_L = sens_at(r.L);
  double lo = 0.0, hi = std::max(r.L, 1.0);
  while (sens_at(hi) < 0.95) hi *= 2.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (sens_at(mid) >= 0.95 ? hi : lo) = mid;
  }
  r.P95 = hi;
  r.optimism = (r.L - r.P95) / r.P95;
  return r;
}

struct QuantMonteCarloPoint {
  double P = 0.0;
  double predicted = 0.0;
  double empirical = 0.0;
};

/// Relative quantitation error of the count-based estimator with known
/// expected rates (F_hat = 100, S_hat = 0.8). Patients draw FPR ~ N(100, 20)
/// and object sensitivity ~ N(0.8, 0.1), V = 1 cV.
inline std::vector<QuantMonteCarloPoint> quant_monte_carlo(std::uint64_t seed, const std::vector<double>& Ps,
                                                           std::size_t n = 4000) {
  constexpr double kMuS = 0.8, kSigmaS = 0.1, kMuF = 100.0, kSigmaF = 20.0;
  std::vector<QuantMonteCarloPoint> out;
  for (double P : Ps) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.n_negative = 0;
    cfg.n_positive = n;
    cfg.examined_volume = 1.0;
    cfg.parasitemia.type = ParasitemiaSpec::Type::kFixed;
    cfg.parasitemia.value = P;
    cfg.fpr.mean = kMuF;
    cfg.fpr.sd = kSigmaF;
    cfg.patient_sensitivity.type = SensitivitySpec::Type::kNormal;
    cfg.patient_sensitivity.mean = kMuS;
    cfg.patient_sensitivity.sd = kSigmaS;
    std::vector<double> rel;
    for (const auto& c : simulate_counts(cfg)) {
      const auto est = estimate_parasitemia(static_cast<double>(c.tp + c.fp), c.examined_volume, {kMuF, kMuS});
      rel.push_back((est.raw - P) / P);
    }
    out.push_back({P, quant_fom(kMuS, kSigmaS, kSigmaF, P), summarize(rel).stddev});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

struct ReproduceOptions {
  std::uint64_t seed = 20240601;
  LodConstants lod;  // overridable so a tampered constant can be shown to fail
};

struct Bundle {
  std::vector<Check> checks;
  std::map<std::string, std::string> artifacts;  // file name -> contents
  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
  const Check* first_failure() const {
    for (const auto& c : checks) {
      if (!c.passed) return &c;
    }
    return nullptr;
  }
};

inline std::string manifest_csv(const Bundle& b) {
  std::ostringstream os;
  csv::write_row(os, {"check", "status", "value", "expected", "tolerance", "detail"});
  for (const auto& c : b.checks) {
    csv::write_row(os, {c.name, c.passed ? "pass" : "fail", csv::format_number(c.value), csv::format_number(c.expected),
                        csv::format_number(c.tolerance), c.detail});
  }
  return os.str();
}

inline nlohmann::ordered_json manifest_json(const Bundle& b) {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& c : b.checks) {
    list.push_back({{"check", c.name}, {"passed", c.passed}, {"value", json_number(c.value)},
                    {"expected", json_number(c.expected)}, {"tolerance", c.tolerance}, {"detail", c.detail}});
  }
  return {{"schema_version", kReportSchemaVersion}, {"all_passed", b.all_passed()}, {"checks", list}};
}

namespace detail {

// Simulated cohort with a fixed distractor:parasite ratio for the sliver ROC.
inline CohortDataset sliver_cohort(std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.n_negative = 10;
  cfg.n_positive = 10;
  cfg.examined_volume = 1.0;
  cfg.parasitemia.type = ParasitemiaSpec::Type::kFixed;
  cfg.parasitemia.value = 200.0;
  cfg.background_distractor_rate = 2000.0;
  return generate_cohort(cfg);
}

}  // namespace detail

inline Bundle reproduce(const ReproduceOptions& opt = {}) {
  Bundle b;
  auto& out = b.checks;

  // Worked example: pooled vs patient-level sensitivity.
  {
    const auto cohort = pooled_vs_patient_fixture();
    const OperatingPoint op{0.5, 1.0};
    const auto pooled = pooled_object_sensitivity(cohort, op.C);
    const auto pl = patient_level_sens_spec(cohort, op, default_parasitemia_bins());
    out.push_back(near("pooled_object_sensitivity", pooled.value, 50000.0 / 50900.0, 1e-9));
    out.push_back(near("patient_level_sensitivity", pl.sensitivity.overall.value_or(NAN), 0.25, 0.0));
    out.push_back(truth("pooled_imbalance_warning", pooled.imbalance_warning.has_value()));
  }
  // Precision and its re-expression at the LoD.
  {
    const auto r = precision_f1_with_reexpression(precision_fixture(), 0.5, 100.0);
    out.push_back(near("precision_high_parasitemia", r.precision, 10000.0 / 10100.0, 1e-4));
    out.push_back(near("precision_at_lod_100", r.precision_at_lod, 0.5, 1e-9));
  }
  // AUC can be near-perfect with 50 false positives per parasite.
  {
    const auto cohort = auc_imbalance_fixture();
    const auto roc = object_roc(cohort, RocPool::kPooled).front();
    std::size_t fp = 0, par = 0;
    double min_par = 1.0;
    for (const auto& o : cohort.patients().front().objects) {
      if (o.true_label == ObjectLabel::kParasite) min_par = std::min(min_par, o.score), ++par;
    }
    for (const auto& o : cohort.patients().front().objects) {
      fp += o.true_label == ObjectLabel::kDistractor && o.score >= min_par;
    }
    out.push_back(within("auc_under_imbalance", roc.auc.value_or(0.0), 0.999, 1.0));
    out.push_back(near("fp_per_parasite_full_sensitivity", static_cast<double>(fp) / static_cast<double>(par), 50.0, 0.0));
    b.artifacts["auc_imbalance_roc.csv"] = curve_csv(roc);
  }
  // Sliver ROC.
  {
    const auto cohort = detail::sliver_cohort(opt.seed);
    const auto roc = object_roc(cohort, RocPool::kPooled).front();
    const double D = distractor_ratio(cohort);
    const auto sl = sliver_roc(roc, D);
    const bool spans = !sl.points.empty() && sl.points.front().x == 0.0 && std::abs(sl.points.back().x - 1.0) < 1e-12;
    out.push_back(truth("sliver_roc_spans_unit_width", spans, "D=" + csv::format_number(D)));
    b.artifacts["roc_full.csv"] = curve_csv(roc);
    b.artifacts["roc_sliver.csv"] = curve_csv(sl);
  }
  // Easy distractors: AUC rises, FROC does not move.
  {
    const auto cohort = detail::sliver_cohort(opt.seed + 7);
    std::size_t d = 0, easy_total = 0;
    double min_score = 1.0;
    for (const auto& p : cohort.patients()) {
      for (const auto& o : p.objects) {
        d += o.true_label == ObjectLabel::kDistractor;
        min_score = std::min(min_score, o.score);
      }
    }
    const std::size_t n_easy = 10 * d / cohort.size();
    easy_total = n_easy * cohort.size();
    const auto r = easy_distractor_experiment(cohort, n_easy, 0.5 * min_score);
    const double closed = 1.0 - (1.0 - r.auc_before) * static_cast<double>(d) / static_cast<double>(d + easy_total);
    out.push_back(truth("easy_distractors_raise_auc", r.auc_after > r.auc_before));
    out.push_back(near("easy_distractors_closed_form_auc", r.auc_after, closed, 1e-9));
    out.push_back(truth("easy_distractors_froc_unchanged", r.froc_unchanged));
    b.artifacts["easy_roc_before.csv"] = curve_csv(r.roc_before);
    b.artifacts["easy_roc_after.csv"] = curve_csv(r.roc_after);
  }
  // Normal quantile and calibration soundness.
  {
    out.push_back(near("alpha_K_0.95", alpha_for_specificity(0.95), 1.6448536269514722, 1e-9));
    const auto cs = calibration_soundness_experiment(opt.seed);
    out.push_back(within("gaussian_calibration_specificity", cs.specificity, 0.93, 0.97,
                         "T=" + csv::format_number(cs.T)));
  }
  // LoD: breakeven identity, scale equivariance, point values.
  {
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0, worst_scale = 0.0;
    CalibrationConfig cc;
    for (int i = 0; i < 100; ++i) {
      const double mu_f = 1.0 + 200.0 * u(rng), sd_f = 0.5 + 50.0 * u(rng), mu_s = 0.05 + 0.95 * u(rng);
      // Two-point samples realize any (mean, population std) exactly.
      const auto F = make_distribution(MetricKind::kFpr, {{"a", mu_f - sd_f}, {"b", mu_f + sd_f}});
      const auto S = make_distribution(MetricKind::kObjectSensitivity, {{"a", mu_s}});
      const auto e = estimate_lod(F, S, cc, opt.lod);
      const double res = lod_breakeven_check(e.L, e.mu_F, e.sigma_F, e.mu_S);
      worst = std::max(worst, std::abs(res) / std::max(1.0, e.mu_F + e.sigma_F));
      const double c = 0.25 + 4.0 * u(rng);
      const auto Fc = make_distribution(MetricKind::kFpr, {{"a", c * (mu_f - sd_f)}, {"b", c * (mu_f + sd_f)}});
      const auto ec = estimate_lod(Fc, S, cc, opt.lod);
      worst_scale = std::max(worst_scale, std::abs(ec.L - c * e.L) / std::max(1.0, c * e.L));
    }
    out.push_back(near("lod_breakeven_identity", worst, 0.0, 1e-12));
    out.push_back(near("lod_scale_equivariance", worst_scale, 0.0, 1e-12));

    const auto F = make_distribution(MetricKind::kFpr, {{"a", 30.0}, {"b", 70.0}});
    const auto S = make_distribution(MetricKind::kObjectSensitivity, {{"a", 0.66}});
    out.push_back(near("lod_gaussian_point", estimate_lod(F, S, cc, opt.lod).L, 100.0, 1e-9));
    const auto F0 = make_distribution(MetricKind::kFpr, {{"a", 0.0}, {"b", 0.0}});
    const auto S1 = make_distribution(MetricKind::kObjectSensitivity, {{"a", 1.0}});
    CalibrationConfig p1;
    p1.plus_one = true;
    out.push_back(near("lod_plus_one_clean", estimate_lod(F0, S1, p1, opt.lod).L, 1.0, 1e-12));
    CalibrationConfig rb;
    rb.method = CalibrationMethod::kRobust;
    const double a = 5.0 * std::sqrt(2.0), c = 20.0 * std::sqrt(2.0);
    const auto Fr = make_distribution(MetricKind::kFpr, {{"a", 50.0 - a}, {"b", 50.0}, {"c", 50.0 + c}});
    const auto Sr = make_distribution(MetricKind::kObjectSensitivity, {{"a", 0.5}});
    out.push_back(near("lod_robust_point", estimate_lod(Fr, Sr, rb, opt.lod).L, 82.5, 1e-9));

    const auto lm = lod_empirical_experiment(opt.seed);
    out.push_back(within("lod_empirical_sensitivity", lm.sensitivity_at_L, 0.80, 1.0,
                         "L=" + csv::format_number(lm.L) + " P95=" + csv::format_number(lm.P95) +
                             " optimism=" + csv::format_number(lm.optimism)));
  }
  // Robust statistics.
  {
    const auto s = summarize(std::vector<double>{1, 2, 3, 10});
    out.push_back(near("sigma_left_1_2_3_10", s.sigma_left, 1.118033988749895, 1e-5));
    out.push_back(near("sigma_right_1_2_3_10", s.sigma_right, 5.315072906367325, 1e-5));
  }
  // Quantitation.
  {
    out.push_back(near("count_estimator_point", estimate_parasitemia(60, 0.05, {100.0, 0.8}).P_hat, 1375.0, 1e-9));
    out.push_back(near("quant_fom_point", quant_fom(0.8, 0.1, 20.0, 1000.0), 0.15, 1e-12));
    for (const auto& q : quant_monte_carlo(opt.seed, {200.0, 2000.0, 20000.0})) {
      out.push_back(within("quant_fom_monte_carlo_P" + csv::format_number(q.P), q.empirical, 0.75 * q.predicted,
                           1.25 * q.predicted, "predicted=" + csv::format_number(q.predicted)));
    }
  }
  // Poisson sampling.
  {
    out.push_back(near("p0_P100_V0.001", count_pmf(100, 0.001, 0).front().probability, 0.90484, 1e-5));
    out.push_back(near("p0_P100_V0.01", count_pmf(100, 0.01, 0).front().probability, 0.36788, 1e-5));
    out.push_back(near("p0_P100_V0.05", count_pmf(100, 0.05, 0).front().probability, 6.7379e-3, 1e-7));
    out.push_back(near("min_volume_P100_k1", min_volume_for_detection(100, 1, 1.0 - std::exp(-1.0)), 0.01, 1e-6));
    const auto curves = poisson_curves(100.0, {0.001, 0.01, 0.05, 0.1});
    b.artifacts["poisson_P100.csv"] = poisson_csv(curves);
  }
  // Reference-threshold constants and the WHO preset.
  {
    out.push_back(near("wbc_per_parasite_at_lod", kWbcPerParasiteAtReferenceLod, 80.0, 0.0));
    const auto who = generate_cohort(who56_preset(opt.seed));
    bool in_range = who.count(GroundTruth::kPositive) == 20 && who.count(GroundTruth::kNegative) == 20;
    for (const auto& p : who.patients()) {
      if (p.ground_truth == GroundTruth::kPositive) in_range &= p.true_parasitemia >= 80 && p.true_parasitemia <= 200;
    }
    out.push_back(truth("who56_preset_structure", in_range));
  }
  b.artifacts["manifest.csv"] = manifest_csv(b);
  b.artifacts["manifest.json"] = manifest_json(b).dump(2) + "\n";
  return b;
}

}  // namespace parasitometrics::checks
