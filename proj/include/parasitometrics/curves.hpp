#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parasitometrics/datamodel.hpp"
#include "parasitometrics/metrics.hpp"
#include "parasitometrics/stats.hpp"

namespace parasitometrics {

enum class CurveKind { kObjectRoc, kSliverRoc, kFroc, kPatientRoc, kPrecisionRecall };

constexpr std::string_view curve_kind_name(CurveKind k) {
  switch (k) {
    case CurveKind::kObjectRoc: return "object_roc";
    case CurveKind::kSliverRoc: return "sliver_roc";
    case CurveKind::kFroc: return "froc";
    case CurveKind::kPatientRoc: return "patient_roc";
    case CurveKind::kPrecisionRecall: return "precision_recall";
  }
  return "curve";
}

inline constexpr double kRejectAll = std::numeric_limits<double>::infinity();

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double threshold = 0.0;
};

/// Points are ordered by threshold descending, so x is non-decreasing. The
/// reject-all sentinel carries threshold +inf.
struct CurvePoints {
  CurveKind kind = CurveKind::kObjectRoc;
  std::string label;
  std::vector<CurvePoint> points;
  std::optional<double> auc;
  std::vector<CurvePoint> reference_line;
};

struct ScoredObject {
  double score = 0.0;
  bool parasite = false;
};

// Area under a piecewise-linear curve, x assumed non-decreasing.
inline double trapezoid_area(const std::vector<CurvePoint>& pts) {
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
  }
  return area;
}

/// Mann-Whitney estimate of P(parasite score > distractor score), ties
/// counted one half via midranks.
inline double auc_rank_statistic(std::span<const double> parasite_scores,
                                 std::span<const double> distractor_scores) {
  if (parasite_scores.empty() || distractor_scores.empty()) {
    fail(ErrorCode::kDegenerateClasses, "AUC needs at least one parasite and one distractor");
  }
  struct Item {
    double score;
    bool parasite;
  };
  std::vector<Item> all;
  all.reserve(parasite_scores.size() + distractor_scores.size());
  for (double s : parasite_scores) all.push_back({s, true});
  for (double s : distractor_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      pos_in_group += all[j].parasite ? 1 : 0;
      ++j;
    }
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    rank_sum += midrank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double np = static_cast<double>(parasite_scores.size());
  const double nd = static_cast<double>(distractor_scores.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nd);
}

/// Step ROC over distinct scores plus the reject-all and accept-all sentinels;
/// tied objects switch state together.
inline CurvePoints roc_from_objects(std::vector<ScoredObject> objects, std::string label = "pooled") {
  std::int64_t n_pos = 0, n_neg = 0;
  for (const auto& o : objects) (o.parasite ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) {
    fail(ErrorCode::kDegenerateClasses, "ROC needs at least one parasite and one distractor object");
  }
  std::sort(objects.begin(), objects.end(),
            [](const ScoredObject& a, const ScoredObject& b) { return a.score > b.score; });
  CurvePoints c;
  c.kind = CurveKind::kObjectRoc;
  c.label = std::move(label);
  c.points.push_back({0.0, 0.0, kRejectAll});
  std::int64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < objects.size();) {
    const double s = objects[i].score;
    while (i < objects.size() && objects[i].score == s) {
      (objects[i].parasite ? tp : fp) += 1;
      ++i;
    }
    c.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                        static_cast<double>(tp) / static_cast<double>(n_pos), s});
  }
  if (c.points.back().threshold > 0.0) c.points.push_back({1.0, 1.0, 0.0});
  c.auc = trapezoid_area(c.points);
  return c;
}

enum class RocPool { kPooled, kPerPatient };

inline std::vector<ScoredObject> scored_objects(const PatientRecord& p) {
  std::vector<ScoredObject> v;
  v.reserve(p.objects.size());
  for (const auto& o : p.objects) v.push_back({o.score, o.true_label == ObjectLabel::kParasite});
  return v;
}

inline std::vector<ScoredObject> scored_objects(const CohortDataset& cohort) {
  std::vector<ScoredObject> v;
  for (const auto& p : cohort.patients()) {
    auto part = scored_objects(p);
    v.insert(v.end(), part.begin(), part.end());
  }
  return v;
}

/// Pooled mode returns one curve. Per-patient mode returns one curve for each
/// patient holding both classes of object; other patients are skipped.
inline std::vector<CurvePoints> object_roc(const CohortDataset& cohort, RocPool pool) {
  if (pool == RocPool::kPooled) return {roc_from_objects(scored_objects(cohort))};
  std::vector<CurvePoints> out;
  for (const auto& p : cohort.patients()) {
    auto objs = scored_objects(p);
    const bool has_pos = std::any_of(objs.begin(), objs.end(), [](auto& o) { return o.parasite; });
    const bool has_neg = std::any_of(objs.begin(), objs.end(), [](auto& o) { return !o.parasite; });
    if (has_pos && has_neg) out.push_back(roc_from_objects(std::move(objs), p.patient_id));
  }
  if (out.empty()) fail(ErrorCode::kDegenerateClasses, "no patient holds both parasite and distractor objects");
  return out;
}

/// Distractor-to-parasite object ratio of a cohort.
inline double distractor_ratio(const CohortDataset& cohort) {
  std::int64_t pos = 0, neg = 0;
  for (const auto& p : cohort.patients())
    for (const auto& o : p.objects) (o.true_label == ObjectLabel::kParasite ? pos : neg) += 1;
  if (pos == 0 || neg == 0) fail(ErrorCode::kDegenerateClasses, "ratio needs both object classes");
  return static_cast<double>(neg) / static_cast<double>(pos);
}

/// Keeps the leftmost FP-fraction sliver [0, 1/D] and stretches it by D. On the
/// result, the y = x diagonal holds operating points with equal TP and FP
/// counts.
inline CurvePoints sliver_roc(const CurvePoints& roc, double D) {
  if (!(D > 0.0) || !std::isfinite(D)) fail(ErrorCode::kInvalidRatio, "sliver ratio D must be finite and > 0");
  const double cut = 1.0 / D;
  CurvePoints out;
  out.kind = CurveKind::kSliverRoc;
  out.label = roc.label;
  for (std::size_t i = 0; i < roc.points.size(); ++i) {
    const auto& p = roc.points[i];
    if (p.x <= cut) {
      out.points.push_back({p.x * D, p.y, p.threshold});
      continue;
    }
    if (i > 0 && roc.points[i - 1].x < cut) {
      const auto& q = roc.points[i - 1];
      const double t = (cut - q.x) / (p.x - q.x);
      out.points.push_back({1.0, q.y + t * (p.y - q.y), p.threshold});
    }
    break;
  }
  out.auc = trapezoid_area(out.points);
  out.reference_line = {{0.0, 0.0, kRejectAll}, {1.0, 1.0, 0.0}};
  return out;
}

struct FrocResult {
  CurvePoints curve;
  std::vector<double> grid;
  std::vector<double> grid_sensitivity;
  std::vector<std::string> warnings;
};

enum class FrocSensitivity { kPooled, kPerPatientMean };

inline std::vector<double> interpolate_step(const CurvePoints& curve, const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) {
    double best = 0.0;
    for (const auto& p : curve.points) {
      if (p.x <= g) best = std::max(best, p.y);
    }
    out.push_back(best);
  }
  return out;
}

/// FROC: object sensitivity against mean false positives per cV on negative
/// patients, swept over every distinct score. Thresholds at or below
/// `min_threshold_exclusive` are omitted. Grid values are the best sensitivity
/// reachable without exceeding each FP/cV budget.
inline FrocResult froc(const CohortDataset& cohort, const std::vector<double>& fp_grid,
                       FrocSensitivity mode = FrocSensitivity::kPooled,
                       double min_threshold_exclusive = -1.0) {
  for (std::size_t i = 0; i < fp_grid.size(); ++i) {
    if (!(fp_grid[i] > 0.0) || (i && !(fp_grid[i] > fp_grid[i - 1]))) {
      fail(ErrorCode::kInvalidInput, "FROC grid must be positive and strictly ascending");
    }
  }
  FrocResult r;
  const auto& patients = cohort.patients();
  bool have_neg = cohort.count(GroundTruth::kNegative) > 0;
  if (!have_neg) r.warnings.push_back("no negative patients; FROC x-axis uses positive patients");

  struct Obj {
    double score;
    std::size_t patient;
    bool parasite;
  };
  std::vector<Obj> objs;
  std::vector<std::int64_t> n_par(patients.size(), 0);
  std::int64_t total_par = 0;
  std::size_t n_fp_patients = 0, n_sens_patients = 0;
  for (std::size_t i = 0; i < patients.size(); ++i) {
    const auto& p = patients[i];
    for (const auto& o : p.objects) {
      const bool par = o.true_label == ObjectLabel::kParasite;
      objs.push_back({o.score, i, par});
      n_par[i] += par ? 1 : 0;
    }
    total_par += n_par[i];
    if (p.positive() && n_par[i] > 0) ++n_sens_patients;
    if (p.positive() != have_neg) ++n_fp_patients;
  }
  if (total_par == 0) fail(ErrorCode::kDegenerateClasses, "FROC needs parasite objects");
  std::stable_sort(objs.begin(), objs.end(), [](const Obj& a, const Obj& b) { return a.score > b.score; });

  auto& c = r.curve;
  c.kind = CurveKind::kFroc;
  c.label = mode == FrocSensitivity::kPooled ? "pooled" : "per_patient_mean";
  c.points.push_back({0.0, 0.0, kRejectAll});
  double fp_sum = 0.0;    // sum over FP-eligible patients of fp / V
  double sens_sum = 0.0;  // sum over positive patients of tp / n_par
  std::int64_t tp_total = 0;
  for (std::size_t i = 0; i < objs.size();) {
    const double s = objs[i].score;
    if (s <= min_threshold_exclusive) break;
    while (i < objs.size() && objs[i].score == s) {
      const auto& o = objs[i];
      const auto& p = patients[o.patient];
      if (o.parasite) {
        ++tp_total;
        sens_sum += 1.0 / static_cast<double>(n_par[o.patient]);
      } else if (p.positive() != have_neg) {
        fp_sum += 1.0 / p.examined_volume;
      }
      ++i;
    }
    const double x = fp_sum / static_cast<double>(n_fp_patients);
    const double y = mode == FrocSensitivity::kPooled
                         ? static_cast<double>(tp_total) / static_cast<double>(total_par)
                         : sens_sum / static_cast<double>(n_sens_patients);
    c.points.push_back({x, y, s});
  }
  if (min_threshold_exclusive < 0.0 && c.points.back().threshold > 0.0) {
    auto last = c.points.back();
    last.threshold = 0.0;
    c.points.push_back(last);
  }
  r.grid = fp_grid;
  r.grid_sensitivity = interpolate_step(c, fp_grid);
  return r;
}

struct PatientRocResult {
  CurvePoints curve;
  std::vector<bool> salient;  // specificity >= 0.9
  DistSummary parasitemia;    // of the positive patients the curve depends on
  std::vector<double> parasitemia_values;
};

/// Patient-level ROC over count thresholds T at fixed C. The sentinels T = 0
/// (all called positive) and T = +inf (none) are always included.
inline PatientRocResult patient_roc(const CohortDataset& cohort, double C, std::vector<double> T_grid) {
  const auto n_pos = cohort.count(GroundTruth::kPositive);
  const auto n_neg = cohort.count(GroundTruth::kNegative);
  if (n_pos == 0 || n_neg == 0) fail(ErrorCode::kDegenerateClasses, "patient ROC needs positive and negative patients");
  T_grid.push_back(0.0);
  T_grid.push_back(kRejectAll);
  for (double t : T_grid) {
    if (std::isnan(t) || t < 0.0) fail(ErrorCode::kInvalidInput, "T grid values must be >= 0");
  }
  std::sort(T_grid.begin(), T_grid.end(), std::greater<>());
  T_grid.erase(std::unique(T_grid.begin(), T_grid.end()), T_grid.end());

  std::vector<std::pair<double, bool>> n_by_patient;
  PatientRocResult r;
  for (const auto& p : cohort.patients()) {
    n_by_patient.emplace_back(patient_counts(p, C).N, p.positive());
    if (p.positive()) r.parasitemia_values.push_back(p.true_parasitemia);
  }
  r.parasitemia = summarize(r.parasitemia_values);
  auto& c = r.curve;
  c.kind = CurveKind::kPatientRoc;
  c.label = "C=" + std::to_string(C);
  for (double T : T_grid) {
    std::size_t tp = 0, fp = 0;
    for (const auto& [N, pos] : n_by_patient) {
      if (N >= T) (pos ? tp : fp) += 1;
    }
    const double spec = 1.0 - static_cast<double>(fp) / static_cast<double>(n_neg);
    c.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                        static_cast<double>(tp) / static_cast<double>(n_pos), T});
    r.salient.push_back(spec >= 0.9);
  }
  c.auc = trapezoid_area(c.points);
  return r;
}

inline CurvePoints precision_recall_curve(const CohortDataset& cohort) {
  auto objs = scored_objects(cohort);
  std::int64_t n_pos = 0;
  for (const auto& o : objs) n_pos += o.parasite ? 1 : 0;
  if (n_pos == 0) fail(ErrorCode::kDegenerateClasses, "precision-recall needs parasite objects");
  std::sort(objs.begin(), objs.end(), [](auto& a, auto& b) { return a.score > b.score; });
  CurvePoints c;
  c.kind = CurveKind::kPrecisionRecall;
  c.label = "pooled";
  std::int64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < objs.size();) {
    const double s = objs[i].score;
    while (i < objs.size() && objs[i].score == s) {
      (objs[i].parasite ? tp : fp) += 1;
      ++i;
    }
    c.points.push_back({static_cast<double>(tp) / static_cast<double>(n_pos),
                        static_cast<double>(tp) / static_cast<double>(tp + fp), s});
  }
  return c;
}

inline constexpr std::string_view kPrecisionWarning =
    "precision and F1 are misleading metrics for reporting algorithm results: they depend on "
    "the parasite-to-distractor balance of the evaluation set and do not transfer to low "
    "parasitemia samples";

inline double precision_at_lod(double lod_parasitemia, double fp_per_cv) {
  if (!(lod_parasitemia > 0.0)) fail(ErrorCode::kInvalidInput, "LoD parasitemia must be > 0");
  if (!(fp_per_cv >= 0.0)) fail(ErrorCode::kInvalidInput, "FP per cV must be >= 0");
  return lod_parasitemia / (lod_parasitemia + fp_per_cv);
}

struct PrecisionReexpression {
  double precision = 0.0;
  double sensitivity = 0.0;
  double f1 = 0.0;
  double fp_per_cv = 0.0;  // pooled false positives per cV implied by the cohort
  double lod_parasitemia = 0.0;
  double precision_at_lod = 0.0;
  std::string warning{kPrecisionWarning};
};

/// Pooled precision and F1, re-expressed at a low parasitemia L: the cohort's
/// FPs per cV are held fixed and a perfectly sensitive detector finds L
/// parasites per cV.
inline PrecisionReexpression precision_f1_with_reexpression(const CohortDataset& cohort, double C,
                                                            double lod_parasitemia) {
  if (!(lod_parasitemia > 0.0)) fail(ErrorCode::kInvalidInput, "LoD parasitemia must be > 0");
  std::int64_t tp = 0, fp = 0, fn = 0;
  double volume = 0.0;
  for (const auto& p : cohort.patients()) {
    const auto c = patient_counts(p, C);
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    volume += p.examined_volume;
  }
  if (tp + fp == 0) fail(ErrorCode::kNoDetections, "no objects labelled positive at this C");
  PrecisionReexpression r;
  r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.sensitivity = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.sensitivity > 0.0
             ? 2.0 * r.precision * r.sensitivity / (r.precision + r.sensitivity)
             : 0.0;
  r.fp_per_cv = static_cast<double>(fp) / volume;
  r.lod_parasitemia = lod_parasitemia;
  r.precision_at_lod = precision_at_lod(lod_parasitemia, r.fp_per_cv);
  return r;
}

struct EasyDistractorResult {
  double auc_before = 0.0;
  double auc_after = 0.0;
  bool froc_unchanged = false;
  std::vector<double> fp_grid;
  std::vector<double> froc_before;
  std::vector<double> froc_after;
  CurvePoints roc_before;
  CurvePoints roc_after;
};

/// Copy of the cohort with `n_easy` distractors per patient, scores spread
/// evenly over [0, easy_score_max).
inline CohortDataset inject_easy_distractors(const CohortDataset& cohort, std::size_t n_easy,
                                             double easy_score_max) {
  std::vector<PatientRecord> patients = cohort.patients();
  for (auto& p : patients) {
    for (std::size_t i = 0; i < n_easy; ++i) {
      p.objects.push_back({"easy" + std::to_string(i),
                           easy_score_max * static_cast<double>(i) / static_cast<double>(n_easy),
                           ObjectLabel::kDistractor});
    }
  }
  return CohortDataset(cohort.cv_description(), std::move(patients), cohort.provenance());
}

/// Injects easy distractors and compares object AUC and FROC before and after.
/// FROC is compared on thresholds above `easy_score_max`; an empty grid is
/// replaced by 20 evenly spaced FP/cV budgets over the original curve.
inline EasyDistractorResult easy_distractor_experiment(const CohortDataset& cohort, std::size_t n_easy,
                                                       double easy_score_max,
                                                       std::vector<double> fp_grid = {}) {
  if (!(easy_score_max > 0.0 && easy_score_max <= 1.0)) {
    fail(ErrorCode::kInvalidInput, "easy_score_max must be in (0,1]");
  }
  EasyDistractorResult r;
  const auto after = inject_easy_distractors(cohort, n_easy, easy_score_max);
  r.roc_before = object_roc(cohort, RocPool::kPooled).front();
  r.roc_after = object_roc(after, RocPool::kPooled).front();
  r.auc_before = *r.roc_before.auc;
  r.auc_after = *r.roc_after.auc;
  if (fp_grid.empty()) {
    const auto raw = froc(cohort, {}, FrocSensitivity::kPooled, easy_score_max);
    const double xmax = std::max(raw.curve.points.back().x, 1e-9);
    for (int i = 1; i <= 20; ++i) fp_grid.push_back(xmax * i / 20.0 * 1.05);
  }
  const auto fb = froc(cohort, fp_grid, FrocSensitivity::kPooled, easy_score_max);
  const auto fa = froc(after, fp_grid, FrocSensitivity::kPooled, easy_score_max);
  r.fp_grid = fp_grid;
  r.froc_before = fb.grid_sensitivity;
  r.froc_after = fa.grid_sensitivity;
  r.froc_unchanged = r.froc_before == r.froc_after;
  return r;
}

}  // namespace parasitometrics
