#pragma once

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parasitometrics/calibration.hpp"
#include "parasitometrics/csv.hpp"
#include "parasitometrics/curves.hpp"
#include "parasitometrics/io.hpp"
#include "parasitometrics/metrics.hpp"
#include "parasitometrics/poisson.hpp"
#include "parasitometrics/quant.hpp"

namespace parasitometrics {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

using ojson = nlohmann::ordered_json;

// JSON has no infinity; sentinels serialize as the string "inf".
inline ojson json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

inline ojson json_optional(const std::optional<double>& v) { return v ? json_number(*v) : ojson(); }

inline ojson to_json(const DistSummary& s) {
  return {{"n", s.n},
          {"mean", s.mean},
          {"median", s.median},
          {"std", s.stddev},
          {"sigma_left", s.sigma_left},
          {"sigma_right", s.sigma_right},
          {"p5", s.percentile(5)},
          {"p95", s.percentile(95)}};
}

inline ojson to_json(const MetricDistribution& d) {
  ojson j;
  j["kind"] = d.kind == MetricKind::kFpr ? "fpr_per_cv" : "object_sensitivity";
  j["summary"] = to_json(d.summary);
  ojson per = ojson::object();
  for (const auto& [id, v] : d.per_patient) per[id] = v;
  j["per_patient"] = per;
  j["excluded"] = d.excluded;
  j["warnings"] = d.warnings;
  return j;
}

inline ojson to_json(const CurvePoints& c) {
  ojson pts = ojson::array();
  for (const auto& p : c.points) pts.push_back({{"threshold", json_number(p.threshold)}, {"x", p.x}, {"y", p.y}});
  ojson j{{"kind", curve_kind_name(c.kind)}, {"label", c.label}, {"points", pts}};
  j["auc"] = json_optional(c.auc);
  if (!c.reference_line.empty()) {
    ojson ref = ojson::array();
    for (const auto& p : c.reference_line) ref.push_back({{"x", p.x}, {"y", p.y}});
    j["reference_line"] = ref;
  }
  return j;
}

inline std::string curve_csv(const CurvePoints& c) {
  std::ostringstream os;
  csv::write_row(os, {"threshold", "x", "y"});
  for (const auto& p : c.points) {
    csv::write_row(os, {csv::format_number(p.threshold), csv::format_number(p.x), csv::format_number(p.y)});
  }
  return os.str();
}

inline ojson to_json(const Stratum& s) {
  return {{"label", s.label}, {"n_patients", s.n_patients}, {"n_detected", s.n_detected},
          {"sensitivity", json_optional(s.value)}};
}

inline ojson to_json(const PatientLevelResult& r) {
  ojson bins = ojson::array();
  for (const auto& b : r.sensitivity.bins) bins.push_back({{"lo", b.lo}, {"hi", json_number(b.hi)}, {"label", b.label()}});
  ojson par = ojson::array(), sp = ojson::array();
  for (const auto& s : r.sensitivity.by_parasitemia) par.push_back(to_json(s));
  for (const auto& s : r.sensitivity.by_species) sp.push_back(to_json(s));
  ojson j;
  j["operating_point"] = {{"C", r.op.C}, {"T", json_number(r.op.T)}};
  j["parasitemia_bins"] = bins;
  j["sensitivity"] = {{"overall", json_optional(r.sensitivity.overall)},
                      {"n_positive", r.sensitivity.n_patients},
                      {"by_parasitemia", par},
                      {"by_species", sp}};
  j["specificity"] = json_optional(r.specificity);
  j["n_negative"] = r.n_negative;
  if (!r.specificity) j["specificity_note"] = "undefined: cohort has no negative patients";
  return j;
}

inline ojson to_json(const LodEstimate& e) {
  return {{"L", e.L},
          {"method", calibration_method_name(e.method)},
          {"mu_S", e.mu_S},
          {"sigma_S", e.sigma_S},
          {"mu_F", e.mu_F},
          {"sigma_F", e.sigma_F},
          {"sigma_L", e.sigma_L},
          {"sigma_R", e.sigma_R},
          {"plus_one", e.plus_one},
          {"beta", json_optional(e.beta)}};
}

inline ojson to_json(const ConfusionMatrix& m) {
  ojson labels = ojson::array();
  for (Species s : kAllSpecies) labels.push_back(species_code(s));
  ojson rows = ojson::array();
  for (const auto& r : m.counts) rows.push_back(r);
  const auto c = m.falciparum_collapse();
  return {{"labels", labels},
          {"rows_truth_cols_predicted", rows},
          {"falciparum_collapse", {{"labels", {"falciparum", "non_falciparum"}}, {"counts", c}}}};
}

inline ojson to_json(const QuantResult& q) {
  ojson per = ojson::array();
  for (const auto& [id, p] : q.per_patient) {
    per.push_back({{"patient_id", id}, {"P_true", p.P_true}, {"P_hat", p.P_hat}, {"rel_error", p.rel_error},
                   {"negative_estimate", p.negative_estimate}});
  }
  ojson ba = ojson::array();
  for (const auto& b : q.bland_altman) ba.push_back({{"patient_id", b.patient_id}, {"mean_log", b.mean_log}, {"diff_log", b.diff_log}});
  return {{"r2_linear", q.r2_linear}, {"r2_log", q.r2_log},     {"rel_error_mean", q.rel_error_mean},
          {"rel_error_std", q.rel_error_std}, {"note", q.note}, {"per_patient", per},
          {"bland_altman", ba}};
}

inline ojson to_json(const PrecisionReexpression& p) {
  return {{"precision", p.precision},   {"object_sensitivity", p.sensitivity},
          {"f1", p.f1},                 {"fp_per_cv", p.fp_per_cv},
          {"lod_parasitemia", p.lod_parasitemia}, {"precision_at_lod", p.precision_at_lod},
          {"warning", p.warning}};
}

struct EvaluationReport {
  std::string provenance;
  std::string cv_description;
  OperatingPoint op;
  std::optional<CalibrationConfig> calibration;
  std::optional<std::string> timestamp;

  std::optional<MetricDistribution> fpr;
  std::optional<MetricDistribution> sensitivity;
  std::optional<PooledSensitivity> pooled;
  std::optional<PatientLevelResult> patient_level;
  std::optional<LodEstimate> lod;
  std::optional<PrecisionReexpression> precision;
  std::vector<CurvePoints> curves;
  std::optional<std::vector<double>> froc_grid;
  std::optional<std::vector<double>> froc_grid_sensitivity;
  std::optional<ConfusionMatrix> confusion;
  std::optional<QuantResult> quant;
  std::vector<std::string> warnings;
};

// Any sensitivity must travel with the parasitemia bins and the paired
// specificity field.
inline void check_report_invariants(const EvaluationReport& r) {
  const bool has_sensitivity = r.sensitivity || r.pooled || r.patient_level;
  if (!has_sensitivity) return;
  if (!r.patient_level) {
    fail(ErrorCode::kInvalidInput, "report carries a sensitivity without the patient-level section "
                                   "(parasitemia bins and specificity)");
  }
  if (r.patient_level->sensitivity.bins.empty()) {
    fail(ErrorCode::kInvalidInput, "report sensitivity section has no parasitemia bin definition");
  }
}

inline ojson to_json(const EvaluationReport& r) {
  check_report_invariants(r);
  ojson j;
  j["schema_version"] = kReportSchemaVersion;
  ojson meta;
  meta["tool_version"] = kToolVersion;
  meta["provenance"] = r.provenance;
  meta["cv_description"] = r.cv_description;
  meta["operating_point"] = {{"C", r.op.C}, {"T", json_number(r.op.T)}};
  if (r.calibration) {
    meta["calibration"] = {{"K", r.calibration->K},
                           {"method", calibration_method_name(r.calibration->method)},
                           {"plus_one", r.calibration->plus_one},
                           {"beta", json_optional(r.calibration->beta)}};
  }
  if (r.timestamp) meta["timestamp"] = *r.timestamp;
  j["metadata"] = meta;
  if (r.fpr) j["fpr_distribution"] = to_json(*r.fpr);
  if (r.sensitivity) j["sensitivity_distribution"] = to_json(*r.sensitivity);
  if (r.pooled) {
    j["pooled_object_sensitivity"] = {{"value", r.pooled->value},
                                      {"parasite_objects", r.pooled->parasite_objects},
                                      {"dominant_patient", r.pooled->dominant_patient},
                                      {"dominant_fraction", r.pooled->dominant_fraction},
                                      {"imbalance_warning", r.pooled->imbalance_warning
                                                                ? ojson(*r.pooled->imbalance_warning)
                                                                : ojson()}};
  }
  if (r.patient_level) j["patient_level"] = to_json(*r.patient_level);
  if (r.lod) j["lod"] = to_json(*r.lod);
  if (r.precision) j["precision"] = to_json(*r.precision);
  ojson curves = ojson::array();
  for (const auto& c : r.curves) curves.push_back(to_json(c));
  j["curves"] = curves;
  if (r.froc_grid) j["froc_grid"] = {{"fp_per_cv", *r.froc_grid}, {"sensitivity", *r.froc_grid_sensitivity}};
  if (r.confusion) j["species_confusion"] = to_json(*r.confusion);
  if (r.quant) j["quantitation"] = to_json(*r.quant);
  j["warnings"] = r.warnings;
  return j;
}

inline std::string distribution_csv(const MetricDistribution& d, const char* value_column) {
  std::ostringstream os;
  csv::write_row(os, {"patient_id", value_column});
  for (const auto& [id, v] : d.per_patient) csv::write_row(os, {id, csv::format_number(v)});
  return os.str();
}

inline std::string patient_level_csv(const PatientLevelResult& r) {
  std::ostringstream os;
  csv::write_row(os, {"stratum_type", "label", "n_patients", "n_detected", "value"});
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); };
  for (const auto& s : r.sensitivity.by_parasitemia) {
    csv::write_row(os, {"parasitemia", s.label, std::to_string(s.n_patients), std::to_string(s.n_detected), opt(s.value)});
  }
  for (const auto& s : r.sensitivity.by_species) {
    csv::write_row(os, {"species", s.label, std::to_string(s.n_patients), std::to_string(s.n_detected), opt(s.value)});
  }
  csv::write_row(os, {"overall_sensitivity", "all", std::to_string(r.sensitivity.n_patients), "", opt(r.sensitivity.overall)});
  csv::write_row(os, {"specificity", "negatives", std::to_string(r.n_negative),
                      std::to_string(r.n_negative_correct), opt(r.specificity)});
  return os.str();
}

inline std::string tuning_table_csv(const TuningResult& t, CalibrationMethod method) {
  std::ostringstream os;
  const bool robust = method == CalibrationMethod::kRobust;
  if (robust) {
    csv::write_row(os, {"C", "T", "LoD", "mu_F", "sigma_L", "sigma_R", "mu_S"});
  } else {
    csv::write_row(os, {"C", "T", "LoD", "mu_F", "sigma_F", "mu_S"});
  }
  for (const auto& r : t.table) {
    if (r.degenerate) {
      csv::Row row{csv::format_number(r.C), "", "", "", "", ""};
      if (robust) row.push_back("");
      csv::write_row(os, row);
      continue;
    }
    csv::Row row{csv::format_number(r.C), csv::format_number(r.T), csv::format_number(r.LoD), csv::format_number(r.mu_F)};
    if (robust) {
      row.push_back(csv::format_number(r.sigma_L));
      row.push_back(csv::format_number(r.sigma_R));
    } else {
      row.push_back(csv::format_number(r.sigma_F));
    }
    row.push_back(csv::format_number(r.mu_S));
    csv::write_row(os, row);
  }
  return os.str();
}

inline std::string scatter_csv(const std::vector<ScatterPoint>& pts) {
  std::ostringstream os;
  csv::write_row(os, {"patient_id", "fp_count_per_cv"});
  for (const auto& p : pts) csv::write_row(os, {p.patient_id, csv::format_number(p.fp_per_cv)});
  return os.str();
}

inline std::string quant_patients_csv(const QuantResult& q) {
  std::ostringstream os;
  csv::write_row(os, {"patient_id", "P_true", "P_hat", "rel_error"});
  for (const auto& [id, p] : q.per_patient) {
    csv::write_row(os, {id, csv::format_number(p.P_true), csv::format_number(p.P_hat), csv::format_number(p.rel_error)});
  }
  return os.str();
}

inline std::string bland_altman_csv(const QuantResult& q) {
  std::ostringstream os;
  csv::write_row(os, {"mean_log", "diff_log"});
  for (const auto& b : q.bland_altman) csv::write_row(os, {csv::format_number(b.mean_log), csv::format_number(b.diff_log)});
  return os.str();
}

inline std::string poisson_csv(const PoissonCurve& c) {
  std::ostringstream os;
  csv::write_row(os, {"volume", "k", "probability"});
  for (std::size_t i = 0; i < c.volumes.size(); ++i) {
    for (const auto& p : c.pmf_points[i]) {
      csv::write_row(os, {csv::format_number(c.volumes[i]), std::to_string(p.k), csv::format_number(p.probability)});
    }
  }
  return os.str();
}

inline std::string confusion_csv(const ConfusionMatrix& m) {
  std::ostringstream os;
  csv::Row header{"truth\\predicted"};
  for (Species s : kAllSpecies) header.emplace_back(species_code(s));
  csv::write_row(os, header);
  for (Species t : kAllSpecies) {
    csv::Row row{std::string(species_code(t))};
    for (Species p : kAllSpecies) row.push_back(std::to_string(m.at(t, p)));
    csv::write_row(os, row);
  }
  return os.str();
}

/// Writes report.json (json) or a set of CSV tables (csv). Curve CSVs are
/// written in both cases.
inline void write_report(const EvaluationReport& r, const std::filesystem::path& dir, bool as_json) {
  const auto doc = to_json(r);  // validates invariants before anything is written
  ensure_directory(dir);
  for (const auto& c : r.curves) {
    std::string name = "curve_" + std::string(curve_kind_name(c.kind));
    if (!c.label.empty() && c.kind == CurveKind::kObjectRoc && c.label != "pooled") name += "_" + c.label;
    write_text_file(dir / (name + ".csv"), curve_csv(c));
  }
  if (as_json) {
    write_text_file(dir / "report.json", doc.dump(2) + "\n");
    return;
  }
  std::ostringstream summary;
  csv::write_row(summary, {"key", "value"});
  auto kv = [&](const std::string& k, const std::string& v) { csv::write_row(summary, {k, v}); };
  kv("schema_version", std::to_string(kReportSchemaVersion));
  kv("provenance", r.provenance);
  kv("cv_description", r.cv_description);
  kv("C", csv::format_number(r.op.C));
  kv("T", csv::format_number(r.op.T));
  if (r.pooled) kv("pooled_object_sensitivity", csv::format_number(r.pooled->value));
  if (r.patient_level) {
    const auto& pl = *r.patient_level;
    kv("patient_sensitivity", pl.sensitivity.overall ? csv::format_number(*pl.sensitivity.overall) : "");
    kv("patient_specificity", pl.specificity ? csv::format_number(*pl.specificity) : "");
    std::string bins;
    for (const auto& b : pl.sensitivity.bins) bins += (bins.empty() ? "" : ";") + b.label();
    kv("parasitemia_bins", bins);
    write_text_file(dir / "patient_level.csv", patient_level_csv(pl));
  }
  if (r.lod) kv("lod", csv::format_number(r.lod->L));
  if (r.precision) {
    kv("precision", csv::format_number(r.precision->precision));
    kv("precision_at_lod", csv::format_number(r.precision->precision_at_lod));
  }
  for (const auto& w : r.warnings) kv("warning", w);
  write_text_file(dir / "summary.csv", summary.str());
  if (r.fpr) write_text_file(dir / "fpr_distribution.csv", distribution_csv(*r.fpr, "fpr_per_cv"));
  if (r.sensitivity) write_text_file(dir / "sensitivity_distribution.csv", distribution_csv(*r.sensitivity, "object_sensitivity"));
  if (r.confusion) write_text_file(dir / "species_confusion.csv", confusion_csv(*r.confusion));
  if (r.quant) {
    write_text_file(dir / "quant_patients.csv", quant_patients_csv(*r.quant));
    write_text_file(dir / "bland_altman.csv", bland_altman_csv(*r.quant));
  }
}

}  // namespace parasitometrics
