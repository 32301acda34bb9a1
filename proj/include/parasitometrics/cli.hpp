#pragma once

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parasitometrics/checks.hpp"
#include "parasitometrics/parasitometrics.hpp"
#include "parasitometrics/report.hpp"

namespace parasitometrics::cli {

enum ExitCode : int { kOk = 0, kCheckFailure = 1, kInputError = 2, kDegenerateData = 3 };

inline int exit_code_for(const Error& e) { return is_input_error(e.code()) ? kInputError : kDegenerateData; }

struct CohortArgs {
  std::string cohort;
  std::string objects;
  std::string patients;
  std::string cv = "1 uL blood";
};

inline void add_cohort_options(CLI::App* app, CohortArgs& a, const std::string& prefix = "") {
  app->add_option("--" + prefix + "cohort", a.cohort, "cohort JSON file or directory with objects.csv/patients.csv");
  app->add_option("--" + prefix + "objects", a.objects, "objects CSV");
  app->add_option("--" + prefix + "patients", a.patients, "patients CSV");
  if (prefix.empty()) app->add_option("--cv", a.cv, "clinical volume unit description");
}

inline CohortDataset load(const CohortArgs& a, const std::string& what = "cohort") {
  if (!a.cohort.empty()) return load_cohort(a.cohort, a.cv);
  if (a.objects.empty() || a.patients.empty()) {
    fail(ErrorCode::kInvalidInput, what + ": give --cohort or both --objects and --patients");
  }
  return ingest_cohort(a.objects, a.patients, a.cv);
}

struct CalibArgs {
  std::optional<double> K;
  std::string method = "gaussian";
  std::optional<double> beta;
  bool plus_one = false;
  std::optional<double> manual_T;
};

inline void add_calib_options(CLI::App* app, CalibArgs& a) {
  app->add_option("--spec-target", a.K, "target specificity K in (0,1)");
  app->add_option("--calib-method", a.method, "gaussian|robust|percentile|manual");
  app->add_option("--beta", a.beta, "pessimistic LoD: mu(S) - beta sigma(S)");
  app->add_flag("--plus-one", a.plus_one, "require one extra positive object per cV");
  app->add_option("--manual-T", a.manual_T, "explicit T for the manual method");
}

inline CalibrationConfig to_config(const CalibArgs& a) {
  CalibrationConfig c;
  c.K = a.K.value_or(0.95);
  c.method = parse_calibration_method(a.method);
  c.beta = a.beta;
  c.plus_one = a.plus_one;
  c.manual_T = a.manual_T;
  return c;
}

// Bin edges e0 < e1 < ... give (e_i, e_i+1]; a final (e_n, inf) bin is added
// when the last edge is finite.
inline std::vector<ParasitemiaBin> bins_from_edges(const std::vector<double>& edges) {
  if (edges.empty()) return default_parasitemia_bins();
  if (edges.size() < 2 && std::isfinite(edges.front())) {
    return {{edges.front(), std::numeric_limits<double>::infinity()}};
  }
  std::vector<ParasitemiaBin> bins;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) bins.push_back({edges[i], edges[i + 1]});
  if (std::isfinite(edges.back())) bins.push_back({edges.back(), std::numeric_limits<double>::infinity()});
  validate_bins(bins);
  return bins;
}

inline std::map<std::string, Species> load_species_predictions(const std::filesystem::path& file) {
  csv::Table t(csv::parse(read_text_file(file)), {"patient_id", "species"}, file.string());
  std::map<std::string, Species> out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const std::string id = t.at(r, "patient_id");
    if (!out.emplace(id, parse_species(t.at(r, "species"))).second) {
      fail(ErrorCode::kDuplicatePatient, "duplicate prediction for patient '" + id + "'");
    }
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

inline bool parse_format(const std::string& f) {
  if (f == "json") return true;
  if (f == "csv") return false;
  fail(ErrorCode::kInvalidInput, "--format must be csv or json");
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  CohortArgs in;
  CalibArgs calib;
  double C = 0.5;
  std::optional<double> T;
  std::vector<double> bin_edges;
  std::vector<double> fp_grid{1, 2, 5, 10, 20, 50, 100, 200};
  std::string predicted_species;
  std::optional<double> F_hat, S_hat;
  std::string out;
  std::string format = "json";
  bool timestamp = false;
};

inline EvaluationReport build_evaluation(const EvaluateArgs& a, std::ostream& log) {
  const auto cohort = load(a.in);
  if (!a.T && !a.calib.K) fail(ErrorCode::kInvalidInput, "give --T, or --spec-target with --calib-method");
  const auto cfg = to_config(a.calib);
  EvaluationReport r;
  r.provenance = cohort.provenance();
  r.cv_description = cohort.cv_description();
  if (a.timestamp) r.timestamp = utc_timestamp();
  auto warn = [&](const std::string& w) {
    r.warnings.push_back(w);
    log << "warning: " << w << "\n";
  };
  auto soft = [&](const char* what, auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      if (is_input_error(e.code())) throw;
      warn(std::string(what) + " skipped: " + e.what());
    }
  };

  const bool has_neg = cohort.count(GroundTruth::kNegative) > 0;
  r.fpr = fpr_distribution(cohort, a.C, has_neg);
  for (const auto& w : r.fpr->warnings) warn(w);
  double T = 0.0;
  if (a.T) {
    T = *a.T;
  } else {
    if (!has_neg) fail(ErrorCode::kNoNegativePatients, "calibrating T requires negative patients");
    T = calibrate_threshold(*r.fpr, cfg);
    r.calibration = cfg;
  }
  r.op = {a.C, T};
  validate_operating_point(r.op);

  soft("object sensitivity distribution", [&] {
    r.sensitivity = sensitivity_distribution(cohort, a.C);
    for (const auto& w : r.sensitivity->warnings) warn(w);
  });
  soft("pooled object sensitivity", [&] {
    r.pooled = pooled_object_sensitivity(cohort, a.C);
    if (r.pooled->imbalance_warning) warn(*r.pooled->imbalance_warning);
  });
  r.patient_level = patient_level_sens_spec(cohort, r.op, bins_from_edges(a.bin_edges));
  if (has_neg && r.sensitivity) {
    soft("LoD", [&] { r.lod = estimate_lod(*r.fpr, *r.sensitivity, cfg); });
  }
  if (r.lod) {
    soft("precision", [&] {
      r.precision = precision_f1_with_reexpression(cohort, a.C, r.lod->L);
      warn(r.precision->warning);
    });
  }
  soft("object ROC", [&] { r.curves.push_back(object_roc(cohort, RocPool::kPooled).front()); });
  soft("FROC", [&] {
    auto f = froc(cohort, a.fp_grid);
    for (const auto& w : f.warnings) warn(w);
    r.curves.push_back(f.curve);
    r.froc_grid = f.grid;
    r.froc_grid_sensitivity = f.grid_sensitivity;
  });
  soft("patient ROC", [&] {
    std::set<double> grid;
    for (const auto& p : cohort.patients()) grid.insert(patient_counts(p, a.C).N);
    r.curves.push_back(patient_roc(cohort, a.C, {grid.begin(), grid.end()}).curve);
  });
  soft("precision-recall curve", [&] { r.curves.push_back(precision_recall_curve(cohort)); });
  if (!a.predicted_species.empty()) r.confusion = species_confusion(cohort, load_species_predictions(a.predicted_species));
  if (a.F_hat || a.S_hat) {
    if (!a.F_hat || !a.S_hat) fail(ErrorCode::kInvalidRates, "quantitation needs both --F-hat and --S-hat");
    soft("quantitation", [&] {
      r.quant = quant_report(cohort, r.op, {*a.F_hat, *a.S_hat});
      warn(r.quant->note);
    });
  }
  return r;
}

inline void register_evaluate(CLI::App& app, EvaluateArgs& a, std::function<int()>& action, std::ostream& out,
                              std::ostream& log) {
  auto* sub = app.add_subcommand("evaluate", "evaluate a scored cohort at an operating point");
  add_cohort_options(sub, a.in);
  add_calib_options(sub, a.calib);
  sub->add_option("--C", a.C, "object score threshold");
  sub->add_option("--T", a.T, "positive-object count threshold per cV");
  sub->add_option("--bins", a.bin_edges, "parasitemia bin edges")->delimiter(',');
  sub->add_option("--fp-grid", a.fp_grid, "FROC grid in FP per cV")->delimiter(',');
  sub->add_option("--predicted-species", a.predicted_species, "CSV patient_id,species");
  sub->add_option("--F-hat", a.F_hat, "expected FPR for quantitation");
  sub->add_option("--S-hat", a.S_hat, "expected object sensitivity for quantitation");
  sub->add_option("--out", a.out, "output directory")->required();
  sub->add_option("--format", a.format, "csv|json");
  sub->add_flag("--timestamp", a.timestamp, "embed a timestamp in the report");
  sub->callback([&] {
    action = [&] {
      const bool json = parse_format(a.format);
      const auto r = build_evaluation(a, log);
      write_report(r, a.out, json);
      const auto& pl = *r.patient_level;
      out << "C=" << csv::format_number(r.op.C) << " T=" << csv::format_number(r.op.T) << "\n";
      out << "patient_sensitivity="
          << (pl.sensitivity.overall ? csv::format_number(*pl.sensitivity.overall) : std::string("undefined"))
          << " specificity=" << (pl.specificity ? csv::format_number(*pl.specificity) : std::string("undefined"))
          << "\n";
      if (r.lod) out << "lod=" << csv::format_number(r.lod->L) << "\n";
      return int(kOk);
    };
  });
}

// ---------------------------------------------------------------------------
// calibrate / lod
// ---------------------------------------------------------------------------

struct CalibrateArgs {
  CohortArgs in;
  CalibArgs calib;
  double C = 0.5;
  std::string out;
};

inline void register_calibrate(CLI::App& app, CalibrateArgs& a, std::function<int()>& action, std::ostream& out,
                               std::ostream& log) {
  auto* sub = app.add_subcommand("calibrate", "choose T from the FPR distribution of negatives");
  add_cohort_options(sub, a.in);
  add_calib_options(sub, a.calib);
  sub->add_option("--C", a.C, "object score threshold");
  sub->add_option("--out", a.out, "output directory");
  sub->callback([&] {
    action = [&] {
      const auto cohort = load(a.in);
      if (cohort.count(GroundTruth::kNegative) == 0) {
        fail(ErrorCode::kNoNegativePatients, "calibration requires negative patients");
      }
      const auto cfg = to_config(a.calib);
      const auto F = fpr_distribution(cohort, a.C, true);
      if (!a.out.empty()) {
        ensure_directory(a.out);
        write_text_file(std::filesystem::path(a.out) / "fpr_scatter.csv", scatter_csv(manual_scatter_export(F)));
      }
      if (cfg.method == CalibrationMethod::kManualScatter && !cfg.manual_T) {
        log << "manual method: inspect fpr_scatter.csv and rerun with --manual-T\n";
        fail(ErrorCode::kMissingManualT, "the manual method needs --manual-T");
      }
      const double T = calibrate_threshold(F, cfg);
      if (!a.out.empty()) {
        ojson j{{"schema_version", kReportSchemaVersion},
                {"C", a.C},
                {"T", T},
                {"K", cfg.K},
                {"method", calibration_method_name(cfg.method)},
                {"fpr_summary", to_json(F.summary)}};
        write_text_file(std::filesystem::path(a.out) / "calibration.json", j.dump(2) + "\n");
      }
      out << "T=" << csv::format_number(T) << "\n";
      return int(kOk);
    };
  });
}

struct LodArgs {
  CohortArgs in;
  CalibArgs calib;
  double C = 0.5;
  std::string out;
};

inline void register_lod(CLI::App& app, LodArgs& a, std::function<int()>& action, std::ostream& out) {
  auto* sub = app.add_subcommand("lod", "estimate the limit of detection");
  add_cohort_options(sub, a.in);
  add_calib_options(sub, a.calib);
  sub->add_option("--C", a.C, "object score threshold");
  sub->add_option("--out", a.out, "output directory");
  sub->callback([&] {
    action = [&] {
      const auto cohort = load(a.in);
      if (cohort.count(GroundTruth::kNegative) == 0) fail(ErrorCode::kNoNegativePatients, "LoD requires negative patients");
      const auto cfg = to_config(a.calib);
      const auto F = fpr_distribution(cohort, a.C, true);
      const auto S = sensitivity_distribution(cohort, a.C);
      const auto e = estimate_lod(F, S, cfg);
      if (!a.out.empty()) {
        ensure_directory(a.out);
        ojson j = to_json(e);
        j["C"] = a.C;
        j["T"] = calibrate_threshold(F, cfg);
        write_text_file(std::filesystem::path(a.out) / "lod.json", j.dump(2) + "\n");
      }
      out << "L=" << csv::format_number(e.L) << "\n";
      return int(kOk);
    };
  });
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

struct TuneArgs {
  CohortArgs train_pos, val_neg, val_pos;
  CalibArgs calib;
  std::vector<double> c_grid;
  std::string out;
};

inline bool given(const CohortArgs& a) { return !a.cohort.empty() || !a.objects.empty() || !a.patients.empty(); }

inline void register_tune(CLI::App& app, TuneArgs& a, std::function<int()>& action, std::ostream& out,
                          std::ostream& log) {
  auto* sub = app.add_subcommand("tune", "search C to minimize the LoD at a target specificity");
  add_cohort_options(sub, a.train_pos, "train-positives-");
  add_cohort_options(sub, a.val_neg, "validation-negatives-");
  add_cohort_options(sub, a.val_pos, "validation-positives-");
  // Short forms taking a cohort path.
  sub->add_option("--train-positives", a.train_pos.cohort, "training positives (cohort path)");
  sub->add_option("--validation-negatives", a.val_neg.cohort, "validation negatives (cohort path)");
  sub->add_option("--validation-positives", a.val_pos.cohort, "validation positives (cohort path)");
  sub->add_option("--cv", a.train_pos.cv, "clinical volume unit description");
  add_calib_options(sub, a.calib);
  sub->add_option("--c-grid", a.c_grid, "candidate C values")->delimiter(',');
  sub->add_option("--out", a.out, "output directory")->required();
  sub->callback([&] {
    action = [&] {
      a.val_neg.cv = a.val_pos.cv = a.train_pos.cv;
      // Tuning on a cohort without negatives is a precondition failure here,
      // not a degenerate-data condition.
      const std::string need = "tuning requires a validation set of negative patients";
      if (!given(a.val_neg)) fail(ErrorCode::kInvalidInput, need);
      const auto neg = load(a.val_neg, "validation negatives");
      if (neg.count(GroundTruth::kNegative) == 0) fail(ErrorCode::kInvalidInput, need);
      const auto train = load(a.train_pos, "training positives");
      std::optional<CohortDataset> vpos;
      if (given(a.val_pos)) vpos = load(a.val_pos, "validation positives");
      const auto cfg = to_config(a.calib);
      auto grid = a.c_grid;
      if (grid.empty()) grid = default_c_grid({&train, &neg});
      const auto t = tune_operating_point(train, neg, vpos ? &*vpos : nullptr, grid, cfg);
      if (t.used_training_positives) log << "warning: S taken from training positives (no validation positives given)\n";
      ensure_directory(a.out);
      write_text_file(std::filesystem::path(a.out) / "tuning.csv", tuning_table_csv(t, cfg.method));
      ojson j{{"schema_version", kReportSchemaVersion},
              {"C", t.best.C},
              {"T", t.best.T},
              {"LoD", t.best_lod},
              {"K", cfg.K},
              {"method", calibration_method_name(cfg.method)},
              {"used_training_positives", t.used_training_positives}};
      write_text_file(std::filesystem::path(a.out) / "operating_point.json", j.dump(2) + "\n");
      out << "C=" << csv::format_number(t.best.C) << " T=" << csv::format_number(t.best.T)
          << " LoD=" << csv::format_number(t.best_lod) << "\n";
      return int(kOk);
    };
  });
}

// ---------------------------------------------------------------------------
// quant / poisson
// ---------------------------------------------------------------------------

struct QuantArgs {
  CohortArgs in;
  double C = 0.5;
  double T = 0.0;
  std::optional<double> F_hat, S_hat;
  std::optional<double> fom_P;
  std::string out;
};

inline void register_quant(CLI::App& app, QuantArgs& a, std::function<int()>& action, std::ostream& out,
                           std::ostream& log) {
  auto* sub = app.add_subcommand("quant", "estimate parasitemia from counts and report agreement");
  add_cohort_options(sub, a.in);
  sub->add_option("--C", a.C, "object score threshold");
  sub->add_option("--T", a.T, "count threshold (recorded only)");
  sub->add_option("--F-hat", a.F_hat, "expected FPR per cV (default: mean over negatives)");
  sub->add_option("--S-hat", a.S_hat, "expected object sensitivity (default: mean over positives)");
  sub->add_option("--fom-P", a.fom_P, "parasitemia at which to report the figure of merit");
  sub->add_option("--out", a.out, "output directory")->required();
  sub->callback([&] {
    action = [&] {
      const auto cohort = load(a.in);
      std::optional<MetricDistribution> F, S;
      if (cohort.count(GroundTruth::kNegative) > 0) F = fpr_distribution(cohort, a.C, true);
      S = sensitivity_distribution(cohort, a.C);
      ExpectedRates rates;
      if (a.F_hat) {
        rates.F_hat = *a.F_hat;
      } else {
        if (!F) fail(ErrorCode::kNoNegativePatients, "give --F-hat or include negative patients");
        rates.F_hat = F->summary.mean;
        log << "warning: F_hat estimated in-sample from the cohort's negatives\n";
      }
      if (a.S_hat) {
        rates.S_hat = *a.S_hat;
      } else {
        rates.S_hat = S->summary.mean;
        log << "warning: S_hat estimated in-sample from the cohort's positives\n";
      }
      const auto q = quant_report(cohort, {a.C, a.T}, rates);
      ensure_directory(a.out);
      const std::filesystem::path dir = a.out;
      write_text_file(dir / "quant_patients.csv", quant_patients_csv(q));
      write_text_file(dir / "bland_altman.csv", bland_altman_csv(q));
      ojson doc{{"schema_version", kReportSchemaVersion}, {"F_hat", rates.F_hat}, {"S_hat", rates.S_hat}};
      doc.update(to_json(q));
      if (a.fom_P && F) doc["fom"] = {{"P", *a.fom_P}, {"value", quant_fom(*S, *F, *a.fom_P)}};
      write_text_file(dir / "quant.json", doc.dump(2) + "\n");
      out << "r2_linear=" << csv::format_number(q.r2_linear) << " r2_log=" << csv::format_number(q.r2_log) << "\n";
      return int(kOk);
    };
  });
}

struct PoissonArgs {
  double P = 100.0;
  std::vector<double> volumes{0.001, 0.01, 0.05, 0.1};
  std::optional<long long> k_min;
  double confidence = 0.95;
  std::string out;
};

inline void register_poisson(CLI::App& app, PoissonArgs& a, std::function<int()>& action, std::ostream& out) {
  auto* sub = app.add_subcommand("poisson", "count pmfs and minimum examined volume");
  sub->add_option("--P", a.P, "parasitemia per cV");
  sub->add_option("--volumes", a.volumes, "examined volumes in cV")->delimiter(',');
  sub->add_option("--k-min", a.k_min, "objects needed for detection");
  sub->add_option("--confidence", a.confidence, "detection probability target");
  sub->add_option("--out", a.out, "output directory")->required();
  sub->callback([&] {
    action = [&] {
      const auto c = poisson_curves(a.P, a.volumes);
      ensure_directory(a.out);
      write_text_file(std::filesystem::path(a.out) / "poisson_pmf.csv", poisson_csv(c));
      ojson j{{"schema_version", kReportSchemaVersion}, {"P", a.P}};
      ojson vols = ojson::array();
      for (double v : a.volumes) {
        vols.push_back({{"volume", v},
                        {"p_zero", count_pmf(a.P, v, 0).front().probability},
                        {"relative_poisson_error", a.P > 0 ? json_number(quantitation_relative_poisson_error(a.P, v)) : ojson()}});
      }
      j["volumes"] = vols;
      if (a.k_min) {
        const double v = min_volume_for_detection(a.P, *a.k_min, a.confidence);
        j["min_volume"] = {{"k_min", *a.k_min}, {"confidence", a.confidence}, {"volume", v}};
        out << "min_volume=" << csv::format_number(v) << "\n";
      }
      write_text_file(std::filesystem::path(a.out) / "poisson.json", j.dump(2) + "\n");
      return int(kOk);
    };
  });
}

// ---------------------------------------------------------------------------
// simulate / reproduce-paper
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

inline constexpr const char* kSeedEnv = "PARASITOMETRICS_SEED";

/// Seed precedence: --seed, then PARASITOMETRICS_SEED, then the config file.
inline SimConfig resolve_sim_config(const SimulateArgs& a) {
  SimConfig cfg;
  if (!a.config.empty() && !a.preset.empty()) fail(ErrorCode::kInvalidInput, "give --config or --preset, not both");
  if (!a.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(a.config));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::kInvalidConfig, a.config + ": " + e.what());
    }
    cfg = sim_config_from_json(j);
  } else if (a.preset == "who56") {
    cfg = who56_preset(cfg.seed);
  } else if (a.preset == "skewed-fpr") {
    cfg = skewed_fpr_preset(cfg.seed);
  } else if (!a.preset.empty()) {
    fail(ErrorCode::kInvalidConfig, "unknown preset '" + a.preset + "' (who56, skewed-fpr)");
  }
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    cfg.seed = static_cast<std::uint64_t>(csv::parse_integer(env, kSeedEnv));
  }
  if (a.seed) cfg.seed = *a.seed;
  return cfg;
}

inline void register_simulate(CLI::App& app, SimulateArgs& a, std::function<int()>& action, std::ostream& out) {
  auto* sub = app.add_subcommand("simulate", "generate a synthetic scored cohort");
  sub->add_option("--config", a.config, "simulation config JSON");
  sub->add_option("--preset", a.preset, "who56|skewed-fpr");
  sub->add_option("--seed", a.seed, "RNG seed");
  sub->add_option("--out", a.out, "output directory")->required();
  sub->add_option("--format", a.format, "csv|json");
  sub->callback([&] {
    action = [&] {
      const bool json = parse_format(a.format);
      const auto cfg = resolve_sim_config(a);
      const auto cohort = generate_cohort(cfg);
      write_cohort(cohort, a.out, json);
      write_text_file(std::filesystem::path(a.out) / "sim_config.json", sim_config_to_json(cfg).dump(2) + "\n");
      out << "patients=" << cohort.size() << " seed=" << cfg.seed << "\n";
      return int(kOk);
    };
  });
}

struct ReproduceArgs {
  std::string out;
  std::uint64_t seed = checks::ReproduceOptions{}.seed;
};

inline void register_reproduce(CLI::App& app, ReproduceArgs& a, std::function<int()>& action, std::ostream& out,
                               std::ostream& log) {
  auto* sub = app.add_subcommand("reproduce-paper", "regenerate the reference numbers and write a manifest");
  sub->add_option("--out", a.out, "output directory")->required();
  sub->add_option("--seed", a.seed, "seed for the Monte Carlo checks");
  sub->callback([&] {
    action = [&] {
      ensure_directory(a.out);
      checks::ReproduceOptions opt;
      opt.seed = a.seed;
      const auto b = checks::reproduce(opt);
      for (const auto& [name, text] : b.artifacts) write_text_file(std::filesystem::path(a.out) / name, text);
      for (const auto& c : b.checks) {
        out << (c.passed ? "pass " : "FAIL ") << c.name << " value=" << csv::format_number(c.value);
        if (!c.detail.empty()) out << " (" << c.detail << ")";
        out << "\n";
      }
      if (const auto* f = b.first_failure()) {
        log << "check failed: " << f->name << "\n";
        return int(kCheckFailure);
      }
      return int(kOk);
    };
  });
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& log = std::cerr) {
  CLI::App app{"parasitometrics: evaluation metrics for parasite-detection algorithms", "parasitometrics"};
  app.require_subcommand(1);
  EvaluateArgs ev;
  CalibrateArgs ca;
  LodArgs lo;
  TuneArgs tu;
  QuantArgs qu;
  PoissonArgs po;
  SimulateArgs si;
  ReproduceArgs re;
  std::function<int()> action;
  register_evaluate(app, ev, action, out, log);
  register_calibrate(app, ca, action, out, log);
  register_lod(app, lo, action, out);
  register_tune(app, tu, action, out, log);
  register_quant(app, qu, action, out, log);
  register_poisson(app, po, action, out);
  register_simulate(app, si, action, out);
  register_reproduce(app, re, action, out, log);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, log);
    return code == 0 ? kOk : kInputError;
  }
  try {
    return action ? action() : kInputError;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: IoError: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace parasitometrics::cli
