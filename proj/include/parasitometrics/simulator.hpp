#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <nlohmann/json.hpp>

#include "parasitometrics/datamodel.hpp"

namespace parasitometrics {

// ---------------------------------------------------------------------------
// Random streams
//
// Every patient owns independent substreams: a std::mt19937_64 engine seeded
// with splitmix64(seed, role, patient index, stream). Draws use Boost.Random
// distributions, whose algorithms are fixed by the library rather than by the
// standard library vendor, so a seed reproduces the same cohort everywhere.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum class StreamRole : std::uint64_t { kNegative = 1, kPositive = 2 };
enum class StreamKind : std::uint64_t { kLatent = 1, kScores = 2 };

inline std::uint64_t substream_seed(std::uint64_t seed, StreamRole role, std::uint64_t index,
                                    StreamKind kind) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(role));
  h = splitmix64(h ^ index);
  return splitmix64(h ^ static_cast<std::uint64_t>(kind));
}

using Engine = std::mt19937_64;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ParasitemiaSpec {
  enum class Type { kFixed, kLogUniform, kList } type = Type::kLogUniform;
  double value = 100.0;
  double lo = 50.0;
  double hi = 50000.0;
  std::vector<double> values;
};

struct FprSpec {
  enum class Type { kNormal, kLogNormal, kMixture } type = Type::kNormal;
  double mean = 50.0;  // normal
  double sd = 20.0;
  double mu_log = 3.0;  // lognormal
  double sigma_log = 0.8;
  std::vector<std::pair<double, FprSpec>> components;  // mixture (weight, dist)
};

struct SensitivitySpec {
  // normal is truncated to [0,1]
  enum class Type { kBeta, kFixed, kNormal } type = Type::kBeta;
  double a = 8.0;
  double b = 2.0;
  double value = 0.8;
  double mean = 0.8;
  double sd = 0.1;
};

struct BetaSpec {
  double a = 2.0;
  double b = 2.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t n_negative = 50;
  std::size_t n_positive = 50;
  double examined_volume = 0.1;  // cV
  std::string cv_description = "1 uL blood";
  ParasitemiaSpec parasitemia;
  std::map<Species, double> species_mix{
      {Species::kFalciparum, 0.8}, {Species::kVivax, 0.15}, {Species::kMalariae, 0.05}};
  FprSpec fpr;
  SensitivitySpec patient_sensitivity;
  BetaSpec parasite_score{2.0, 2.0};  // b is kept; a is solved per patient
  BetaSpec distractor_score{2.0, 8.0};
  double background_distractor_rate = 200.0;  // low-score distractors per cV
  double reference_threshold = 0.5;
  std::optional<double> wbc_per_cv;  // draws wbc_count ~ Poisson(wbc_per_cv V) when set
};

namespace detail {

inline void validate_fpr(const FprSpec& f) {
  switch (f.type) {
    case FprSpec::Type::kNormal:
      if (!std::isfinite(f.mean) || !(f.sd >= 0.0)) fail(ErrorCode::kInvalidConfig, "fpr normal needs sd >= 0");
      if (f.mean <= 0.0 && f.sd == 0.0) fail(ErrorCode::kInvalidConfig, "fpr normal has no mass above 0");
      break;
    case FprSpec::Type::kLogNormal:
      if (!std::isfinite(f.mu_log) || !(f.sigma_log >= 0.0)) fail(ErrorCode::kInvalidConfig, "fpr lognormal needs sigma_log >= 0");
      break;
    case FprSpec::Type::kMixture: {
      if (f.components.empty()) fail(ErrorCode::kInvalidConfig, "fpr mixture has no components");
      double w = 0.0;
      for (const auto& [weight, comp] : f.components) {
        if (!(weight >= 0.0)) fail(ErrorCode::kInvalidConfig, "mixture weights must be >= 0");
        w += weight;
        validate_fpr(comp);
      }
      if (std::abs(w - 1.0) > 1e-9) fail(ErrorCode::kInvalidConfig, "mixture weights must sum to 1");
      break;
    }
  }
}

inline void validate_beta(const BetaSpec& b, const char* what) {
  if (!(b.a > 0.0) || !(b.b > 0.0) || !std::isfinite(b.a) || !std::isfinite(b.b)) {
    fail(ErrorCode::kInvalidConfig, std::string(what) + " beta parameters must be > 0");
  }
}

}  // namespace detail

inline void validate_sim_config(const SimConfig& cfg) {
  if (!(cfg.examined_volume > 0.0) || !std::isfinite(cfg.examined_volume)) {
    fail(ErrorCode::kInvalidConfig, "examined_volume must be > 0");
  }
  if (cfg.n_negative + cfg.n_positive == 0) fail(ErrorCode::kInvalidConfig, "cohort would be empty");
  const auto& p = cfg.parasitemia;
  switch (p.type) {
    case ParasitemiaSpec::Type::kFixed:
      if (!(p.value > 0.0)) fail(ErrorCode::kInvalidConfig, "fixed parasitemia must be > 0");
      break;
    case ParasitemiaSpec::Type::kLogUniform:
      if (!(p.lo > 0.0) || !(p.hi >= p.lo)) fail(ErrorCode::kInvalidConfig, "log-uniform parasitemia needs 0 < lo <= hi");
      break;
    case ParasitemiaSpec::Type::kList:
      if (p.values.empty()) fail(ErrorCode::kInvalidConfig, "parasitemia list is empty");
      for (double v : p.values)
        if (!(v > 0.0)) fail(ErrorCode::kInvalidConfig, "parasitemia list values must be > 0");
      break;
  }
  double w = 0.0;
  for (const auto& [s, weight] : cfg.species_mix) {
    if (!(weight >= 0.0)) fail(ErrorCode::kInvalidConfig, "species weights must be >= 0");
    if (s == Species::kNone && weight > 0.0) fail(ErrorCode::kInvalidConfig, "species mix cannot include none");
    w += weight;
  }
  if (cfg.n_positive > 0 && std::abs(w - 1.0) > 1e-9) fail(ErrorCode::kInvalidConfig, "species weights must sum to 1");
  detail::validate_fpr(cfg.fpr);
  const auto& s = cfg.patient_sensitivity;
  switch (s.type) {
    case SensitivitySpec::Type::kBeta:
      detail::validate_beta({s.a, s.b}, "patient_sensitivity");
      break;
    case SensitivitySpec::Type::kFixed:
      if (!(s.value >= 0.0 && s.value <= 1.0)) fail(ErrorCode::kInvalidConfig, "fixed sensitivity must be in [0,1]");
      break;
    case SensitivitySpec::Type::kNormal:
      if (!(s.sd >= 0.0) || !(s.mean >= 0.0 && s.mean <= 1.0)) {
        fail(ErrorCode::kInvalidConfig, "normal sensitivity needs mean in [0,1] and sd >= 0");
      }
      break;
  }
  detail::validate_beta(cfg.parasite_score, "parasite_score");
  detail::validate_beta(cfg.distractor_score, "distractor_score");
  if (!(cfg.background_distractor_rate >= 0.0)) fail(ErrorCode::kInvalidConfig, "background rate must be >= 0");
  if (!(cfg.reference_threshold > 0.0 && cfg.reference_threshold < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "reference_threshold must be in (0,1)");
  }
  if (cfg.wbc_per_cv && !(*cfg.wbc_per_cv >= 0.0)) fail(ErrorCode::kInvalidConfig, "wbc_per_cv must be >= 0");
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

namespace detail {

inline double uniform01(Engine& e) { return boost::random::uniform_01<double>()(e); }

inline double normal(Engine& e, double mean, double sd) {
  if (sd == 0.0) return mean;
  return boost::random::normal_distribution<double>(mean, sd)(e);
}

// Normal conditioned on [lo, hi] by rejection.
inline double truncated_normal(Engine& e, double mean, double sd, double lo, double hi) {
  if (sd == 0.0) return std::clamp(mean, lo, hi);
  for (;;) {
    const double x = normal(e, mean, sd);
    if (x >= lo && x <= hi) return x;
  }
}

inline std::int64_t poisson(Engine& e, double mean) {
  if (mean <= 0.0) return 0;
  return boost::random::poisson_distribution<std::int64_t, double>(mean)(e);
}

inline double draw_fpr(Engine& e, const FprSpec& f) {
  switch (f.type) {
    case FprSpec::Type::kNormal:
      return truncated_normal(e, f.mean, f.sd, 0.0, INFINITY);
    case FprSpec::Type::kLogNormal:
      return std::exp(normal(e, f.mu_log, f.sigma_log));
    case FprSpec::Type::kMixture: {
      const double u = uniform01(e);
      double acc = 0.0;
      for (const auto& [w, comp] : f.components) {
        acc += w;
        if (u < acc) return draw_fpr(e, comp);
      }
      return draw_fpr(e, f.components.back().second);
    }
  }
  return 0.0;
}

inline double draw_sensitivity(Engine& e, const SensitivitySpec& s) {
  switch (s.type) {
    case SensitivitySpec::Type::kBeta:
      return boost::random::beta_distribution<double>(s.a, s.b)(e);
    case SensitivitySpec::Type::kFixed:
      return s.value;
    case SensitivitySpec::Type::kNormal:
      return truncated_normal(e, s.mean, s.sd, 0.0, 1.0);
  }
  return 0.0;
}

inline double draw_parasitemia(Engine& e, const ParasitemiaSpec& p, std::size_t index) {
  switch (p.type) {
    case ParasitemiaSpec::Type::kFixed:
      return p.value;
    case ParasitemiaSpec::Type::kLogUniform:
      return std::clamp(std::exp(std::log(p.lo) + uniform01(e) * (std::log(p.hi) - std::log(p.lo))), p.lo,
                        p.hi);
    case ParasitemiaSpec::Type::kList:
      return p.values[index % p.values.size()];
  }
  return 0.0;
}

inline Species draw_species(Engine& e, const std::map<Species, double>& mix) {
  const double u = uniform01(e);
  double acc = 0.0;
  Species last = Species::kFalciparum;
  for (const auto& [s, w] : mix) {
    if (w <= 0.0) continue;
    acc += w;
    last = s;
    if (u < acc) return s;
  }
  return last;
}

// Beta(a, b) conditioned to lie above (or below) x0, by inverse CDF.
inline double beta_conditioned(Engine& e, const BetaSpec& b, double x0, bool above) {
  const double F0 = boost::math::ibeta(b.a, b.b, x0);
  const double u = uniform01(e);
  const double p = above ? F0 + u * (1.0 - F0) : u * F0;
  double x = boost::math::ibeta_inv(b.a, b.b, std::clamp(p, 0.0, 1.0));
  if (above) return std::clamp(x, x0, 1.0);
  return std::clamp(x, 0.0, std::nextafter(x0, 0.0));
}

}  // namespace detail

/// Shape a of Beta(a, b) with Pr[score >= threshold] = s, by bisection on
/// log a over [1e-4, 1e7].
inline double calibrate_beta_shape(double s, double b, double threshold) {
  double lo = std::log(1e-4), hi = std::log(1e7);
  auto tail = [&](double log_a) { return boost::math::ibetac(std::exp(log_a), b, threshold); };
  if (s <= tail(lo)) return std::exp(lo);
  if (s >= tail(hi)) return std::exp(hi);
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) < s ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Latent per-patient quantities, drawn from the latent substream in a fixed
/// order so both generation modes see identical values.
struct LatentPatient {
  std::string patient_id;
  bool positive = false;
  double parasitemia = 0.0;
  Species species = Species::kNone;
  double sensitivity = 0.0;
  double fpr_rate = 0.0;
  std::int64_t n_parasites = 0;
  std::int64_t n_false_positive = 0;  // distractors scoring above the reference threshold
  std::int64_t n_background = 0;      // distractors scoring below it
  std::optional<int> wbc_count;
};

inline std::string simulated_patient_id(bool positive, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", positive ? "P" : "N", index);
  return buf;
}

inline LatentPatient draw_latent(const SimConfig& cfg, bool positive, std::size_t index) {
  Engine e(substream_seed(cfg.seed, positive ? StreamRole::kPositive : StreamRole::kNegative, index,
                          StreamKind::kLatent));
  LatentPatient lp;
  lp.patient_id = simulated_patient_id(positive, index);
  lp.positive = positive;
  const double V = cfg.examined_volume;
  if (positive) {
    lp.parasitemia = detail::draw_parasitemia(e, cfg.parasitemia, index);
    lp.species = detail::draw_species(e, cfg.species_mix);
    lp.sensitivity = detail::draw_sensitivity(e, cfg.patient_sensitivity);
  }
  lp.fpr_rate = detail::draw_fpr(e, cfg.fpr);
  lp.n_parasites = positive ? detail::poisson(e, lp.parasitemia * V) : 0;
  lp.n_false_positive = detail::poisson(e, lp.fpr_rate * V);
  lp.n_background = detail::poisson(e, cfg.background_distractor_rate * V);
  if (cfg.wbc_per_cv) lp.wbc_count = static_cast<int>(detail::poisson(e, *cfg.wbc_per_cv * V));
  return lp;
}

inline PatientRecord materialize_patient(const SimConfig& cfg, const LatentPatient& lp, std::size_t index,
                                         std::map<double, double>& shape_cache) {
  Engine e(substream_seed(cfg.seed, lp.positive ? StreamRole::kPositive : StreamRole::kNegative, index,
                          StreamKind::kScores));
  PatientRecord p;
  p.patient_id = lp.patient_id;
  p.ground_truth = lp.positive ? GroundTruth::kPositive : GroundTruth::kNegative;
  p.species = lp.positive ? lp.species : Species::kNone;
  p.true_parasitemia = lp.positive ? lp.parasitemia : 0.0;
  p.examined_volume = cfg.examined_volume;
  p.wbc_count = lp.wbc_count;
  p.objects.reserve(static_cast<std::size_t>(lp.n_parasites + lp.n_false_positive + lp.n_background));
  const double ref = cfg.reference_threshold;
  std::size_t serial = 0;
  auto next_id = [&] { return "o" + std::to_string(serial++); };

  if (lp.n_parasites > 0) {
    const double s = lp.sensitivity;
    const bool all_pass = s >= 1.0, none_pass = s <= 0.0;
    double a = 0.0;
    if (!all_pass && !none_pass) {
      auto it = shape_cache.find(s);
      if (it == shape_cache.end()) {
        it = shape_cache.emplace(s, calibrate_beta_shape(s, cfg.parasite_score.b, ref)).first;
      }
      a = it->second;
    }
    boost::random::beta_distribution<double> beta(a > 0.0 ? a : 1.0, cfg.parasite_score.b);
    for (std::int64_t i = 0; i < lp.n_parasites; ++i) {
      double score;
      if (all_pass || none_pass) {
        score = detail::beta_conditioned(e, cfg.parasite_score, ref, all_pass);
      } else {
        score = std::clamp(beta(e), 0.0, 1.0);
      }
      p.objects.push_back({next_id(), score, ObjectLabel::kParasite});
    }
  }
  for (std::int64_t i = 0; i < lp.n_false_positive; ++i) {
    p.objects.push_back({next_id(), detail::beta_conditioned(e, cfg.distractor_score, ref, true),
                         ObjectLabel::kDistractor});
  }
  for (std::int64_t i = 0; i < lp.n_background; ++i) {
    p.objects.push_back({next_id(), detail::beta_conditioned(e, cfg.distractor_score, ref, false),
                         ObjectLabel::kDistractor});
  }
  return p;
}

inline CohortDataset generate_cohort(const SimConfig& cfg) {
  validate_sim_config(cfg);
  std::vector<PatientRecord> patients;
  patients.reserve(cfg.n_negative + cfg.n_positive);
  std::map<double, double> shape_cache;
  for (std::size_t i = 0; i < cfg.n_negative; ++i) {
    patients.push_back(materialize_patient(cfg, draw_latent(cfg, false, i), i, shape_cache));
  }
  for (std::size_t i = 0; i < cfg.n_positive; ++i) {
    patients.push_back(materialize_patient(cfg, draw_latent(cfg, true, i), i, shape_cache));
  }
  return CohortDataset(cfg.cv_description, std::move(patients), "simulator seed=" + std::to_string(cfg.seed));
}

/// Count-level draw at the reference threshold without materializing object
/// scores: tp ~ Binomial(n_parasites, s), fp = distractors above threshold.
/// Latent values and fp match generate_cohort for the same config.
struct SimulatedCounts {
  LatentPatient latent;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  double examined_volume = 0.0;
};

inline std::vector<SimulatedCounts> simulate_counts(const SimConfig& cfg) {
  validate_sim_config(cfg);
  std::vector<SimulatedCounts> out;
  out.reserve(cfg.n_negative + cfg.n_positive);
  auto one = [&](bool positive, std::size_t i) {
    SimulatedCounts c;
    c.latent = draw_latent(cfg, positive, i);
    c.examined_volume = cfg.examined_volume;
    c.fp = c.latent.n_false_positive;
    if (c.latent.n_parasites > 0) {
      Engine e(substream_seed(cfg.seed, positive ? StreamRole::kPositive : StreamRole::kNegative, i,
                              StreamKind::kScores));
      const double s = std::clamp(c.latent.sensitivity, 0.0, 1.0);
      c.tp = boost::random::binomial_distribution<std::int64_t, double>(c.latent.n_parasites, s)(e);
    }
    out.push_back(std::move(c));
  };
  for (std::size_t i = 0; i < cfg.n_negative; ++i) one(false, i);
  for (std::size_t i = 0; i < cfg.n_positive; ++i) one(true, i);
  return out;
}

/// Diagnosis portion of the WHO 56 competency slide set: 20 negatives and 20
/// positives with parasitemia log-uniform on [80, 200] per cV.
inline SimConfig who56_preset(std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.n_negative = 20;
  cfg.n_positive = 20;
  cfg.parasitemia.type = ParasitemiaSpec::Type::kLogUniform;
  cfg.parasitemia.lo = 80.0;
  cfg.parasitemia.hi = 200.0;
  return cfg;
}

/// Right-skewed FPR preset: mostly clean samples and a few dirty ones.
inline SimConfig skewed_fpr_preset(std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.fpr.type = FprSpec::Type::kLogNormal;
  cfg.fpr.mu_log = std::log(30.0);
  cfg.fpr.sigma_log = 0.9;
  return cfg;
}

// ---------------------------------------------------------------------------
// Worked-example fixtures
// ---------------------------------------------------------------------------

struct WorkedExample {
  std::string name;
  std::string description;
  std::optional<CohortDataset> cohort;
  std::map<std::string, double> parameters;
  std::map<std::string, double> expected;
};

namespace detail {

inline void add_objects(PatientRecord& p, std::int64_t n, double score, ObjectLabel label) {
  const auto start = p.objects.size();
  for (std::int64_t i = 0; i < n; ++i) {
    p.objects.push_back({"o" + std::to_string(start + static_cast<std::size_t>(i)), score, label});
  }
}

inline PatientRecord positive_patient(std::string id, double parasitemia, double volume) {
  PatientRecord p;
  p.patient_id = std::move(id);
  p.ground_truth = GroundTruth::kPositive;
  p.species = Species::kFalciparum;
  p.true_parasitemia = parasitemia;
  p.examined_volume = volume;
  return p;
}

}  // namespace detail

/// One patient at 50,000 p/cV fully detected and three at 300 p/cV fully
/// missed (objects at 0.9 and 0.1, operating point C = 0.5, T = 1).
inline CohortDataset pooled_vs_patient_fixture() {
  std::vector<PatientRecord> ps;
  auto p1 = detail::positive_patient("patient1", 50000.0, 1.0);
  detail::add_objects(p1, 50000, 0.9, ObjectLabel::kParasite);
  ps.push_back(std::move(p1));
  for (int i = 2; i <= 4; ++i) {
    auto p = detail::positive_patient("patient" + std::to_string(i), 300.0, 1.0);
    detail::add_objects(p, 300, 0.1, ObjectLabel::kParasite);
    ps.push_back(std::move(p));
  }
  return CohortDataset("1 uL blood", std::move(ps), "worked example: pooled vs patient-level");
}

/// High-parasitemia sample: 10,000 p/cV, 100 FP/cV, perfect sensitivity
/// (V = 0.01 cV: 100 parasites and 1 distractor above C = 0.5).
inline CohortDataset precision_fixture() {
  auto p = detail::positive_patient("highP", 10000.0, 0.01);
  detail::add_objects(p, 100, 0.9, ObjectLabel::kParasite);
  detail::add_objects(p, 1, 0.9, ObjectLabel::kDistractor);
  return CohortDataset("1 uL blood", {std::move(p)}, "worked example: precision re-expression");
}

/// Thin-film style imbalance at 100 p/cV: 2 parasites among 100,000 RBC
/// distractors in 0.02 cV (5 million per cV). 100 distractors outscore one
/// parasite, so the full-sensitivity threshold passes 50 FPs per parasite.
inline CohortDataset auc_imbalance_fixture() {
  auto p = detail::positive_patient("thinfilm", 100.0, 0.02);
  p.objects.push_back({"parasite_lo", 0.9, ObjectLabel::kParasite});
  p.objects.push_back({"parasite_hi", 0.99, ObjectLabel::kParasite});
  detail::add_objects(p, 100, 0.95, ObjectLabel::kDistractor);
  detail::add_objects(p, 99900, 0.1, ObjectLabel::kDistractor);
  return CohortDataset("1 uL blood", {std::move(p)}, "worked example: AUC under imbalance");
}

inline std::vector<WorkedExample> worked_examples() {
  std::vector<WorkedExample> out;
  out.push_back({"patient-level",
                 "pooled object sensitivity vs patient-level sensitivity",
                 pooled_vs_patient_fixture(),
                 {{"C", 0.5}, {"T", 1.0}},
                 {{"pooled_object_sensitivity", 50000.0 / 50900.0}, {"patient_sensitivity", 0.25}}});
  out.push_back({"precision",
                 "precision at high parasitemia re-expressed at LoD 100 p/cV",
                 precision_fixture(),
                 {{"C", 0.5}, {"lod_parasitemia", 100.0}},
                 {{"precision", 10000.0 / 10100.0}, {"precision_at_lod", 0.5}}});
  out.push_back({"auc-imbalance",
                 "object AUC >= 0.999 with 50 FPs per parasite",
                 auc_imbalance_fixture(),
                 {{"distractor_ratio", 50000.0}},
                 {{"auc_min", 0.999}, {"fp_per_parasite", 50.0}}});
  return out;
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

namespace detail {

inline double jnum(const nlohmann::json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) fail(ErrorCode::kInvalidConfig, std::string("'") + key + "' must be a number");
  return it->get<double>();
}

inline std::string jtype(const nlohmann::json& j, const char* what) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    fail(ErrorCode::kInvalidConfig, std::string(what) + " needs a string 'type'");
  }
  return j["type"].get<std::string>();
}

inline FprSpec fpr_from_json(const nlohmann::json& j) {
  FprSpec f;
  const auto t = jtype(j, "fpr");
  if (t == "normal") {
    f.type = FprSpec::Type::kNormal;
    f.mean = jnum(j, "mean", f.mean);
    f.sd = jnum(j, "sd", f.sd);
  } else if (t == "lognormal") {
    f.type = FprSpec::Type::kLogNormal;
    f.mu_log = jnum(j, "mu_log", f.mu_log);
    f.sigma_log = jnum(j, "sigma_log", f.sigma_log);
  } else if (t == "mixture") {
    f.type = FprSpec::Type::kMixture;
    if (!j.contains("components") || !j["components"].is_array()) {
      fail(ErrorCode::kInvalidConfig, "fpr mixture needs a 'components' array");
    }
    for (const auto& c : j["components"]) {
      if (!c.contains("dist")) fail(ErrorCode::kInvalidConfig, "mixture component needs 'dist'");
      f.components.emplace_back(jnum(c, "weight", 0.0), fpr_from_json(c["dist"]));
    }
  } else {
    fail(ErrorCode::kInvalidConfig, "unknown fpr type '" + t + "'");
  }
  return f;
}

inline nlohmann::ordered_json fpr_to_json(const FprSpec& f) {
  switch (f.type) {
    case FprSpec::Type::kNormal:
      return {{"type", "normal"}, {"mean", f.mean}, {"sd", f.sd}};
    case FprSpec::Type::kLogNormal:
      return {{"type", "lognormal"}, {"mu_log", f.mu_log}, {"sigma_log", f.sigma_log}};
    case FprSpec::Type::kMixture: {
      nlohmann::ordered_json comps = nlohmann::ordered_json::array();
      for (const auto& [w, c] : f.components) comps.push_back({{"weight", w}, {"dist", fpr_to_json(c)}});
      return {{"type", "mixture"}, {"components", comps}};
    }
  }
  return {};
}

}  // namespace detail

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kInvalidConfig, "simulation config must be a JSON object");
  SimConfig cfg;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      fail(ErrorCode::kInvalidConfig, "'seed' must be an integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  auto count = [&](const char* key, std::size_t fallback) -> std::size_t {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer() || j[key].get<long long>() < 0) {
      fail(ErrorCode::kInvalidConfig, std::string("'") + key + "' must be a non-negative integer");
    }
    return j[key].get<std::size_t>();
  };
  cfg.n_negative = count("n_negative", cfg.n_negative);
  cfg.n_positive = count("n_positive", cfg.n_positive);
  cfg.examined_volume = detail::jnum(j, "examined_volume", cfg.examined_volume);
  if (j.contains("cv_description")) cfg.cv_description = j["cv_description"].get<std::string>();
  if (j.contains("parasitemia")) {
    const auto& p = j["parasitemia"];
    const auto t = detail::jtype(p, "parasitemia");
    if (t == "fixed") {
      cfg.parasitemia.type = ParasitemiaSpec::Type::kFixed;
      cfg.parasitemia.value = detail::jnum(p, "value", cfg.parasitemia.value);
    } else if (t == "log_uniform") {
      cfg.parasitemia.type = ParasitemiaSpec::Type::kLogUniform;
      cfg.parasitemia.lo = detail::jnum(p, "lo", cfg.parasitemia.lo);
      cfg.parasitemia.hi = detail::jnum(p, "hi", cfg.parasitemia.hi);
    } else if (t == "list") {
      cfg.parasitemia.type = ParasitemiaSpec::Type::kList;
      cfg.parasitemia.values = p.value("values", std::vector<double>{});
    } else {
      fail(ErrorCode::kInvalidConfig, "unknown parasitemia type '" + t + "'");
    }
  }
  if (j.contains("species_mix")) {
    cfg.species_mix.clear();
    for (const auto& [code, w] : j["species_mix"].items()) {
      Species s;
      try {
        s = parse_species(code);
      } catch (const Error&) {
        fail(ErrorCode::kInvalidConfig, "unknown species '" + code + "' in species_mix");
      }
      if (!w.is_number()) fail(ErrorCode::kInvalidConfig, "species weights must be numbers");
      cfg.species_mix[s] = w.get<double>();
    }
  }
  if (j.contains("fpr")) cfg.fpr = detail::fpr_from_json(j["fpr"]);
  if (j.contains("patient_sensitivity")) {
    const auto& s = j["patient_sensitivity"];
    const auto t = detail::jtype(s, "patient_sensitivity");
    auto& ps = cfg.patient_sensitivity;
    if (t == "beta") {
      ps.type = SensitivitySpec::Type::kBeta;
      ps.a = detail::jnum(s, "a", ps.a);
      ps.b = detail::jnum(s, "b", ps.b);
    } else if (t == "fixed") {
      ps.type = SensitivitySpec::Type::kFixed;
      ps.value = detail::jnum(s, "value", ps.value);
    } else if (t == "normal") {
      ps.type = SensitivitySpec::Type::kNormal;
      ps.mean = detail::jnum(s, "mean", ps.mean);
      ps.sd = detail::jnum(s, "sd", ps.sd);
    } else {
      fail(ErrorCode::kInvalidConfig, "unknown patient_sensitivity type '" + t + "'");
    }
  }
  auto beta = [&](const char* key, BetaSpec& b) {
    if (!j.contains(key)) return;
    b.a = detail::jnum(j[key], "a", b.a);
    b.b = detail::jnum(j[key], "b", b.b);
  };
  beta("parasite_score", cfg.parasite_score);
  beta("distractor_score", cfg.distractor_score);
  cfg.background_distractor_rate = detail::jnum(j, "background_distractor_rate", cfg.background_distractor_rate);
  cfg.reference_threshold = detail::jnum(j, "reference_threshold", cfg.reference_threshold);
  if (j.contains("wbc_per_cv") && !j["wbc_per_cv"].is_null()) cfg.wbc_per_cv = detail::jnum(j, "wbc_per_cv", 0.0);
  validate_sim_config(cfg);
  return cfg;
}

inline nlohmann::ordered_json sim_config_to_json(const SimConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["n_negative"] = cfg.n_negative;
  j["n_positive"] = cfg.n_positive;
  j["examined_volume"] = cfg.examined_volume;
  j["cv_description"] = cfg.cv_description;
  const auto& p = cfg.parasitemia;
  switch (p.type) {
    case ParasitemiaSpec::Type::kFixed: j["parasitemia"] = {{"type", "fixed"}, {"value", p.value}}; break;
    case ParasitemiaSpec::Type::kLogUniform:
      j["parasitemia"] = {{"type", "log_uniform"}, {"lo", p.lo}, {"hi", p.hi}};
      break;
    case ParasitemiaSpec::Type::kList: j["parasitemia"] = {{"type", "list"}, {"values", p.values}}; break;
  }
  nlohmann::ordered_json mix = nlohmann::ordered_json::object();
  for (const auto& [s, w] : cfg.species_mix) mix[std::string(species_code(s))] = w;
  j["species_mix"] = mix;
  j["fpr"] = detail::fpr_to_json(cfg.fpr);
  const auto& s = cfg.patient_sensitivity;
  switch (s.type) {
    case SensitivitySpec::Type::kBeta: j["patient_sensitivity"] = {{"type", "beta"}, {"a", s.a}, {"b", s.b}}; break;
    case SensitivitySpec::Type::kFixed: j["patient_sensitivity"] = {{"type", "fixed"}, {"value", s.value}}; break;
    case SensitivitySpec::Type::kNormal:
      j["patient_sensitivity"] = {{"type", "normal"}, {"mean", s.mean}, {"sd", s.sd}};
      break;
  }
  j["parasite_score"] = {{"a", cfg.parasite_score.a}, {"b", cfg.parasite_score.b}};
  j["distractor_score"] = {{"a", cfg.distractor_score.a}, {"b", cfg.distractor_score.b}};
  j["background_distractor_rate"] = cfg.background_distractor_rate;
  j["reference_threshold"] = cfg.reference_threshold;
  j["wbc_per_cv"] = cfg.wbc_per_cv ? nlohmann::ordered_json(*cfg.wbc_per_cv) : nlohmann::ordered_json();
  return j;
}

}  // namespace parasitometrics
