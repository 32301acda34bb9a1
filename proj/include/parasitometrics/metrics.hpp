#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parasitometrics/datamodel.hpp"
#include "parasitometrics/stats.hpp"

namespace parasitometrics {

enum class MetricKind { kFpr, kObjectSensitivity };

/// A per-patient metric vector (F or S) and its summary. Entries are ordered
/// by patient_id.
struct MetricDistribution {
  MetricKind kind = MetricKind::kFpr;
  std::map<std::string, double> per_patient;
  DistSummary summary;
  std::vector<std::string> excluded;  // patients left out (S: no sampled parasites)
  std::vector<std::string> warnings;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(per_patient.size());
    for (const auto& [id, x] : per_patient) v.push_back(x);
    return v;
  }
};

inline MetricDistribution make_distribution(MetricKind kind, std::map<std::string, double> entries) {
  MetricDistribution d;
  d.kind = kind;
  d.per_patient = std::move(entries);
  d.summary = summarize(d.values());
  return d;
}

struct OperatingPoint {
  double C = 0.5;  // object-score threshold
  double T = 0.0;  // positively-labelled objects per cV
};

inline void validate_operating_point(const OperatingPoint& op) {
  if (!(op.C >= 0.0 && op.C <= 1.0)) fail(ErrorCode::kOutOfRange, "operating point C must be in [0,1]");
  if (!(op.T >= 0.0) || std::isnan(op.T)) fail(ErrorCode::kOutOfRange, "operating point T must be >= 0");
}

inline MetricDistribution fpr_distribution(const CohortDataset& cohort, double C, bool negatives_only) {
  std::map<std::string, double> f;
  bool used_positive = false;
  for (const auto& p : cohort.patients()) {
    if (negatives_only && p.positive()) continue;
    used_positive |= p.positive();
    f[p.patient_id] = patient_counts(p, C).FP;
  }
  if (f.empty()) {
    fail(ErrorCode::kNoEligiblePatients, "FPR distribution needs at least one negative patient");
  }
  auto d = make_distribution(MetricKind::kFpr, std::move(f));
  if (used_positive) {
    d.warnings.push_back(
        "FPR computed over positive patients; unannotated parasites may inflate the false "
        "positive rate");
  }
  return d;
}

inline MetricDistribution sensitivity_distribution(const CohortDataset& cohort, double C) {
  std::map<std::string, double> s;
  std::vector<std::string> excluded;
  for (const auto& p : cohort.patients()) {
    if (!p.positive()) continue;
    const auto c = patient_counts(p, C);
    if (c.tp + c.fn == 0) {
      excluded.push_back(p.patient_id);
      continue;
    }
    s[p.patient_id] = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (s.empty()) {
    fail(ErrorCode::kNoEligiblePatients,
         "sensitivity distribution needs a positive patient with at least one parasite object");
  }
  auto d = make_distribution(MetricKind::kObjectSensitivity, std::move(s));
  d.excluded = std::move(excluded);
  if (!d.excluded.empty()) {
    d.warnings.push_back(std::to_string(d.excluded.size()) +
                         " positive patient(s) with no sampled parasite objects excluded from S");
  }
  return d;
}

struct PooledSensitivity {
  double value = 0.0;
  std::int64_t parasite_objects = 0;
  std::string dominant_patient;
  double dominant_fraction = 0.0;
  std::optional<std::string> imbalance_warning;
};

/// Object sensitivity over all parasites pooled across patients. Useful only
/// as an intermediate metric; a single high-parasitemia patient can dominate.
inline PooledSensitivity pooled_object_sensitivity(const CohortDataset& cohort, double C) {
  PooledSensitivity r;
  std::int64_t tp = 0;
  std::int64_t largest = 0;
  for (const auto& p : cohort.patients()) {
    const auto c = patient_counts(p, C);
    const auto n = c.tp + c.fn;
    tp += c.tp;
    r.parasite_objects += n;
    if (n > largest) {
      largest = n;
      r.dominant_patient = p.patient_id;
    }
  }
  if (r.parasite_objects == 0) fail(ErrorCode::kNoParasiteObjects, "cohort has no parasite objects");
  r.value = static_cast<double>(tp) / static_cast<double>(r.parasite_objects);
  r.dominant_fraction = static_cast<double>(largest) / static_cast<double>(r.parasite_objects);
  if (r.dominant_fraction > 0.5) {
    r.imbalance_warning = "patient '" + r.dominant_patient + "' contributes " +
                          std::to_string(r.dominant_fraction * 100.0) +
                          "% of pooled parasite objects; pooled sensitivity is dominated by it";
  }
  return r;
}

inline std::map<std::string, GroundTruth> patient_diagnoses(const CohortDataset& cohort,
                                                            const OperatingPoint& op) {
  validate_operating_point(op);
  std::map<std::string, GroundTruth> out;
  for (const auto& p : cohort.patients()) {
    const double N = patient_counts(p, op.C).N;
    out[p.patient_id] = N >= op.T ? GroundTruth::kPositive : GroundTruth::kNegative;
  }
  return out;
}

/// Half-open parasitemia interval (lo, hi] per cV.
struct ParasitemiaBin {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double p) const { return p > lo && p <= hi; }
  std::string label() const {
    auto fmt = [](double v) {
      if (std::isinf(v)) return std::string("inf");
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    return "(" + fmt(lo) + "," + fmt(hi) + "]";
  }
};

inline std::vector<ParasitemiaBin> default_parasitemia_bins() {
  return {{0, 50}, {50, 200}, {200, 1000}, {1000, std::numeric_limits<double>::infinity()}};
}

inline void validate_bins(const std::vector<ParasitemiaBin>& bins) {
  if (bins.empty()) fail(ErrorCode::kInvalidInput, "parasitemia bins are empty");
  if (bins.front().lo != 0.0) fail(ErrorCode::kInvalidInput, "parasitemia bins must start at 0");
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (!(bins[i].hi > bins[i].lo)) fail(ErrorCode::kInvalidInput, "empty parasitemia bin " + bins[i].label());
    if (i + 1 < bins.size() && bins[i].hi != bins[i + 1].lo) {
      fail(ErrorCode::kInvalidInput, "parasitemia bins must be contiguous and non-overlapping");
    }
  }
  if (!std::isinf(bins.back().hi)) fail(ErrorCode::kInvalidInput, "last parasitemia bin must extend to infinity");
}

struct Stratum {
  std::string label;
  std::size_t n_patients = 0;
  std::size_t n_detected = 0;
  std::optional<double> value;  // absent when the stratum is empty
};

struct StratifiedResult {
  std::vector<ParasitemiaBin> bins;
  std::vector<Stratum> by_parasitemia;
  std::vector<Stratum> by_species;
  std::size_t n_patients = 0;
  std::optional<double> overall;
};

struct PatientLevelResult {
  StratifiedResult sensitivity;
  std::optional<double> specificity;  // absent when there are no negatives
  std::size_t n_negative = 0;
  std::size_t n_negative_correct = 0;
  OperatingPoint op;
};

inline PatientLevelResult patient_level_sens_spec(const CohortDataset& cohort,
                                                  const OperatingPoint& op,
                                                  const std::vector<ParasitemiaBin>& bins) {
  validate_bins(bins);
  const auto dx = patient_diagnoses(cohort, op);
  PatientLevelResult r;
  r.op = op;
  auto& sens = r.sensitivity;
  sens.bins = bins;
  for (const auto& b : bins) sens.by_parasitemia.push_back({b.label(), 0, 0, std::nullopt});
  std::array<Stratum, kSpeciesCount> species{};
  for (Species s : kAllSpecies) species[species_index(s)].label = std::string(species_code(s));

  std::size_t detected = 0;
  for (const auto& p : cohort.patients()) {
    const bool called_pos = dx.at(p.patient_id) == GroundTruth::kPositive;
    if (!p.positive()) {
      ++r.n_negative;
      r.n_negative_correct += called_pos ? 0 : 1;
      continue;
    }
    ++sens.n_patients;
    detected += called_pos ? 1 : 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (bins[i].contains(p.true_parasitemia)) {
        ++sens.by_parasitemia[i].n_patients;
        sens.by_parasitemia[i].n_detected += called_pos ? 1 : 0;
        break;
      }
    }
    auto& st = species[species_index(p.species)];
    ++st.n_patients;
    st.n_detected += called_pos ? 1 : 0;
  }
  auto finish = [](Stratum& s) {
    if (s.n_patients) s.value = static_cast<double>(s.n_detected) / static_cast<double>(s.n_patients);
  };
  for (auto& s : sens.by_parasitemia) finish(s);
  for (Species s : kAllSpecies) {
    if (s == Species::kNone) continue;
    finish(species[species_index(s)]);
    sens.by_species.push_back(species[species_index(s)]);
  }
  if (sens.n_patients) sens.overall = static_cast<double>(detected) / static_cast<double>(sens.n_patients);
  if (r.n_negative) {
    r.specificity = static_cast<double>(r.n_negative_correct) / static_cast<double>(r.n_negative);
  }
  return r;
}

/// True species (rows) by predicted species (columns), over all seven classes
/// including None.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kSpeciesCount>, kSpeciesCount> counts{};

  std::int64_t at(Species truth, Species predicted) const {
    return counts[species_index(truth)][species_index(predicted)];
  }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
      for (auto v : row) t += v;
    return t;
  }
  std::int64_t row_sum(Species truth) const {
    std::int64_t t = 0;
    for (auto v : counts[species_index(truth)]) t += v;
    return t;
  }

  // [truth falciparum?][predicted falciparum?]; index 0 = falciparum.
  std::array<std::array<std::int64_t, 2>, 2> falciparum_collapse() const {
    std::array<std::array<std::int64_t, 2>, 2> out{};
    for (Species t : kAllSpecies) {
      for (Species p : kAllSpecies) {
        out[t == Species::kFalciparum ? 0 : 1][p == Species::kFalciparum ? 0 : 1] += at(t, p);
      }
    }
    return out;
  }
};

inline ConfusionMatrix species_confusion(const CohortDataset& cohort,
                                         const std::map<std::string, Species>& predicted) {
  for (const auto& [id, s] : predicted) {
    if (!cohort.find(id)) fail(ErrorCode::kUnknownPatient, "prediction for unknown patient '" + id + "'");
  }
  ConfusionMatrix m;
  for (const auto& p : cohort.patients()) {
    auto it = predicted.find(p.patient_id);
    if (it == predicted.end()) {
      fail(ErrorCode::kMissingPatient, "no species prediction for patient '" + p.patient_id + "'");
    }
    ++m.counts[species_index(p.species)][species_index(it->second)];
  }
  return m;
}

}  // namespace parasitometrics
