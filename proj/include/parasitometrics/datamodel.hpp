#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "parasitometrics/error.hpp"

namespace parasitometrics {

enum class ObjectLabel { kParasite, kDistractor };
enum class GroundTruth { kPositive, kNegative };
enum class Species { kFalciparum, kVivax, kOvale, kMalariae, kKnowlesi, kMixed, kNone };

inline constexpr std::size_t kSpeciesCount = 7;
inline constexpr Species kAllSpecies[kSpeciesCount] = {
    Species::kFalciparum, Species::kVivax,   Species::kOvale, Species::kMalariae,
    Species::kKnowlesi,   Species::kMixed,   Species::kNone};

// Nominal white blood cells per microlitre corresponding to a 100 p/uL
// parasitemia when one parasite is seen per 80 WBCs (8000 WBC/uL).
inline constexpr int kWbcPerParasiteAtReferenceLod = 80;

constexpr std::size_t species_index(Species s) { return static_cast<std::size_t>(s); }

constexpr std::string_view species_code(Species s) {
  switch (s) {
    case Species::kFalciparum: return "pf";
    case Species::kVivax: return "pv";
    case Species::kOvale: return "po";
    case Species::kMalariae: return "pm";
    case Species::kKnowlesi: return "pk";
    case Species::kMixed: return "mixed";
    case Species::kNone: return "none";
  }
  return "none";
}

inline Species parse_species(std::string_view code) {
  for (Species s : kAllSpecies) {
    if (species_code(s) == code) return s;
  }
  fail(ErrorCode::kSchemaError, "unknown species code '" + std::string(code) + "'");
}

constexpr std::string_view ground_truth_code(GroundTruth g) {
  return g == GroundTruth::kPositive ? "pos" : "neg";
}

inline GroundTruth parse_ground_truth(std::string_view code) {
  if (code == "pos") return GroundTruth::kPositive;
  if (code == "neg") return GroundTruth::kNegative;
  fail(ErrorCode::kSchemaError, "ground_truth must be pos or neg, got '" + std::string(code) + "'");
}

constexpr std::string_view label_code(ObjectLabel l) {
  return l == ObjectLabel::kParasite ? "parasite" : "distractor";
}

inline ObjectLabel parse_label(std::string_view code) {
  if (code == "parasite") return ObjectLabel::kParasite;
  if (code == "distractor") return ObjectLabel::kDistractor;
  fail(ErrorCode::kSchemaError,
       "true_label must be parasite or distractor, got '" + std::string(code) + "'");
}

struct ObjectRecord {
  std::string object_id;
  double score = 0.0;
  ObjectLabel true_label = ObjectLabel::kDistractor;
};

struct PatientRecord {
  std::string patient_id;
  GroundTruth ground_truth = GroundTruth::kNegative;
  Species species = Species::kNone;
  double true_parasitemia = 0.0;  // parasites per cV
  double examined_volume = 1.0;   // in multiples of cV
  std::optional<int> wbc_count;
  std::vector<ObjectRecord> objects;

  bool positive() const { return ground_truth == GroundTruth::kPositive; }

  std::size_t parasite_object_count() const {
    return static_cast<std::size_t>(
        std::count_if(objects.begin(), objects.end(),
                      [](const ObjectRecord& o) { return o.true_label == ObjectLabel::kParasite; }));
  }
};

// Throws on the first violated PatientRecord / ObjectRecord invariant.
inline void validate_patient(const PatientRecord& p) {
  const std::string where = "patient '" + p.patient_id + "': ";
  if (p.patient_id.empty()) fail(ErrorCode::kSchemaError, "empty patient_id");
  if (!std::isfinite(p.examined_volume) || p.examined_volume <= 0.0) {
    fail(ErrorCode::kSchemaError, where + "examined_volume must be > 0");
  }
  if (!std::isfinite(p.true_parasitemia) || p.true_parasitemia < 0.0) {
    fail(ErrorCode::kSchemaError, where + "true_parasitemia must be finite and >= 0");
  }
  if (p.wbc_count && *p.wbc_count < 0) {
    fail(ErrorCode::kSchemaError, where + "wbc_count must be >= 0");
  }
  if (p.ground_truth == GroundTruth::kNegative) {
    if (p.species != Species::kNone || p.true_parasitemia != 0.0) {
      fail(ErrorCode::kSchemaError,
           where + "negative patients require species none and true_parasitemia 0");
    }
  } else if (p.species == Species::kNone || p.true_parasitemia <= 0.0) {
    fail(ErrorCode::kSchemaError,
         where + "positive patients require a species and true_parasitemia > 0");
  }
  for (const auto& o : p.objects) {
    if (!std::isfinite(o.score) || o.score < 0.0 || o.score > 1.0) {
      fail(ErrorCode::kSchemaError, where + "object '" + o.object_id + "' score outside [0,1]");
    }
    if (o.true_label == ObjectLabel::kParasite && !p.positive()) {
      fail(ErrorCode::kLabelContradiction,
           where + "negative patient owns parasite-labelled object '" + o.object_id + "'");
    }
  }
}

/// Validated, immutable collection of patients. Patients are kept sorted by
/// patient_id so every aggregate iterates in a deterministic order.
class CohortDataset {
 public:
  CohortDataset(std::string cv_description, std::vector<PatientRecord> patients,
                std::string provenance = {})
      : cv_description_(std::move(cv_description)),
        patients_(std::move(patients)),
        provenance_(std::move(provenance)) {
    if (patients_.empty()) fail(ErrorCode::kEmptyInput, "cohort contains no patients");
    std::unordered_set<std::string> seen;
    for (const auto& p : patients_) {
      validate_patient(p);
      if (!seen.insert(p.patient_id).second) {
        fail(ErrorCode::kDuplicatePatient, "duplicate patient_id '" + p.patient_id + "'");
      }
    }
    std::sort(patients_.begin(), patients_.end(),
              [](const PatientRecord& a, const PatientRecord& b) {
                return a.patient_id < b.patient_id;
              });
  }

  const std::string& cv_description() const { return cv_description_; }
  const std::string& provenance() const { return provenance_; }
  const std::vector<PatientRecord>& patients() const { return patients_; }
  std::size_t size() const { return patients_.size(); }

  const PatientRecord* find(std::string_view id) const {
    auto it = std::lower_bound(patients_.begin(), patients_.end(), id,
                               [](const PatientRecord& p, std::string_view key) {
                                 return p.patient_id < key;
                               });
    if (it == patients_.end() || it->patient_id != id) return nullptr;
    return &*it;
  }

  std::size_t count(GroundTruth g) const {
    return static_cast<std::size_t>(std::count_if(
        patients_.begin(), patients_.end(),
        [g](const PatientRecord& p) { return p.ground_truth == g; }));
  }

 private:
  std::string cv_description_;
  std::vector<PatientRecord> patients_;
  std::string provenance_;
};

// Counts at object-score threshold C; TP, FP and N are per cV.
struct PatientCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  double TP = 0.0;
  double FP = 0.0;
  double N = 0.0;
};

inline bool passes(double score, double threshold) { return score >= threshold; }

inline PatientCounts patient_counts(const PatientRecord& patient, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorCode::kOutOfRange, "object-score threshold C must lie in [0,1]");
  }
  PatientCounts c;
  for (const auto& o : patient.objects) {
    const bool on = passes(o.score, threshold);
    if (o.true_label == ObjectLabel::kParasite) {
      (on ? c.tp : c.fn) += 1;
    } else {
      (on ? c.fp : c.tn) += 1;
    }
  }
  c.TP = static_cast<double>(c.tp) / patient.examined_volume;
  c.FP = static_cast<double>(c.fp) / patient.examined_volume;
  c.N = c.TP + c.FP;
  return c;
}

}  // namespace parasitometrics
