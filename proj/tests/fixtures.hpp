#pragma once

#include <string>
#include <vector>

#include "parasitometrics/parasitometrics.hpp"

namespace fixtures {

namespace pm = parasitometrics;

// Negatives carry a score-independent FP floor (0,2,4,6 objects at 1.0) plus
// hard distractors spread below 0.6 in proportion 1:2:3:4; positives have one
// parasite at every 0.01 step above 0.6. sigma(F) falls until C = 0.6 and
// mu(S) falls after it, so on the 101-point grid LoD has a unique minimum there.
inline pm::CohortDataset tuner_negatives() {
  std::vector<pm::PatientRecord> ps;
  for (int i = 0; i < 4; ++i) {
    pm::PatientRecord p;
    p.patient_id = "n" + std::to_string(i);
    p.ground_truth = pm::GroundTruth::kNegative;
    p.examined_volume = 1.0;
    int serial = 0;
    for (int k = 0; k < 2 * i; ++k)
      p.objects.push_back({"o" + std::to_string(serial++), 1.0, pm::ObjectLabel::kDistractor});
    for (int level = 0; level < 60; ++level)
      for (int k = 0; k <= i; ++k)
        p.objects.push_back({"o" + std::to_string(serial++), 0.005 + 0.01 * level, pm::ObjectLabel::kDistractor});
    ps.push_back(std::move(p));
  }
  return pm::CohortDataset("1 uL", std::move(ps), "tuner fixture");
}

inline pm::CohortDataset tuner_positives() {
  std::vector<pm::PatientRecord> ps;
  for (int i = 0; i < 3; ++i) {
    pm::PatientRecord p;
    p.patient_id = "p" + std::to_string(i);
    p.ground_truth = pm::GroundTruth::kPositive;
    p.species = pm::Species::kFalciparum;
    p.true_parasitemia = 40.0;
    p.examined_volume = 1.0;
    for (int level = 0; level < 40; ++level)
      p.objects.push_back({"o" + std::to_string(level), 0.605 + 0.01 * level, pm::ObjectLabel::kParasite});
    ps.push_back(std::move(p));
  }
  return pm::CohortDataset("1 uL", std::move(ps), "tuner fixture");
}

inline std::vector<double> grid101() {
  std::vector<double> g;
  for (int i = 0; i <= 100; ++i) g.push_back(i / 100.0);
  return g;
}

struct OracleResult {
  double C = -1.0;
  double T = 0.0;
  double LoD = 0.0;
  int minimizers = 0;
};

// Exhaustive evaluation written independently of the tuner's loop.
inline OracleResult brute_force_tuning(const pm::CohortDataset& neg, const pm::CohortDataset& pos,
                                       const std::vector<double>& grid, const pm::CalibrationConfig& cfg) {
  OracleResult best;
  std::vector<double> lods;
  for (double C : grid) {
    double lod = -1.0, T = 0.0;
    try {
      const auto F = pm::fpr_distribution(neg, C, true);
      const auto S = pm::sensitivity_distribution(pos, C);
      T = pm::calibrate_threshold(F, cfg);
      lod = pm::estimate_lod(F, S, cfg).L;
    } catch (const pm::Error&) {
      continue;
    }
    lods.push_back(lod);
    if (best.C < 0 || lod < best.LoD || (lod == best.LoD && C > best.C)) best = {C, T, lod, 0};
  }
  for (double l : lods) best.minimizers += l == best.LoD;
  return best;
}

}  // namespace fixtures
