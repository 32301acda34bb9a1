#include <gtest/gtest.h>

#include "support.hpp"

using namespace parasitometrics;

TEST(Fpr, HandArithmetic) {
  auto n = make_patient("n", false, 0.0, 0.1);
  add(n, 12, 0.9, ObjectLabel::kDistractor);
  const CohortDataset c("cv", {n});
  const auto F = fpr_distribution(c, 0.5, true);
  ASSERT_EQ(F.per_patient.size(), 1u);
  EXPECT_DOUBLE_EQ(F.per_patient.at("n"), 120.0);
  EXPECT_DOUBLE_EQ(F.summary.mean, 120.0);
}

TEST(Fpr, ThresholdOneWithScoresBelow) {
  auto n = make_patient("n", false);
  add(n, 5, 0.999, ObjectLabel::kDistractor);
  const auto F = fpr_distribution(CohortDataset("cv", {n}), 1.0, true);
  EXPECT_EQ(F.per_patient.at("n"), 0.0);
}

TEST(Fpr, NegativesOnlyOnPositiveCohort) {
  const CohortDataset c("cv", {make_patient("p", true, 10.0)});
  EXPECT_EQ(error_of([&] { fpr_distribution(c, 0.5, true); }), ErrorCode::kNoEligiblePatients);
  const auto F = fpr_distribution(c, 0.5, false);
  EXPECT_FALSE(F.warnings.empty());
}

TEST(Sensitivity, HandArithmeticAndExclusion) {
  auto p = make_patient("p", true, 100.0);
  add(p, 8, 0.9, ObjectLabel::kParasite);
  add(p, 2, 0.1, ObjectLabel::kParasite);
  auto empty = make_patient("q", true, 5.0);
  const CohortDataset c("cv", {p, empty, make_patient("n", false)});
  const auto S = sensitivity_distribution(c, 0.5);
  EXPECT_DOUBLE_EQ(S.per_patient.at("p"), 0.8);
  EXPECT_EQ(S.per_patient.count("q"), 0u);
  ASSERT_EQ(S.excluded.size(), 1u);
  EXPECT_EQ(S.excluded.front(), "q");
  EXPECT_EQ(sensitivity_distribution(c, 0.0).per_patient.at("p"), 1.0);
}

TEST(Sensitivity, NoEligiblePatients) {
  const CohortDataset c("cv", {make_patient("q", true, 5.0), make_patient("n", false)});
  EXPECT_EQ(error_of([&] { sensitivity_distribution(c, 0.5); }), ErrorCode::kNoEligiblePatients);
}

TEST(Pooled, WorkedExampleAgainstPatientLevel) {
  const auto c = pooled_vs_patient_fixture();
  const auto pooled = pooled_object_sensitivity(c, 0.5);
  EXPECT_NEAR(pooled.value, 50000.0 / 50900.0, 1e-12);
  EXPECT_TRUE(pooled.imbalance_warning.has_value());
  EXPECT_EQ(pooled.dominant_patient, "patient1");
  const auto pl = patient_level_sens_spec(c, {0.5, 1.0}, default_parasitemia_bins());
  EXPECT_EQ(pl.sensitivity.overall, 0.25);
  EXPECT_FALSE(pl.specificity.has_value());
}

TEST(Pooled, DegenerateAndBalanced) {
  auto a = make_patient("a", true, 10.0);
  add(a, 4, 0.9, ObjectLabel::kParasite);
  add(a, 6, 0.1, ObjectLabel::kParasite);
  EXPECT_DOUBLE_EQ(pooled_object_sensitivity(CohortDataset("cv", {a}), 0.5).value, 0.4);
  auto b = make_patient("b", true, 10.0);
  auto d = make_patient("d", true, 10.0);
  add(b, 10, 0.9, ObjectLabel::kParasite);
  add(d, 10, 0.1, ObjectLabel::kParasite);
  const auto r = pooled_object_sensitivity(CohortDataset("cv", {b, d}), 0.5);
  EXPECT_DOUBLE_EQ(r.value, 0.5);
  EXPECT_FALSE(r.imbalance_warning.has_value());  // exactly 50% is not > 50%
  EXPECT_EQ(error_of([] { pooled_object_sensitivity(CohortDataset("cv", {make_patient("n", false)}), 0.5); }),
            ErrorCode::kNoParasiteObjects);
}

TEST(Diagnosis, InclusiveRuleAndDegenerateThresholds) {
  auto p = make_patient("p", true, 10.0, 0.2);
  add(p, 1, 0.9, ObjectLabel::kParasite);  // N = 5 per cV
  const CohortDataset c("cv", {p, make_patient("e", false)});
  EXPECT_EQ(patient_diagnoses(c, {0.5, 5.0}).at("p"), GroundTruth::kPositive);
  EXPECT_EQ(patient_diagnoses(c, {0.5, std::nextafter(5.0, 6.0)}).at("p"), GroundTruth::kNegative);
  EXPECT_EQ(patient_diagnoses(c, {0.5, 0.0}).at("e"), GroundTruth::kPositive);
  EXPECT_EQ(patient_diagnoses(c, {0.5, 0.1}).at("e"), GroundTruth::kNegative);
  EXPECT_EQ(error_of([&] { patient_diagnoses(c, {0.5, -1.0}); }), ErrorCode::kOutOfRange);
}

TEST(PatientLevel, BinnedStrata) {
  // Bins (0,200], (200,inf): one positive in the first (detected), three in
  // the second with one detected.
  std::vector<PatientRecord> ps;
  auto hit = [](std::string id, double P) {
    auto p = make_patient(id, true, P);
    add(p, 3, 0.9, ObjectLabel::kParasite);
    return p;
  };
  ps.push_back(hit("a", 150));
  ps.push_back(hit("b", 300));
  ps.push_back(make_patient("c", true, 400, 1.0, Species::kVivax));
  ps.push_back(make_patient("d", true, 500, 1.0, Species::kVivax));
  ps.push_back(make_patient("n", false));
  const std::vector<ParasitemiaBin> bins{{0, 200}, {200, INFINITY}};
  const auto r = patient_level_sens_spec(CohortDataset("cv", ps), {0.5, 1.0}, bins);
  ASSERT_EQ(r.sensitivity.by_parasitemia.size(), 2u);
  EXPECT_EQ(r.sensitivity.by_parasitemia[0].value, 1.0);
  EXPECT_NEAR(*r.sensitivity.by_parasitemia[1].value, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(r.sensitivity.by_parasitemia[1].label, "(200,inf]");
  EXPECT_EQ(r.specificity, 1.0);
  EXPECT_EQ(r.sensitivity.bins.size(), 2u);
  for (const auto& s : r.sensitivity.by_species) {
    if (s.label == "pv") {
      EXPECT_EQ(s.value, 0.0);
    }
    if (s.label == "pf") {
      EXPECT_EQ(s.value, 1.0);
    }
    EXPECT_NE(s.label, "none");
  }
}

TEST(PatientLevel, BinValidation) {
  const CohortDataset c("cv", {make_patient("n", false)});
  auto bad = [&](std::vector<ParasitemiaBin> b) {
    return error_of([&] { patient_level_sens_spec(c, {0.5, 1.0}, b); });
  };
  EXPECT_EQ(bad({}), ErrorCode::kInvalidInput);
  EXPECT_EQ(bad({{0, 100}}), ErrorCode::kInvalidInput);                    // does not reach infinity
  EXPECT_EQ(bad({{0, 100}, {50, INFINITY}}), ErrorCode::kInvalidInput);    // overlap
  EXPECT_EQ(bad({{10, INFINITY}}), ErrorCode::kInvalidInput);              // gap at 0
}

TEST(MetricsProperty, MonotoneInC) {
  Gen g(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = g.cohort(g.integer(1, 5), g.integer(1, 5));
    double c1 = g.uniform(0, 1), c2 = g.uniform(0, 1);
    if (c1 > c2) std::swap(c1, c2);
    const auto F1 = fpr_distribution(c, c1, true), F2 = fpr_distribution(c, c2, true);
    for (const auto& [id, v] : F1.per_patient) ASSERT_GE(v, F2.per_patient.at(id));
    const auto S1 = sensitivity_distribution(c, c1), S2 = sensitivity_distribution(c, c2);
    for (const auto& [id, v] : S1.per_patient) {
      ASSERT_GE(v, S2.per_patient.at(id));
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(MetricsProperty, SensitivityAndSpecificityMoveOppositelyInT) {
  Gen g(32);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = g.cohort(g.integer(1, 6), g.integer(1, 6));
    const double C = g.uniform(0, 1);
    double t1 = g.uniform(0, 60), t2 = g.uniform(0, 60);
    if (t1 > t2) std::swap(t1, t2);
    const auto a = patient_level_sens_spec(c, {C, t1}, default_parasitemia_bins());
    const auto b = patient_level_sens_spec(c, {C, t2}, default_parasitemia_bins());
    ASSERT_GE(*a.sensitivity.overall, *b.sensitivity.overall);
    ASSERT_LE(*a.specificity, *b.specificity);
  }
}

TEST(MetricsProperty, PooledIsParasiteWeightedMean) {
  Gen g(33);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = g.cohort(g.integer(0, 3), g.integer(1, 6));
    const double C = g.uniform(0, 1);
    const auto S = sensitivity_distribution(c, C);
    double num = 0, den = 0;
    for (const auto& [id, s] : S.per_patient) {
      const auto k = patient_counts(*c.find(id), C);
      num += s * static_cast<double>(k.tp + k.fn);
      den += static_cast<double>(k.tp + k.fn);
    }
    ASSERT_NEAR(pooled_object_sensitivity(c, C).value, num / den, 1e-12);
  }
}

TEST(MetricsProperty, SpecificityIgnoresPositives) {
  Gen g(34);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = g.cohort(g.integer(1, 5), g.integer(1, 5));
    auto ps = c.patients();
    for (auto& p : ps) {
      if (p.positive()) p = g.patient(p.patient_id, true);
    }
    const CohortDataset mutated("cv", ps);
    const OperatingPoint op{g.uniform(0, 1), g.uniform(0, 30)};
    ASSERT_EQ(patient_level_sens_spec(c, op, default_parasitemia_bins()).specificity,
              patient_level_sens_spec(mutated, op, default_parasitemia_bins()).specificity);
  }
}

TEST(MetricsProperty, EachPositiveInOneStratum) {
  Gen g(35);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = g.cohort(g.integer(0, 3), g.integer(1, 8));
    const auto r = patient_level_sens_spec(c, {0.5, 1.0}, default_parasitemia_bins());
    std::size_t bins = 0, species = 0;
    for (const auto& s : r.sensitivity.by_parasitemia) bins += s.n_patients;
    for (const auto& s : r.sensitivity.by_species) species += s.n_patients;
    ASSERT_EQ(bins, r.sensitivity.n_patients);
    ASSERT_EQ(species, r.sensitivity.n_patients);
  }
}

TEST(Confusion, PerfectAndAllFalciparum) {
  std::vector<PatientRecord> ps{make_patient("a", true, 10, 1, Species::kFalciparum),
                                make_patient("b", true, 10, 1, Species::kFalciparum),
                                make_patient("c", true, 10, 1, Species::kVivax), make_patient("n", false)};
  const CohortDataset c("cv", ps);
  std::map<std::string, Species> perfect{{"a", Species::kFalciparum}, {"b", Species::kFalciparum},
                                         {"c", Species::kVivax}, {"n", Species::kNone}};
  const auto m = species_confusion(c, perfect);
  for (Species t : kAllSpecies)
    for (Species p : kAllSpecies)
      if (t != p) {
        EXPECT_EQ(m.at(t, p), 0);
      }
  EXPECT_EQ(m.at(Species::kFalciparum, Species::kFalciparum), 2);

  auto all_pf = perfect;
  all_pf["c"] = Species::kFalciparum;
  const auto m2 = species_confusion(c, all_pf);
  EXPECT_EQ(m2.at(Species::kVivax, Species::kFalciparum), 1);
  EXPECT_EQ(m2.row_sum(Species::kVivax), 1);
  const auto col = m2.falciparum_collapse();
  EXPECT_EQ(col[0][0] + col[0][1] + col[1][0] + col[1][1], m2.total());
  EXPECT_EQ(col[1][0], 1);
}

TEST(Confusion, UnknownAndMissing) {
  const CohortDataset c("cv", {make_patient("n", false)});
  EXPECT_EQ(error_of([&] { species_confusion(c, {{"n", Species::kNone}, {"zz", Species::kVivax}}); }),
            ErrorCode::kUnknownPatient);
  EXPECT_EQ(error_of([&] { species_confusion(c, {}); }), ErrorCode::kMissingPatient);
}

TEST(ConfusionProperty, RowSumsMatchTruth) {
  Gen g(36);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = g.cohort(g.integer(0, 4), g.integer(1, 8));
    std::map<std::string, Species> pred;
    for (const auto& p : c.patients()) pred[p.patient_id] = kAllSpecies[g.integer(0, 6)];
    const auto m = species_confusion(c, pred);
    for (Species s : kAllSpecies) {
      const auto n = std::count_if(c.patients().begin(), c.patients().end(), [&](auto& p) { return p.species == s; });
      ASSERT_EQ(m.row_sum(s), n);
    }
  }
}
