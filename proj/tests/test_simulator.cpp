#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <set>

#include "support.hpp"

using namespace parasitometrics;

namespace {

SimConfig small_config(std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.n_negative = 8;
  cfg.n_positive = 8;
  cfg.examined_volume = 0.05;
  cfg.background_distractor_rate = 100;
  return cfg;
}

// Moments of Normal(mu, sd) truncated below at 0.
std::pair<double, double> truncated_moments(double mu, double sd) {
  const boost::math::normal_distribution<double> n;
  const double a = -mu / sd;
  const double lambda = boost::math::pdf(n, a) / (1 - boost::math::cdf(n, a));
  const double mean = mu + sd * lambda;
  const double var = sd * sd * (1 + a * lambda - lambda * lambda);
  return {mean, var};
}

}  // namespace

TEST(Simulator, SameSeedIsByteIdentical) {
  const auto a = generate_cohort(small_config(9));
  const auto b = generate_cohort(small_config(9));
  EXPECT_EQ(export_objects_csv(a), export_objects_csv(b));
  EXPECT_EQ(export_patients_csv(a), export_patients_csv(b));
  EXPECT_NE(export_objects_csv(a), export_objects_csv(generate_cohort(small_config(10))));
}

TEST(Simulator, PatientStreamsIndependentOfCohortSize) {
  auto cfg = small_config(11);
  const auto a = generate_cohort(cfg);
  cfg.n_negative = 3;
  cfg.n_positive = 20;
  const auto b = generate_cohort(cfg);
  for (const auto& p : b.patients()) {
    const auto* q = a.find(p.patient_id);
    if (!q) continue;
    ASSERT_EQ(p.objects.size(), q->objects.size()) << p.patient_id;
    for (std::size_t i = 0; i < p.objects.size(); ++i) ASSERT_EQ(p.objects[i].score, q->objects[i].score);
  }
}

TEST(Simulator, NoPositivesMeansNoParasites) {
  auto cfg = small_config(12);
  cfg.n_positive = 0;
  for (const auto& p : generate_cohort(cfg).patients()) {
    for (const auto& o : p.objects) EXPECT_EQ(o.true_label, ObjectLabel::kDistractor);
  }
}

TEST(Simulator, CountsModeMatchesMaterializedCohort) {
  const auto cfg = small_config(13);
  const auto cohort = generate_cohort(cfg);
  const auto counts = simulate_counts(cfg);
  ASSERT_EQ(counts.size(), cohort.size());
  for (const auto& c : counts) {
    const auto* p = cohort.find(c.latent.patient_id);
    ASSERT_NE(p, nullptr);
    EXPECT_EQ(patient_counts(*p, cfg.reference_threshold).fp, c.fp);
    std::int64_t n_par = 0;
    for (const auto& o : p->objects) n_par += o.true_label == ObjectLabel::kParasite;
    EXPECT_EQ(n_par, c.latent.n_parasites);
  }
}

TEST(SimulatorProperty, GeneratedCohortsRevalidate) {
  Gen g(80);
  for (int trial = 0; trial < 20; ++trial) {
    auto cfg = small_config(g.rng());
    cfg.n_negative = static_cast<std::size_t>(g.integer(0, 5));
    cfg.n_positive = static_cast<std::size_t>(g.integer(1, 5));
    cfg.examined_volume = g.uniform(0.01, 0.2);
    if (g.coin()) cfg.fpr = skewed_fpr_preset(1).fpr;
    if (g.coin()) cfg.patient_sensitivity.type = SensitivitySpec::Type::kNormal;
    const auto c = generate_cohort(cfg);
    for (const auto& p : c.patients()) {
      validate_patient(p);
      for (const auto& o : p.objects) {
        ASSERT_GE(o.score, 0.0);
        ASSERT_LE(o.score, 1.0);
      }
    }
    const auto back = ingest_cohort_csv(export_objects_csv(c), export_patients_csv(c), c.cv_description());
    ASSERT_EQ(export_objects_csv(back), export_objects_csv(c));
  }
}

TEST(SimulatorMoments, TruncatedNormalFprCompound) {
  SimConfig cfg;
  cfg.seed = 81;
  cfg.n_negative = 10000;
  cfg.n_positive = 0;
  cfg.examined_volume = 1.0;
  cfg.background_distractor_rate = 0;
  const auto [m, var] = truncated_moments(50, 20);
  ASSERT_NEAR(m, 50.3528, 1e-4);
  const double sd = std::sqrt(var + m / cfg.examined_volume);  // Poisson noise adds E[rate]/V
  ASSERT_NEAR(sd, 20.7988, 1e-3);
  std::vector<double> realized;
  for (const auto& c : simulate_counts(cfg)) realized.push_back(static_cast<double>(c.fp) / c.examined_volume);
  const auto s = summarize(realized);
  EXPECT_NEAR(s.mean / m, 1.0, 0.03);
  EXPECT_NEAR(s.stddev / sd, 1.0, 0.03);
}

TEST(SimulatorMoments, RealizedSensitivityConverges) {
  SimConfig cfg;
  cfg.seed = 82;
  cfg.n_negative = 0;
  cfg.n_positive = 10000;
  cfg.examined_volume = 0.1;
  cfg.parasitemia.type = ParasitemiaSpec::Type::kFixed;
  cfg.parasitemia.value = 100;
  cfg.fpr.mean = 0;
  cfg.fpr.sd = 1;
  cfg.background_distractor_rate = 0;
  const auto S = sensitivity_distribution(generate_cohort(cfg), cfg.reference_threshold);
  const double expect = cfg.patient_sensitivity.a / (cfg.patient_sensitivity.a + cfg.patient_sensitivity.b);
  EXPECT_NEAR(S.summary.mean / expect, 1.0, 0.02);
}

TEST(BetaShape, HitsTargetTail) {
  for (double s : {0.05, 0.3, 0.5, 0.8, 0.99}) {
    const double a = calibrate_beta_shape(s, 2.0, 0.5);
    EXPECT_NEAR(boost::math::ibetac(a, 2.0, 0.5), s, 1e-9) << s;
  }
}

TEST(Who56, Structure) {
  std::vector<std::int64_t> shape;
  std::string first_scores;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto c = generate_cohort(who56_preset(seed));
    EXPECT_EQ(c.count(GroundTruth::kNegative), 20u);
    EXPECT_EQ(c.count(GroundTruth::kPositive), 20u);
    std::set<std::string> ids;
    for (const auto& p : c.patients()) {
      ids.insert(p.patient_id);
      if (p.positive()) {
        EXPECT_GE(p.true_parasitemia, 80.0);
        EXPECT_LE(p.true_parasitemia, 200.0);
      }
    }
    EXPECT_EQ(ids.size(), 40u);
    const auto objs = export_objects_csv(c);
    EXPECT_NE(objs, first_scores);
    first_scores = objs;
  }
}

TEST(SimConfigJson, RoundTripAndErrors) {
  auto cfg = skewed_fpr_preset(99);
  cfg.wbc_per_cv = 8000;
  cfg.parasitemia.type = ParasitemiaSpec::Type::kList;
  cfg.parasitemia.values = {100, 300};
  FprSpec mix;
  mix.type = FprSpec::Type::kMixture;
  mix.components = {{0.7, FprSpec{}}, {0.3, cfg.fpr}};
  cfg.fpr = mix;
  const auto j = sim_config_to_json(cfg);
  const auto back = sim_config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(sim_config_to_json(back).dump(), j.dump());
  EXPECT_EQ(export_objects_csv(generate_cohort(back)), export_objects_csv(generate_cohort(cfg)));

  EXPECT_EQ(error_of([] { sim_config_from_json(nlohmann::json::array()); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(error_of([] { sim_config_from_json({{"n_negative", -1}}); }), ErrorCode::kInvalidConfig);
  auto bad = small_config(1);
  bad.examined_volume = 0;
  EXPECT_EQ(error_of([&] { generate_cohort(bad); }), ErrorCode::kInvalidConfig);
  bad = small_config(1);
  bad.species_mix = {{Species::kFalciparum, 0.5}};
  EXPECT_EQ(error_of([&] { generate_cohort(bad); }), ErrorCode::kInvalidConfig);
}

TEST(WorkedExamples, ExpectedValuesHold) {
  const auto ex = worked_examples();
  ASSERT_EQ(ex.size(), 3u);
  const auto& pl = ex[0];
  const auto pooled = pooled_object_sensitivity(*pl.cohort, pl.parameters.at("C"));
  EXPECT_NEAR(pooled.value, pl.expected.at("pooled_object_sensitivity"), 1e-12);
  EXPECT_NEAR(pooled.value, 0.982, 1e-3);
  const auto r = patient_level_sens_spec(*pl.cohort, {0.5, 1.0}, default_parasitemia_bins());
  EXPECT_EQ(*r.sensitivity.overall, 0.25);
}
