#include <gtest/gtest.h>

#include "parasitometrics/checks.hpp"
#include "support.hpp"

using namespace parasitometrics;

TEST(Estimate, WorkedExamples) {
  EXPECT_NEAR(estimate_parasitemia(60, 0.05, {100, 0.8}).P_hat, 1375.0, 1e-9);
  const auto noise = estimate_parasitemia(5, 0.05, {100, 0.8});
  EXPECT_EQ(noise.P_hat, 0.0);
  EXPECT_FALSE(noise.negative_estimate);
  EXPECT_DOUBLE_EQ(estimate_parasitemia(37, 0.5, {0, 1}).P_hat, 74.0);
}

TEST(Estimate, ClampsNegativeWithFlag) {
  const auto e = estimate_parasitemia(1, 1.0, {10, 0.5});
  EXPECT_EQ(e.P_hat, 0.0);
  EXPECT_TRUE(e.negative_estimate);
  EXPECT_DOUBLE_EQ(e.raw, -18.0);
}

TEST(Estimate, Errors) {
  EXPECT_EQ(error_of([] { estimate_parasitemia(1, 1, {-1, 0.5}); }), ErrorCode::kInvalidRates);
  EXPECT_EQ(error_of([] { estimate_parasitemia(1, 1, {1, 0}); }), ErrorCode::kInvalidRates);
  EXPECT_EQ(error_of([] { estimate_parasitemia(1, 1, {1, 1.5}); }), ErrorCode::kInvalidRates);
  EXPECT_EQ(error_of([] { estimate_parasitemia(1, 0, {1, 0.5}); }), ErrorCode::kInvalidInput);
}

TEST(EstimateProperty, InvertsForwardModel) {
  Gen g(60);
  for (int trial = 0; trial < 1000; ++trial) {
    const double P = std::exp(g.uniform(0, 12)), S = g.uniform(0.05, 1), F = g.uniform(0, 500),
                 V = g.uniform(0.01, 5);
    const double n = (P * S + F) * V;
    ASSERT_NEAR(estimate_parasitemia(n, V, {F, S}).P_hat / P, 1.0, 1e-9);
  }
}

TEST(Fom, WorkedExamplesAndLimit) {
  EXPECT_NEAR(quant_fom(0.8, 0.1, 20, 1000), 0.15, 1e-12);
  EXPECT_EQ(quant_fom(0.8, 0, 0, 10), 0.0);
  EXPECT_NEAR(quant_fom(0.8, 0.1, 20, 1e9), 0.125, 1e-7);
  EXPECT_EQ(error_of([] { quant_fom(0, 0.1, 1, 1); }), ErrorCode::kZeroSensitivity);
  EXPECT_EQ(error_of([] { quant_fom(0.5, 0.1, 1, 0); }), ErrorCode::kNonpositiveParasitemia);
  const auto S = dist({0.7, 0.9}, MetricKind::kObjectSensitivity);
  const auto F = dist({80, 120});
  EXPECT_NEAR(quant_fom(S, F, 1000), 0.15, 1e-12);
}

TEST(FomProperty, TermsCrossAtRatioOfSpreads) {
  Gen g(61);
  for (int trial = 0; trial < 200; ++trial) {
    const double muS = g.uniform(0.1, 1), sS = g.uniform(0.01, 0.3), sF = g.uniform(1, 100);
    const double Px = sF / sS;
    ASSERT_NEAR(sS / muS, sF / (muS * Px), 1e-12);
    ASSERT_GT(quant_fom(muS, sS, sF, Px / 2), quant_fom(muS, sS, sF, Px * 2));
  }
}

TEST(FomMonteCarlo, TracksPredictionAcrossParasitemias) {
  for (const auto& r : checks::quant_monte_carlo(7, {200.0, 2000.0, 20000.0})) {
    EXPECT_NEAR(r.empirical / r.predicted, 1.0, 0.25) << "P=" << r.P;
  }
}

TEST(VolumeError, Decomposition) {
  const auto same = volume_error_decomposition(80, 80, 123.0);
  EXPECT_EQ(same.volume_error_factor, 1.0);
  EXPECT_EQ(same.P_hat_oracle_volume, 123.0);
  EXPECT_DOUBLE_EQ(volume_error_decomposition(80, 160, 50.0).P_hat_oracle_volume, 100.0);
  EXPECT_EQ(error_of([] { volume_error_decomposition(0, 1, 1.0); }), ErrorCode::kZeroWbc);
  auto p = make_patient("p", true, 10.0);
  EXPECT_FALSE(volume_error_decomposition(p, 80, 1.0).has_value());
  p.wbc_count = 40;
  EXPECT_DOUBLE_EQ(volume_error_decomposition(p, 80, 10.0)->P_hat_oracle_volume, 5.0);
}

TEST(RSquared, Oracles) {
  const std::vector<double> P{100, 200, 50000}, Ph{130, 260, 50000};
  EXPECT_NEAR(r_squared(P, Ph), 0.9999997262437536, 1e-12);
  std::vector<double> lp, lh;
  for (std::size_t i = 0; i < P.size(); ++i) lp.push_back(std::log10(P[i])), lh.push_back(std::log10(Ph[i]));
  EXPECT_NEAR(r_squared(lp, lh), 0.999977571088936, 1e-12);
  EXPECT_EQ(error_of([] { r_squared(std::vector<double>{1}, std::vector<double>{1}); }), ErrorCode::kInvalidInput);
}

namespace {

// S_hat = 1, F_hat = 0, V = 1: P_hat is the count of detections at C.
PatientRecord counted(const std::string& id, double P, int detections) {
  auto p = make_patient(id, true, P);
  add(p, detections, 0.9, ObjectLabel::kParasite);
  return p;
}

}  // namespace

TEST(QuantReport, PerfectDetector) {
  const CohortDataset c("cv", {counted("a", 10, 10), counted("b", 1000, 1000), make_patient("n", false)});
  const auto r = quant_report(c, {0.5, 1}, {0, 1});
  EXPECT_EQ(r.per_patient.size(), 2u);
  for (const auto& [id, q] : r.per_patient) EXPECT_EQ(q.rel_error, 0.0);
  for (const auto& b : r.bland_altman) EXPECT_EQ(b.diff_log, 0.0);
  EXPECT_DOUBLE_EQ(r.r2_linear, 1.0);
  EXPECT_DOUBLE_EQ(r.r2_log, 1.0);
  EXPECT_NE(r.note.find("illusion of strong fit"), std::string::npos);
}

TEST(QuantReport, LinearFitHidesSmallPatientError) {
  const CohortDataset c("cv", {counted("a", 100, 130), counted("b", 200, 260), counted("c", 50000, 50000)});
  const auto r = quant_report(c, {0.5, 1}, {0, 1});
  EXPECT_GT(r.r2_linear, 0.99);
  EXPECT_NEAR(r.r2_linear, 0.9999997262437536, 1e-12);
  EXPECT_NEAR(r.r2_log, 0.999977571088936, 1e-12);
  // The unexplained variance on the log scale is ~80x the linear one.
  EXPECT_GT((1 - r.r2_log) / (1 - r.r2_linear), 10.0);
  EXPECT_NEAR(r.per_patient.at("a").rel_error, 0.3, 1e-12);
  const auto& ba = r.bland_altman.front();
  EXPECT_NEAR(ba.diff_log, std::log10(1.3), 1e-12);
  EXPECT_NEAR(ba.mean_log, (std::log10(130.0) + 2.0) / 2.0, 1e-12);
}

TEST(QuantReport, FloorsZeroEstimatesBeforeLog) {
  const CohortDataset c("cv", {counted("a", 100, 0), counted("b", 200, 200)});
  const auto r = quant_report(c, {0.5, 1}, {0, 1});
  EXPECT_NEAR(r.bland_altman.front().diff_log, std::log10(kLogFloor) - 2.0, 1e-12);
  EXPECT_EQ(r.per_patient.at("a").rel_error, -1.0);
}

TEST(QuantReport, NeedsTwoPositives) {
  const CohortDataset c("cv", {counted("a", 100, 100), make_patient("n", false)});
  EXPECT_EQ(error_of([&] { quant_report(c, {0.5, 1}, {0, 1}); }), ErrorCode::kInsufficientPositives);
}
