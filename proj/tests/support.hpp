#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <unistd.h>

#include "parasitometrics/parasitometrics.hpp"

namespace pm = parasitometrics;

// Small property-test driver: every generator draws from one seeded engine
// so a failing case is reproducible from the printed seed.
struct Gen {
  explicit Gen(std::uint64_t seed) : seed(seed), rng(seed) {}
  std::uint64_t seed;
  std::mt19937_64 rng;

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

  std::vector<double> reals(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  // Scores on a coarse lattice so ties are common.
  double score() { return coin(0.3) ? integer(0, 20) / 20.0 : uniform(0.0, 1.0); }

  pm::PatientRecord patient(const std::string& id, bool positive) {
    pm::PatientRecord p;
    p.patient_id = id;
    p.ground_truth = positive ? pm::GroundTruth::kPositive : pm::GroundTruth::kNegative;
    p.examined_volume = coin() ? 1.0 : uniform(0.05, 2.0);
    if (positive) {
      p.species = pm::kAllSpecies[integer(0, 5)];
      p.true_parasitemia = std::exp(uniform(std::log(5.0), std::log(5e4)));
    }
    const int n_par = positive ? integer(1, 30) : 0;
    const int n_dis = integer(0, 40);
    int serial = 0;
    for (int i = 0; i < n_par; ++i) p.objects.push_back({"o" + std::to_string(serial++), score(), pm::ObjectLabel::kParasite});
    for (int i = 0; i < n_dis; ++i) p.objects.push_back({"o" + std::to_string(serial++), score(), pm::ObjectLabel::kDistractor});
    return p;
  }

  pm::CohortDataset cohort(int n_neg, int n_pos) {
    std::vector<pm::PatientRecord> ps;
    for (int i = 0; i < n_neg; ++i) ps.push_back(patient("n" + std::to_string(i), false));
    for (int i = 0; i < n_pos; ++i) ps.push_back(patient("p" + std::to_string(i), true));
    return pm::CohortDataset("1 uL blood", std::move(ps), "generated seed=" + std::to_string(seed));
  }
};

inline pm::PatientRecord make_patient(const std::string& id, bool positive, double parasitemia = 0.0,
                                      double volume = 1.0, pm::Species species = pm::Species::kFalciparum) {
  pm::PatientRecord p;
  p.patient_id = id;
  p.ground_truth = positive ? pm::GroundTruth::kPositive : pm::GroundTruth::kNegative;
  p.species = positive ? species : pm::Species::kNone;
  p.true_parasitemia = positive ? parasitemia : 0.0;
  p.examined_volume = volume;
  return p;
}

inline void add(pm::PatientRecord& p, int n, double score, pm::ObjectLabel label) {
  for (int i = 0; i < n; ++i) p.objects.push_back({"o" + std::to_string(p.objects.size()), score, label});
}

inline pm::MetricDistribution dist(const std::vector<double>& v, pm::MetricKind kind = pm::MetricKind::kFpr) {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < v.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "x%05zu", i);
    m[id] = v[i];
  }
  return pm::make_distribution(kind, m);
}

struct TempDir {
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("pm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path path;
};

template <class F>
pm::ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const pm::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return pm::ErrorCode::kInvalidInput;
}
