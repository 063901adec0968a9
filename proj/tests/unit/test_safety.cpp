#include <doctest.h>

#include <cmath>
#include <limits>

#include "rpf/env/types.hpp"
#include "rpf/error.hpp"
#include "rpf/io/csv.hpp"
#include "rpf/safety/uncertainty.hpp"
#include "support/fixtures.hpp"
#include "support/safety_fixtures.hpp"

using namespace rpf;
using namespace rpf::safety;

namespace {

std::vector<QVector> scaled(std::vector<QVector> q, double c) {
  for (QVector& m : q) {
    for (double& v : m) v *= c;
  }
  return q;
}

}  // namespace

TEST_CASE("c_v closed forms") {
  QVector a{};
  a.fill(3.0);
  const std::vector<QVector> same(4, a);
  for (double cv : coefficient_of_variation(same)) CHECK(cv == 0.0);

  QVector lo{}, hi{};
  lo.fill(1.0);
  hi.fill(1.0);
  lo[0] = 9.9;
  hi[0] = 10.1;
  lo[1] = -9.9;  // negative mean: |mean| in the denominator
  hi[1] = -10.1;
  lo[2] = 0.0;  // zero mean with spread
  hi[2] = 0.0;
  lo[3] = -1.0;
  hi[3] = 1.0;
  const std::vector<QVector> pair{lo, hi};
  const QVector cv = coefficient_of_variation(pair);
  CHECK(cv[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(cv[1] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(cv[2] == std::numeric_limits<double>::infinity());
  CHECK(cv[3] == std::numeric_limits<double>::infinity());
  CHECK(cv[4] == 0.0);

  const std::vector<QVector> single{lo};
  CHECK_THROWS_AS(coefficient_of_variation(single), ConfigError);
}

TEST_CASE("c_v is scale invariant") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto q = testing::random_member_q(rng, 2 + rng.uniform_index(9));
    const double c = std::exp(rng.uniform(-5.0, 5.0));
    const QVector base = coefficient_of_variation(q);
    const QVector s = coefficient_of_variation(scaled(q, c));
    for (std::size_t a = 0; a < kNumActions; ++a) CHECK(s[a] == doctest::Approx(base[a]).epsilon(1e-9));
  }
}

TEST_CASE("gate picks the best admissible action") {
  // Action 5 has the highest mean but a wide spread; action 2 is tight.
  std::vector<QVector> q(3);
  for (std::size_t k = 0; k < 3; ++k) {
    q[k].fill(0.0);  // zero means: infinite c_v everywhere else
    q[k][5] = 20.0 + 4.0 * static_cast<double>(k);
    q[k][2] = 10.0 + 0.01 * static_cast<double>(k);
  }
  const UncertaintyReport gated = select_safe_action(q, kDefaultSafeThreshold);
  CHECK(gated.action == 2);
  CHECK_FALSE(gated.fallback_used);
  CHECK(describe(q).action == 5);

  const UncertaintyReport open = select_safe_action(q, std::numeric_limits<double>::max());
  CHECK(open.action == 5);

  const UncertaintyReport blocked = select_safe_action(q, 1e-4);
  CHECK(blocked.fallback_used);
  CHECK(blocked.action == env::kHardBrakeAction);

  const UncertaintyReport impossible = select_safe_action(q, -1.0);
  CHECK(impossible.fallback_used);
}

TEST_CASE("all members agree: gate equals plain argmax with lowest-index ties") {
  QVector a{};
  a.fill(1.0);
  a[4] = 2.0;
  a[7] = 2.0;
  const std::vector<QVector> q(3, a);
  const UncertaintyReport r = select_safe_action(q, kDefaultSafeThreshold);
  CHECK(r.action == 4);
  CHECK_FALSE(r.fallback_used);
}

TEST_CASE("randomized gate contract against a brute-force oracle") {
  Rng rng(2024);
  int fallbacks = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = 2 + rng.uniform_index(9);
    const auto q = testing::random_member_q(rng, k);
    const double threshold = rng.uniform(0.005, 0.05);
    const UncertaintyReport r = select_safe_action(q, threshold);

    // Oracle: two-pass mean/variance computed independently.
    int best = -1;
    double best_mean = 0.0;
    for (std::size_t a = 0; a < kNumActions; ++a) {
      double mean = 0.0;
      for (const QVector& m : q) mean += m[a] / static_cast<double>(k);
      double var = 0.0;
      for (const QVector& m : q) var += (m[a] - mean) * (m[a] - mean) / static_cast<double>(k);
      const double cv = std::abs(mean) < 1e-6 ? INFINITY : std::sqrt(var) / std::abs(mean);
      REQUIRE(r.cv[a] >= 0.0);
      REQUIRE(r.cv[a] == doctest::Approx(cv).epsilon(1e-9));
      if (cv < threshold && (best < 0 || mean > best_mean)) {
        best = static_cast<int>(a);
        best_mean = mean;
      }
    }
    if (best < 0) {
      ++fallbacks;
      REQUIRE(r.fallback_used);
      REQUIRE(r.action == env::kHardBrakeAction);
    } else {
      REQUIRE_FALSE(r.fallback_used);
      REQUIRE(r.action == static_cast<std::size_t>(best));
      REQUIRE(r.cv[r.action] < threshold);
    }
    REQUIRE(select_safe_action(scaled(q, rng.uniform(0.01, 100.0)), threshold).action == r.action);

    // Lowering the threshold never lifts a fallback.
    if (r.fallback_used) REQUIRE(select_safe_action(q, threshold * 0.5).fallback_used);
  }
  CHECK(fallbacks > 100);
  CHECK(fallbacks < 9900);
}

TEST_CASE("c_v over an ensemble agent includes the prior term") {
  agent::EnsembleConfig config;
  config.members = 3;
  config.replay_capacity = 10;
  agent::EnsembleAgent ens(config, 5);
  Rng rng(6);
  const Observation obs = testing::random_observation(rng, 4);
  std::vector<QVector> q;
  for (std::size_t k = 0; k < 3; ++k) {
    QVector f = nn::forward(ens.member(k).trainable, obs);
    const QVector p = nn::forward(ens.member(k).prior, obs);
    for (std::size_t a = 0; a < kNumActions; ++a) f[a] += 50.0 * p[a];
    q.push_back(f);
  }
  const QVector from_agent = coefficient_of_variation(ens, obs);
  const QVector from_sums = coefficient_of_variation(q);
  for (std::size_t a = 0; a < kNumActions; ++a) {
    CHECK(from_agent[a] == doctest::Approx(from_sums[a]).epsilon(1e-12));
  }
  CHECK(select_safe_action(ens, obs, 1.0).action == select_safe_action(q, 1.0).action);
}

TEST_CASE("confidence measure") {
  CHECK(confidence_measure(0.01, 0.01, 0.02) == 1.0);
  CHECK(confidence_measure(0.02, 0.01, 0.02) == doctest::Approx(0.0));
  CHECK(confidence_measure(0.03, 0.0, 0.02) == doctest::Approx(-0.5));
  CHECK(confidence_measure(0.0, 0.01, 0.02) == doctest::Approx(2.0));
  CHECK_THROWS_AS(confidence_measure(0.01, 0.02, 0.02), ConfigError);
  CHECK_THROWS_AS(confidence_measure(0.01, 0.03, 0.02), ConfigError);
  CHECK_THROWS_AS(confidence_measure(0.01, -0.01, 0.02), ConfigError);
}

TEST_CASE("report CSV row") {
  std::vector<QVector> q(2);
  q[0].fill(1.0);
  q[1].fill(1.0);
  q[1][0] = 3.0;
  const UncertaintyReport r = select_safe_action(q, 0.02);
  io::CsvRow row;
  append_report(row, r);
  const auto fields = io::split_csv_line(row.str());
  const auto names = io::split_csv_line(report_csv_header());
  REQUIRE(fields.size() == 32);
  REQUIRE(names.size() == 32);
  CHECK(names[0] == "mean_q_0");
  CHECK(names[20] == "cv_0");
  CHECK(fields[0] == "2");
  CHECK(fields[10] == "1");
  CHECK(fields[20] == "0.5");
  CHECK(fields[30] == "1");
  CHECK(fields[31] == "0");
}
