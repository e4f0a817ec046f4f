#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adaptive_median/accountant.hpp"
#include "adaptive_median/errors.hpp"
#include "adaptive_median/rng.hpp"

using namespace adaptive_median;

TEST_CASE("advanced composition matches the closed form") {
  const std::vector<PrivacyCharge> one{{0.3, 0.0}};
  const double dp = 1e-5;
  const ComposedBudget single = compose_advanced(one, dp);
  CHECK(single.epsilon_hat ==
        doctest::Approx(0.3 * 0.3 / 2 + 0.3 * std::sqrt(2 * std::log(1 / dp))).epsilon(1e-12));
  CHECK(single.delta_hat == doctest::Approx(dp).epsilon(1e-12));

  const std::vector<PrivacyCharge> hundred(100, {0.1, 0.0});
  const ComposedBudget c = compose_advanced(hundred, 1e-6);
  CHECK(c.epsilon_hat ==
        doctest::Approx(0.5 + std::sqrt(2.0 * std::log(1e6))).epsilon(1e-9));
  CHECK(c.epsilon_hat == doctest::Approx(5.7565).epsilon(1e-4));

  const ComposedBudget empty = compose_advanced({}, 0.25);
  CHECK(empty.epsilon_hat == 0.0);
  CHECK(empty.delta_hat == 0.25);

  CHECK_THROWS_AS(compose_advanced(one, 0.0), ParameterError);
  CHECK_THROWS_AS(compose_advanced(one, 1.0), ParameterError);
  const std::vector<PrivacyCharge> bad{{-0.1, 0.0}};
  CHECK_THROWS_AS(compose_advanced(bad, 0.5), ParameterError);
}

TEST_CASE("composition is permutation invariant and monotone") {
  Rng rng(42);
  for (int it = 0; it < 100; ++it) {
    std::vector<PrivacyCharge> charges;
    const std::size_t k = 1 + rng.uniform_index(20);
    for (std::size_t i = 0; i < k; ++i)
      charges.push_back({rng.uniform() * 0.5, rng.uniform() * 1e-6});
    const double slack = 1e-7 + rng.uniform() * 0.1;

    const ComposedBudget base = compose_advanced(charges, slack);

    std::vector<PrivacyCharge> shuffled = charges;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
    const ComposedBudget perm = compose_advanced(shuffled, slack);
    CHECK(perm.epsilon_hat == doctest::Approx(base.epsilon_hat).epsilon(1e-12));
    CHECK(perm.delta_hat == doctest::Approx(base.delta_hat).epsilon(1e-12));

    // Growing any single charge grows the composed budget.
    std::vector<PrivacyCharge> bumped = charges;
    const std::size_t j = rng.uniform_index(k);
    bumped[j].epsilon += 0.05;
    bumped[j].delta += 1e-7;
    const ComposedBudget more = compose_advanced(bumped, slack);
    CHECK(more.epsilon_hat >= base.epsilon_hat);
    CHECK(more.delta_hat >= base.delta_hat);

    // Shrinking the slack grows epsilon_hat.
    const ComposedBudget tight = compose_advanced(charges, slack / 2);
    CHECK(tight.epsilon_hat >= base.epsilon_hat);

    // First-term lower bound and delta floor.
    double sum_sq = 0.0;
    double sum_delta = 0.0;
    for (const PrivacyCharge& ch : charges) {
      sum_sq += ch.epsilon * ch.epsilon;
      sum_delta += ch.delta;
    }
    CHECK(base.epsilon_hat >= sum_sq / 2 - 1e-15);
    CHECK(base.delta_hat >= sum_delta);
  }
}

TEST_CASE("ledger refuses charges that would exceed the target") {
  PrivacyLedger ledger(1e-6, PrivacyCharge{1.0, 1e-5});
  std::size_t accepted = 0;
  while (ledger.try_charge({0.1, 0.0})) ++accepted;
  CHECK(accepted > 0);
  CHECK(ledger.charges().size() == accepted);
  CHECK(ledger.composed().epsilon_hat <= 1.0);

  // One more 0.1 charge would cross the target; smaller ones may still fit.
  CHECK_FALSE(ledger.try_charge({0.1, 0.0}));
  CHECK(ledger.charges().size() == accepted);

  std::vector<PrivacyCharge> manual(accepted + 1, {0.1, 0.0});
  CHECK(compose_advanced(manual, 1e-6).epsilon_hat > 1.0);
}

TEST_CASE("ledger without a target never refuses and zero charges are free") {
  PrivacyLedger ledger(1e-6);
  for (int i = 0; i < 1000; ++i) CHECK(ledger.try_charge({0.5, 1e-9}));

  PrivacyLedger zero(0.5, PrivacyCharge{0.1, 0.5});
  const ComposedBudget before = zero.composed();
  CHECK(zero.try_charge({0.0, 0.0}));
  const ComposedBudget after = zero.composed();
  CHECK(after.epsilon_hat == doctest::Approx(before.epsilon_hat).epsilon(1e-15));
  CHECK(after.delta_hat == doctest::Approx(before.delta_hat).epsilon(1e-15));
}

TEST_CASE("ledger serializes charges and composed budget") {
  PrivacyLedger ledger(1e-6);
  ledger.try_charge({0.25, 0.0});
  ledger.try_charge({0.5, 1e-8});
  const std::string json = ledger.to_json("paper");
  CHECK(json.find("\"profile\":\"paper\"") != std::string::npos);
  CHECK(json.find("\"epsilon_hat\"") != std::string::npos);
  CHECK(json.find("\"charges\"") != std::string::npos);
}

TEST_CASE("session calibration matches the closed form and self-checks") {
  const SessionCalibration cal = calibrate_session(16, 2, 0.05);
  const double expected_m =
      std::ceil(640.0 * std::sqrt(16.0 * std::log(256.0 / 0.05)) * std::log(16.0 * 2 / 0.05));
  CHECK(cal.m == static_cast<std::size_t>(expected_m));
  CHECK(cal.epsilon_tilde ==
        doctest::Approx(16.0 * std::log(640.0) / expected_m).epsilon(1e-12));
  CHECK(cal.composed.epsilon_hat <= 0.05);
  CHECK(cal.meets_dp_premise);
  CHECK(cal.delta_slack == doctest::Approx(0.05 / 256).epsilon(1e-12));

  CHECK_THROWS_AS(calibrate_session(0, 2, 0.05), ParameterError);
  CHECK_THROWS_AS(calibrate_session(4, 1, 0.05), ParameterError);
  CHECK_THROWS_AS(calibrate_session(4, 2, 1.0), ParameterError);
}

TEST_CASE("halving beta increases m") {
  const SessionCalibration loose = calibrate_session(16, 64, 0.1);
  const SessionCalibration tight = calibrate_session(16, 64, 0.05);
  CHECK(tight.m > loose.m);
}

TEST_CASE("calibration self-check holds across a parameter grid") {
  for (const std::size_t k : {1, 2, 8, 50, 400}) {
    for (const std::size_t r : {2, 41, 1024}) {
      for (const double beta : {0.01, 0.05, 0.2}) {
        const SessionCalibration cal = calibrate_session(k, r, beta);
        CHECK(cal.composed.epsilon_hat <= 0.05);
        CHECK(cal.meets_dp_premise);
        CHECK(static_cast<double>(cal.m) >=
              2560.0 * std::log(2.0 * static_cast<double>(k) / beta) - 1.0);
      }
    }
  }
}

TEST_CASE("per-query epsilon inversion is tight") {
  const double eps = max_per_query_epsilon(100, 1.0, 1e-6);
  const std::vector<PrivacyCharge> charges(100, {eps, 0.0});
  CHECK(compose_advanced(charges, 1e-6).epsilon_hat <= 1.0);
  const std::vector<PrivacyCharge> over(100, {eps * 1.001, 0.0});
  CHECK(compose_advanced(over, 1e-6).epsilon_hat > 1.0);
}

TEST_CASE("interior calibration reaches a consistent fixed point") {
  const InteriorCalibration cal = calibrate_interior_session(4, 8, 0.05);
  const double m = static_cast<double>(cal.m);
  CHECK(cal.delta == doctest::Approx(0.05 / (10.0 * 4 * m)).epsilon(1e-9));
  const double recomputed =
      std::ceil(8.0 * std::log(2.0 * 8 / 0.05) * std::sqrt(2.0 * 4 * std::log(1.0 / cal.delta)));
  CHECK(m == doctest::Approx(recomputed));
  CHECK(cal.epsilon_tilde == doctest::Approx(4.0 * std::log(2.0 * 4 * 8 / 0.05) / m));
}
