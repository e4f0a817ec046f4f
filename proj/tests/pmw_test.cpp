#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adaptive_median/distribution.hpp"
#include "adaptive_median/errors.hpp"
#include "adaptive_median/pmw.hpp"
#include "adaptive_median/rng.hpp"

using namespace adaptive_median;

namespace {

std::vector<std::size_t> sample_atoms(const std::vector<double>& probs, std::size_t m, Rng& rng) {
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t z = 0; z < probs.size(); ++z) {
    acc += probs[z];
    cdf[z] = acc;
  }
  std::vector<std::size_t> atoms(m);
  for (std::size_t& a : atoms) {
    const double u = rng.uniform();
    a = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (a >= probs.size()) a = probs.size() - 1;
  }
  return atoms;
}

std::vector<double> random_probs(std::size_t size, Rng& rng) {
  std::vector<double> probs(size);
  double sum = 0.0;
  for (double& p : probs) {
    p = rng.uniform() + 0.05;
    sum += p;
  }
  for (double& p : probs) p /= sum;
  return probs;
}

}  // namespace

TEST_CASE("universe distribution stays normalized through reweighting") {
  UniverseDistribution x(16);
  Rng rng(4);
  for (int round = 0; round < 50; ++round) {
    x.reweight([&](std::size_t z) { return std::exp(0.3 * rng.uniform() * (z % 3)); });
    double sum = 0.0;
    for (double w : x.weights()) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
  CHECK_THROWS_AS(UniverseDistribution(0), DataError);
  CHECK_THROWS_AS(UniverseDistribution(2000000), ScaleError);
}

TEST_CASE("zero query answers zero within alpha") {
  PmwConfig config;
  config.alpha = 0.2;
  config.beta = 0.1;
  config.max_queries = 10;
  config.seed = 1;
  Rng rng(2);
  const std::vector<double> probs = random_probs(16, rng);
  PmwSession session(sample_atoms(probs, 4000, rng), 16, config);
  const double a = session.answer_sq([](std::size_t) { return 0.0; });
  CHECK(std::abs(a) <= 0.2);
}

TEST_CASE("batch of random statistical queries stays within alpha") {
  const double alpha = 0.25;
  const double beta = 0.1;
  const std::size_t k = 50;
  const std::size_t universe = 16;
  const std::size_t m = pmw_required_m(universe, alpha, beta, k);

  std::size_t perfect_trials = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(1000 + static_cast<std::uint64_t>(trial));
    const std::vector<double> probs = random_probs(universe, rng);

    PmwConfig config;
    config.alpha = alpha;
    config.beta = beta;
    config.max_queries = k;
    config.seed = 40 + static_cast<std::uint64_t>(trial);
    PmwSession session(sample_atoms(probs, m, rng), universe, config);

    bool all_good = true;
    for (std::size_t q = 0; q < k; ++q) {
      std::vector<double> psi(universe);
      for (double& y : psi) y = rng.uniform(-1.0, 1.0);
      double truth = 0.0;
      for (std::size_t z = 0; z < universe; ++z) truth += probs[z] * psi[z];
      const double ans = session.answer_sq([&](std::size_t z) { return psi[z]; });
      if (std::abs(ans - truth) > alpha) all_good = false;
    }
    perfect_trials += all_good;
    CHECK(session.update_count() <= session.update_cap());
  }
  CHECK(perfect_trials >= 18);  // 1 - beta of 20, with slack for the two-sided count
}

TEST_CASE("repeated identical query triggers at most one update") {
  PmwConfig config;
  config.alpha = 0.2;
  config.beta = 0.1;
  config.max_queries = 30;
  config.seed = 6;
  Rng rng(7);
  const std::vector<double> probs = random_probs(32, rng);
  PmwSession session(sample_atoms(probs, 20000, rng), 32, config);

  // A query far from the uniform prior forces one corrective update.
  const auto psi = [](std::size_t z) { return z < 4 ? 1.0 : -1.0; };
  session.answer_sq(psi);
  const std::size_t after_first = session.update_count();
  CHECK(after_first <= 1);
  for (int repeat = 0; repeat < 20; ++repeat) session.answer_sq(psi);
  CHECK(session.update_count() == after_first);
}

TEST_CASE("update budget exhaustion raises the session failure signal") {
  PmwConfig config;
  config.alpha = 0.05;
  config.beta = 0.1;
  config.max_queries = 10;
  config.seed = 8;
  config.update_cap_override = 1;
  Rng rng(9);
  const std::vector<double> probs{0.45, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.25};
  PmwSession session(sample_atoms(probs, 5000, rng), 8, config);

  // Two orthogonal extreme queries need two updates; the second must throw.
  session.answer_sq([](std::size_t z) { return z == 0 ? 1.0 : -1.0; });
  CHECK(session.update_count() == 1);
  CHECK_THROWS_AS(session.answer_sq([](std::size_t z) { return z == 7 ? 1.0 : -1.0; }),
                  UpdateBudgetError);
}

TEST_CASE("estimator path: point mass returns the atom") {
  PmwConfig config;
  config.alpha = 0.125;
  config.beta = 0.1;
  config.max_queries = 64;
  config.seed = 11;
  const std::vector<std::size_t> atoms(3000, 5);
  PmwSession session(atoms, 16, config);
  const FiniteRange grid = FiniteRange::grid(0.0, 15.0, 1.0);
  const double v =
      session.answer_estimator([](std::size_t z) { return static_cast<double>(z); }, grid);
  CHECK(v == 5.0);
  CHECK(session.last_estimator_sq_calls() <= 8);
}

TEST_CASE("estimator path lands in the true interquartile interval") {
  // Universe Z = X^t with |X| = 4, t = 3; phi is the projected block mean.
  const std::size_t t = 3;
  const std::size_t universe = 64;  // 4^3
  const FiniteRange grid = FiniteRange::grid(0.0, 3.0, 0.2);  // 16 grid points
  REQUIRE(grid.size() == 16);

  const auto phi = [&](std::size_t z) {
    const double sum = static_cast<double>(z % 4 + (z / 4) % 4 + (z / 16) % 4);
    return sum / static_cast<double>(t);
  };

  // Exact pushforward of the projected estimator over the uniform product law.
  std::vector<double> mass(grid.size(), 0.0);
  for (std::size_t z = 0; z < universe; ++z) mass[grid.project_index(phi(z))] += 1.0 / 64.0;
  std::vector<double> atoms;
  std::vector<double> probs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (mass[i] > 0) {
      atoms.push_back(grid.value(i));
      probs.push_back(mass[i]);
    }
  }
  const DiscreteDistribution truth(atoms, probs);

  const std::size_t queries = 10;
  const std::size_t sq_budget = queries * 8;  // 2*ceil(log2 16) per estimator query
  const std::size_t m = pmw_required_m(universe, 0.125, 0.1, sq_budget);

  std::size_t hits = 0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(500 + static_cast<std::uint64_t>(trial));
    std::vector<std::size_t> blocks(m);
    for (std::size_t& z : blocks)
      z = rng.uniform_index(4) + 4 * rng.uniform_index(4) + 16 * rng.uniform_index(4);

    PmwConfig config;
    config.alpha = 0.125;
    config.beta = 0.1;
    config.max_queries = sq_budget;
    config.seed = 80 + static_cast<std::uint64_t>(trial);
    PmwSession session(blocks, universe, config);

    bool trial_ok = true;
    for (std::size_t q = 0; q < queries; ++q) {
      const double v = session.answer_estimator(phi, grid);
      if (session.last_estimator_sq_calls() > 8) trial_ok = false;
      if (!in_quantile_interval(truth, v, 0.25, 0.75)) trial_ok = false;
    }
    hits += trial_ok;
  }
  CHECK(hits >= 9);
}

TEST_CASE("estimator path requires alpha <= 1/8") {
  PmwConfig config;
  config.alpha = 0.25;
  config.max_queries = 8;
  const std::vector<std::size_t> atoms(100, 0);
  PmwSession session(atoms, 4, config);
  CHECK_THROWS_AS(
      session.answer_estimator([](std::size_t z) { return static_cast<double>(z); },
                               FiniteRange::grid(0.0, 3.0, 1.0)),
      ParameterError);
}

TEST_CASE("pmw required m formula is monotone where it should be") {
  CHECK(pmw_required_m(64, 0.2, 0.05, 200) ==
        static_cast<std::size_t>(std::ceil(4.0 * std::sqrt(std::log(64.0)) * std::log(200.0) *
                                           std::pow(std::log(1.0 / 0.01), 1.5) / 0.008)));
  CHECK(pmw_required_m(64, 0.1, 0.05, 200) > pmw_required_m(64, 0.2, 0.05, 200));
  CHECK(pmw_required_m(1024, 0.2, 0.05, 200) > pmw_required_m(64, 0.2, 0.05, 200));
  CHECK_THROWS_AS(pmw_required_m(1, 0.2, 0.05, 200), ParameterError);
}
