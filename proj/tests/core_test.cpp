#include <doctest.h>

#include <cmath>
#include <vector>

#include "adaptive_median/dataset.hpp"
#include "adaptive_median/distribution.hpp"
#include "adaptive_median/errors.hpp"
#include "adaptive_median/finite_range.hpp"
#include "adaptive_median/query.hpp"
#include "adaptive_median/rng.hpp"

using namespace adaptive_median;

namespace {

// Independent oracle: test every atom against the defining inequalities with
// a directly-summed CDF.
std::vector<double> brute_force_interval(const std::vector<double>& atoms,
                                         const std::vector<double>& probs, double a, double b) {
  std::vector<double> members;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double leq = 0.0;
    double lt = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (atoms[j] <= atoms[i]) leq += probs[j];
      if (atoms[j] < atoms[i]) lt += probs[j];
    }
    if (leq > a && lt < b) members.push_back(atoms[i]);
  }
  return members;
}

DiscreteDistribution random_discrete(Rng& rng, std::size_t max_atoms) {
  const std::size_t count = 1 + rng.uniform_index(max_atoms);
  std::vector<double> atoms;
  double x = rng.uniform(-10.0, 10.0);
  for (std::size_t i = 0; i < count; ++i) {
    atoms.push_back(x);
    x += 0.05 + rng.uniform() * 3.0;
  }
  std::vector<double> probs(count);
  double sum = 0.0;
  for (double& p : probs) {
    p = rng.uniform() + 1e-3;
    sum += p;
  }
  for (double& p : probs) p /= sum;
  return DiscreteDistribution(std::move(atoms), std::move(probs));
}

}  // namespace

TEST_CASE("finite range validates input") {
  CHECK_THROWS_AS(FiniteRange(std::vector<double>{}), DataError);
  CHECK_THROWS_AS(FiniteRange({1.0, 1.0}), DataError);
  CHECK_THROWS_AS(FiniteRange({2.0, 1.0}), DataError);
  CHECK_THROWS_AS(FiniteRange({0.0, std::nan("")}), DataError);

  const FiniteRange grid = FiniteRange::grid(0.0, 1.0, 0.01);
  CHECK(grid.size() == 101);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == doctest::Approx(1.0));
}

TEST_CASE("projection picks nearest, ties to the smaller value") {
  const FiniteRange grid = FiniteRange::grid(0.0, 1.0, 0.1);
  CHECK(project_to_range(0.26, grid) == doctest::Approx(0.3));
  CHECK(project_to_range(0.25, grid) == doctest::Approx(0.2));

  const FiniteRange wide = FiniteRange::grid(-5.0, 5.0, 0.01);
  CHECK(project_to_range(7.0, wide) == doctest::Approx(5.0));
  CHECK(project_to_range(-123.0, wide) == doctest::Approx(-5.0));

  CHECK_THROWS_AS(project_to_range(std::nan(""), grid), DataError);

  // Exact binary ties break downward.
  const FiniteRange halves = FiniteRange::grid(0.0, 1.0, 0.5);
  CHECK(project_to_range(0.25, halves) == 0.0);
  CHECK(project_to_range(0.75, halves) == 0.5);
}

TEST_CASE("block partition floors and records the discard") {
  std::vector<Sample> ten(10, 1);
  const BlockedDataset d1 = block_partition(ten, 3);
  CHECK(d1.block_count() == 3);
  CHECK(d1.discarded() == 1);

  std::vector<Sample> twelve(12, 1);
  const BlockedDataset d2 = block_partition(twelve, 3);
  CHECK(d2.block_count() == 4);
  CHECK(d2.discarded() == 0);

  std::vector<Sample> two(2, 1);
  CHECK_THROWS_AS(block_partition(two, 3), InsufficientDataError);
}

TEST_CASE("blocks are contiguous and in input order") {
  std::vector<Sample> samples{0, 1, 2, 3, 4, 5, 6};
  const BlockedDataset data(samples, 2);
  CHECK(data.block(0)[0] == 0);
  CHECK(data.block(0)[1] == 1);
  CHECK(data.block(2)[1] == 5);
  CHECK(data.discarded() == 1);
}

TEST_CASE("quantile interval on the spec instances") {
  std::vector<double> uniform8;
  for (int i = 1; i <= 8; ++i) uniform8.push_back(i);
  const EmpiricalDistribution dist(uniform8);

  const QuantileInterval iqr = quantile_interval(dist, 0.25, 0.75);
  CHECK(iqr.members == std::vector<double>{3, 4, 5, 6});

  const QuantileInterval all = quantile_interval(dist, 0.0, 1.0);
  CHECK(all.members.size() == 8);

  const EmpiricalDistribution point(std::vector<double>{5, 5, 5});
  CHECK(quantile_interval(point, 0.25, 0.75).members == std::vector<double>{5});

  CHECK_THROWS_AS(quantile_interval(dist, 0.75, 0.25), ParameterError);
  CHECK_THROWS_AS(EmpiricalDistribution(std::vector<double>{}), DataError);
}

TEST_CASE("membership test covers non-atom reals") {
  std::vector<double> uniform8;
  for (int i = 1; i <= 8; ++i) uniform8.push_back(i);
  const EmpiricalDistribution dist(uniform8);
  CHECK(in_quantile_interval(dist, 3.5, 0.25, 0.75));
  CHECK(in_quantile_interval(dist, 6.0, 0.25, 0.75));
  CHECK_FALSE(in_quantile_interval(dist, 2.0, 0.25, 0.75));
  CHECK_FALSE(in_quantile_interval(dist, 7.0, 0.25, 0.75));
}

TEST_CASE("cdf pair is monotone and consistent") {
  Rng rng(1234);
  for (int it = 0; it < 50; ++it) {
    const DiscreteDistribution dist = random_discrete(rng, 40);
    double prev_leq = 0.0;
    for (double v : dist.atoms()) {
      CHECK(dist.cdf_lt(v) <= dist.cdf_leq(v));
      CHECK(dist.cdf_leq(v) >= prev_leq);
      prev_leq = dist.cdf_leq(v);
      CHECK(dist.cdf_leq(v) <= 1.0 + 1e-12);
      CHECK(dist.cdf_lt(v) >= -1e-12);
    }
  }
}

TEST_CASE("quantile interval equals brute force on random distributions") {
  Rng rng(99);
  for (int it = 0; it < 300; ++it) {
    const DiscreteDistribution dist = random_discrete(rng, 60);
    const double a = rng.uniform() * 0.9;
    const double b = a + (1.0 - a) * (0.05 + 0.95 * rng.uniform());
    const QuantileInterval got = quantile_interval(dist, a, b);
    CHECK(got.members == brute_force_interval(dist.atoms(), dist.probs(), a, b));
  }
}

TEST_CASE("interquartile members obey Chebyshev and Markov containments") {
  Rng rng(2024);
  for (int it = 0; it < 300; ++it) {
    const DiscreteDistribution dist = random_discrete(rng, 60);
    const double mean = dist.mean();
    const double sd = dist.sd();
    const double mad = dist.mad();
    for (double v : quantile_interval(dist, 0.25, 0.75).members) {
      CHECK(v >= mean - 2.0 * sd - 1e-9);
      CHECK(v <= mean + 2.0 * sd + 1e-9);
      CHECK(v >= mean - 4.0 * mad - 1e-9);
      CHECK(v <= mean + 4.0 * mad + 1e-9);
    }
  }
}

TEST_CASE("estimator query projects its output onto the range") {
  const FiniteRange grid = FiniteRange::grid(0.0, 1.0, 0.1);
  const EstimatorQuery q(2, grid, [](std::span<const Sample> block) {
    return static_cast<double>(block[0]) * 10.37;
  });
  std::vector<Sample> block{0, 0};
  CHECK(q.evaluate(block) == doctest::Approx(0.0));
  block[0] = 1;  // raw value 10.37 clamps to the top of the grid
  CHECK(q.evaluate(block) == doctest::Approx(1.0));
}

TEST_CASE("rng streams are deterministic and independent") {
  Rng a = Rng::derive(42, 7);
  Rng b = Rng::derive(42, 7);
  Rng c = Rng::derive(42, 8);
  bool all_equal = true;
  bool any_diff_stream = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t x = a.next_u64();
    all_equal = all_equal && x == b.next_u64();
    any_diff_stream = any_diff_stream || x != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff_stream);
}

TEST_CASE("rng transforms have the right first moments") {
  Rng rng(5);
  const int n = 200000;
  double mean_u = 0.0;
  double mean_g = 0.0;
  double var_g = 0.0;
  double mean_l = 0.0;
  double var_l = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_u += rng.uniform();
    const double g = rng.gaussian();
    mean_g += g;
    var_g += g * g;
    const double l = rng.laplace(0.5);
    mean_l += l;
    var_l += l * l;
  }
  CHECK(mean_u / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(mean_g / n) < 0.01);
  CHECK(var_g / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(mean_l / n) < 0.01);
  CHECK(var_l / n == doctest::Approx(2 * 0.5 * 0.5).epsilon(0.03));
}
