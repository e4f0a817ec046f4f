#include <doctest.h>

#include <cmath>
#include <vector>

#include "adaptive_median/dp_median.hpp"
#include "adaptive_median/engine.hpp"
#include "adaptive_median/errors.hpp"
#include "adaptive_median/harness/stats.hpp"
#include "adaptive_median/rng.hpp"

using namespace adaptive_median;

namespace {

SessionConfig basic_config(std::size_t t, std::size_t k, std::size_t r, double beta,
                           std::uint64_t seed) {
  SessionConfig config;
  config.block_size = t;
  config.max_queries = k;
  config.max_range_size = r;
  config.beta = beta;
  config.seed = seed;
  return config;
}

std::vector<Sample> bernoulli_samples(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out(n);
  for (Sample& s : out) s = rng.bernoulli(p) ? 1 : 0;
  return out;
}

EstimatorQuery mean_query(std::size_t t, const FiniteRange& grid) {
  return EstimatorQuery(t, grid,
                        [](std::span<const Sample> block) {
                          double acc = 0.0;
                          for (Sample s : block) acc += static_cast<double>(s);
                          return acc / static_cast<double>(block.size());
                        },
                        "{\"type\":\"block_mean\"}");
}

// Exact mean absolute deviation of Binomial(t, p)/t around its mean.
double binomial_mean_mad(std::size_t t, double p) {
  const double mean = p;
  double acc = 0.0;
  for (std::size_t b = 0; b <= t; ++b)
    acc += std::abs(static_cast<double>(b) / static_cast<double>(t) - mean) *
           harness::binomial_pmf(t, b, p);
  return acc;
}

}  // namespace

TEST_CASE("session requires the calibrated sample count") {
  const SessionConfig config = basic_config(10, 16, 64, 0.05, 1);
  const std::size_t n0 = Session::required_samples(config);
  const SessionCalibration cal = calibrate_session(16, 64, 0.05);
  CHECK(n0 == cal.m * 10);

  try {
    Session::open(bernoulli_samples(n0 - 1, 0.5, 2), config);
    FAIL("expected InsufficientDataError");
  } catch (const InsufficientDataError& e) {
    CHECK(e.required() == n0);
  }
}

TEST_CASE("constant queries are answered exactly and k+1-th query bottoms") {
  SessionConfig config = basic_config(1, 1, 8, 0.2, 3);
  const std::size_t n0 = Session::required_samples(config);
  Session session = Session::open(bernoulli_samples(n0, 0.5, 4), config);

  const FiniteRange grid = FiniteRange::grid(1.0, 8.0, 1.0);
  const EstimatorQuery constant(1, grid, [](std::span<const Sample>) { return 5.0; });

  const std::optional<double> first = session.answer(constant);
  REQUIRE(first.has_value());
  CHECK(*first == 5.0);

  CHECK_FALSE(session.answer(constant).has_value());
  CHECK(session.queries_answered() == 1);
  CHECK(session.transcript().entries.size() == 1);
}

TEST_CASE("oversized ranges and mismatched block sizes are rejected without charging") {
  SessionConfig config = basic_config(2, 4, 8, 0.2, 5);
  Session session = Session::open(bernoulli_samples(Session::required_samples(config), 0.5, 6),
                                  config);

  const FiniteRange wide = FiniteRange::grid(0.0, 1.0, 1.0 / 15.0);  // 16 > r = 8
  CHECK_THROWS_AS(session.answer(mean_query(2, wide)), ParameterError);

  const FiniteRange ok = FiniteRange::grid(0.0, 1.0, 0.5);
  CHECK_THROWS_AS(session.answer(mean_query(3, ok)), ParameterError);

  CHECK(session.ledger().charges().empty());
  CHECK(session.queries_answered() == 0);

  CHECK(session.answer(mean_query(2, ok)).has_value());
  CHECK(session.ledger().charges().size() == 1);
}

TEST_CASE("ledger stays consistent with the paper profile cap") {
  SessionConfig config = basic_config(1, 3, 8, 0.2, 7);
  Session session = Session::open(bernoulli_samples(Session::required_samples(config), 0.4, 8),
                                  config);
  const FiniteRange grid = FiniteRange::grid(0.0, 1.0, 1.0 / 7.0);
  for (std::size_t j = 1; j <= 3; ++j) {
    CHECK(session.answer(mean_query(1, grid)).has_value());
    CHECK(session.ledger().charges().size() == j);
    for (const PrivacyCharge& c : session.ledger().charges()) {
      CHECK(c.epsilon == doctest::Approx(session.epsilon_tilde()));
      CHECK(c.delta == 0.0);
    }
  }
  CHECK(session.ledger().composed().epsilon_hat <= 0.05);
  CHECK_FALSE(session.guarantee_void());
}

TEST_CASE("answers replay bit-for-bit under the same seed") {
  SessionConfig config = basic_config(2, 4, 16, 0.1, 99);
  const std::vector<Sample> samples =
      bernoulli_samples(Session::required_samples(config), 0.5, 100);
  const FiniteRange grid = FiniteRange::grid(0.0, 1.0, 1.0 / 15.0);

  std::vector<double> first;
  std::vector<double> second;
  std::vector<std::uint64_t> stamps;
  std::vector<std::uint64_t> other_stamps;
  for (int round = 0; round < 3; ++round) {
    SessionConfig c = config;
    if (round == 2) c.seed = 1234567;
    Session session = Session::open(samples, c);
    for (int q = 0; q < 4; ++q) {
      const std::optional<double> a = session.answer(mean_query(2, grid));
      REQUIRE(a.has_value());
      if (round == 0) first.push_back(*a);
      if (round == 1) second.push_back(*a);
    }
    for (const TranscriptEntry& e : session.transcript().entries)
      (round == 2 ? other_stamps : stamps).push_back(e.seed_stamp);
  }
  CHECK(first == second);
  // A different seed derives different per-query randomness, visible in the
  // recorded stamps even when small grids make answer collisions likely.
  CHECK(stamps[0] == stamps[4]);  // rounds 0 and 1 share the seed
  CHECK(stamps[0] != other_stamps[0]);

  // Transcript serialization round-trips.
  SessionConfig c = config;
  Session session = Session::open(samples, c, "{\"source\":\"inline\"}");
  for (int q = 0; q < 2; ++q) session.answer(mean_query(2, grid));
  const std::string jsonl = session.transcript().to_jsonl();
  const Transcript parsed = Transcript::from_jsonl(jsonl);
  CHECK(parsed.entries.size() == 2);
  CHECK(parsed.header.config.seed == 99);
  CHECK(parsed.entries[0].answer == session.transcript().entries[0].answer);
  CHECK(parsed.entries[1].seed_stamp == session.transcript().entries[1].seed_stamp);

  CHECK_THROWS_AS(Transcript::from_jsonl("{\"type\":\"entry\"}"), DataError);
  CHECK_THROWS_AS(Transcript::from_jsonl("not json"), DataError);
}

TEST_CASE("fixed-dataset answers stay in the empirical (3/8,5/8) interval") {
  // Per-query failure under the paper profile is at most beta/k; with one
  // query per session the Monte-Carlo failure frequency must stay near it.
  const double beta = 0.3;
  SessionConfig config = basic_config(1, 1, 8, beta, 0);
  const std::size_t n0 = Session::required_samples(config);

  Rng data_rng(11);
  std::vector<Sample> samples(n0);
  for (Sample& s : samples) s = data_rng.uniform_index(8);
  const FiniteRange grid = FiniteRange::grid(0.0, 7.0, 1.0);

  std::vector<double> block_values;
  block_values.reserve(n0);
  for (Sample s : samples) block_values.push_back(static_cast<double>(s));
  const EmpiricalDistribution empirical(block_values);

  const EstimatorQuery identity(1, grid, [](std::span<const Sample> block) {
    return static_cast<double>(block[0]);
  });

  std::size_t failures = 0;
  const int trials = 300;
  for (int i = 0; i < trials; ++i) {
    SessionConfig c = config;
    c.seed = 1000 + static_cast<std::uint64_t>(i);
    Session session = Session::open(samples, c);
    const std::optional<double> a = session.answer(identity);
    REQUIRE(a.has_value());
    failures += !in_quantile_interval(empirical, *a, 3.0 / 8.0, 5.0 / 8.0);
  }
  const double rate = static_cast<double>(failures) / trials;
  const double bound = beta / 1.0;  // k = 1
  CHECK(rate <= bound + 3.0 * std::sqrt(bound * (1 - bound) / trials));
}

TEST_CASE("end-to-end bernoulli means land in [0.4, 0.6]") {
  const double beta = 0.05;
  SessionConfig config = basic_config(100, 1, 101, beta, 0);
  const std::size_t n0 = Session::required_samples(config);
  const FiniteRange grid = FiniteRange::grid(0.0, 1.0, 0.01);

  std::size_t hits = 0;
  const int runs = 24;
  for (int i = 0; i < runs; ++i) {
    SessionConfig c = config;
    c.seed = 555 + static_cast<std::uint64_t>(i);
    Session session =
        Session::open(bernoulli_samples(n0, 0.5, 7000 + static_cast<std::uint64_t>(i)), c);
    const std::optional<double> a = session.answer(mean_query(100, grid));
    REQUIRE(a.has_value());
    hits += (*a >= 0.4 && *a <= 0.6);
  }
  // With 24 runs at beta = 0.05 even three misses would be a surprise.
  CHECK(hits >= 23);
}

TEST_CASE("mad wrapper respects the 4*MAD + zeta contract") {
  const double beta = 0.05;
  const double zeta = 0.05;
  const std::size_t t = 20;
  const double p = 0.3;
  SessionConfig config = basic_config(t, 1, 201, beta, 0);
  const std::size_t n0 = Session::required_samples(config);

  const double mad = binomial_mean_mad(t, p);
  const double bound = 4.0 * mad + zeta;

  std::size_t hits = 0;
  const int runs = 10;
  for (int i = 0; i < runs; ++i) {
    SessionConfig c = config;
    c.seed = 31 + static_cast<std::uint64_t>(i);
    Session session =
        Session::open(bernoulli_samples(n0, p, 900 + static_cast<std::uint64_t>(i)), c);
    const std::optional<double> a = session.answer_mad(
        [](std::span<const Sample> block) {
          double acc = 0.0;
          for (Sample s : block) acc += static_cast<double>(s);
          return acc / static_cast<double>(block.size());
        },
        zeta);
    REQUIRE(a.has_value());
    hits += std::abs(*a - p) <= bound;
  }
  CHECK(hits == runs);
}

TEST_CASE("mad wrapper point mass answers within zeta") {
  SessionConfig config = basic_config(1, 1, 1001, 0.1, 12);
  Session session = Session::open(bernoulli_samples(Session::required_samples(config), 0.5, 13),
                                  config);
  const std::optional<double> a =
      session.answer_mad([](std::span<const Sample>) { return 0.37; }, 0.01);
  REQUIRE(a.has_value());
  CHECK(std::abs(*a - 0.37) <= 0.01);
}

TEST_CASE("mad wrapper clamps escaping values and keeps the contract") {
  // phi = 12*(block mean - 1/2) has range [-6,6]; the projection truncates to
  // [-5,5] but the interquartile interval is far inside, so the bound holds.
  const std::size_t t = 100;
  const double zeta = 0.1;
  SessionConfig config = basic_config(t, 1, 101, 0.05, 21);
  const std::size_t n0 = Session::required_samples(config);

  double mad = 0.0;  // exact MAD of 12*(Bin(100, 1/2)/100 - 1/2)
  for (std::size_t b = 0; b <= t; ++b)
    mad += std::abs(12.0 * (static_cast<double>(b) / t - 0.5)) *
           harness::binomial_pmf(t, b, 0.5);
  CHECK(mad <= 1.0);  // normalization assumption of the contract

  Session session = Session::open(bernoulli_samples(n0, 0.5, 22), config);
  const std::optional<double> a = session.answer_mad(
      [](std::span<const Sample> block) {
        double acc = 0.0;
        for (Sample s : block) acc += static_cast<double>(s);
        return 12.0 * (acc / static_cast<double>(block.size()) - 0.5);
      },
      zeta);
  REQUIRE(a.has_value());
  CHECK(std::abs(*a) <= 4.0 * mad + zeta);
}

TEST_CASE("mad wrapper requires a large enough declared range") {
  SessionConfig config = basic_config(1, 1, 8, 0.1, 2);
  Session session = Session::open(bernoulli_samples(Session::required_samples(config), 0.5, 3),
                                  config);
  CHECK_THROWS_AS(session.answer_mad([](std::span<const Sample>) { return 0.0; }, 0.01),
                  ParameterError);
}

TEST_CASE("interior-point variant: rho formula and containment") {
  SessionConfig config = basic_config(10, 4, 8, 0.05, 77);
  config.variant = SessionVariant::interior_point;
  config.aggressive = AggressiveBudget{1.0, 1e-6};

  std::vector<Sample> samples(4000, 1);
  Session session = Session::open(samples, config);
  CHECK(session.interior_point_rho() == doctest::Approx(0.05 * 10 / (4.0 * 4 * 4000)));

  SessionConfig other = config;
  other.variant = SessionVariant::iqr_median;
  Session plain = Session::open(samples, other);
  CHECK_THROWS_AS(plain.interior_point_rho(), ParameterError);

  // rho decreases in k and n, and always stays below beta.
  const double rho = session.interior_point_rho();
  CHECK(rho < 0.05);
  SessionConfig more_queries = config;
  more_queries.max_queries = 8;
  Session s2 = Session::open(samples, more_queries);
  CHECK(s2.interior_point_rho() < rho);
}

TEST_CASE("interior-point paper profile keeps answers inside the value span") {
  const double beta = 0.05;
  const std::size_t k = 4;
  SessionConfig config = basic_config(1, k, 8, beta, 0);
  config.variant = SessionVariant::interior_point;
  const std::size_t n0 = Session::required_samples(config);
  CHECK(n0 == calibrate_interior_session(k, 8, beta).m);

  Rng data_rng(5);
  std::vector<Sample> samples(n0);
  for (Sample& s : samples) s = 2 + data_rng.uniform_index(5);  // values in [2,6]
  const FiniteRange grid = FiniteRange::grid(1.0, 8.0, 1.0);
  const EstimatorQuery identity(1, grid, [](std::span<const Sample> block) {
    return static_cast<double>(block[0]);
  });

  // Exact per-query failure mass: EM probability of leaving [2,6].
  std::vector<double> block_values;
  for (Sample s : samples) block_values.push_back(static_cast<double>(s));
  Session probe = Session::open(samples, config);
  const std::vector<double> exact =
      em_exact_distribution(EmpiricalDistribution(block_values), grid, probe.epsilon_tilde());
  double outside = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const double value = grid.value(v);
    if (value < 2.0 || value > 6.0) outside += exact[v];
  }
  CHECK(outside <= beta / (2.0 * static_cast<double>(k)));
}

TEST_CASE("aggressive sessions mark the transcript when the premise fails") {
  SessionConfig config = basic_config(2, 4, 8, 0.05, 1);
  config.aggressive = AggressiveBudget{1.0, 1e-6};  // epsilon* far above 1/20
  Session session = Session::open(bernoulli_samples(64, 0.5, 2), config);
  CHECK(session.guarantee_void());

  const double eps = session.epsilon_tilde();
  const std::vector<PrivacyCharge> charges(4, {eps, 0.0});
  CHECK(compose_advanced(charges, 1e-6).epsilon_hat <= 1.0 * (1 + 1e-9));
}
