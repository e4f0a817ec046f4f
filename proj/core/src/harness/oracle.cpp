#include "adaptive_median/harness/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>

#include <nlohmann/json.hpp>

#include "adaptive_median/errors.hpp"
#include "adaptive_median/harness/stats.hpp"

namespace adaptive_median::harness {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

void check_probs(const std::vector<double>& values, const std::vector<double>& probs) {
  if (values.empty() || values.size() != probs.size())
    throw ParameterError("DistributionDescriptor: values/probs mismatch or empty");
  double sum = 0.0;
  for (double q : probs) {
    if (!(q >= 0)) throw ParameterError("DistributionDescriptor: negative probability");
    sum += q;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ParameterError("DistributionDescriptor: probabilities must sum to 1");
}

// Pushforward of a scaled binomial (2B - n)/n or B/n through grid projection.
DiscreteDistribution projected_binomial(std::uint64_t n, double p, const FiniteRange& grid,
                                        bool signed_scale) {
  std::vector<double> mass(grid.size(), 0.0);
  for (std::uint64_t b = 0; b <= n; ++b) {
    const double value = signed_scale
                             ? (2.0 * static_cast<double>(b) - static_cast<double>(n)) /
                                   static_cast<double>(n)
                             : static_cast<double>(b) / static_cast<double>(n);
    mass[grid.project_index(value)] += binomial_pmf(n, b, p);
  }
  std::vector<double> atoms;
  std::vector<double> probs;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] > 0.0) {
      atoms.push_back(grid.value(i));
      probs.push_back(mass[i]);
    }
  }
  return DiscreteDistribution(std::move(atoms), std::move(probs));
}

// Exact distribution of the mean of `t` draws from a finite value table,
// by repeated convolution. Atoms within 1e-12 of each other are merged.
DiscreteDistribution mean_convolution(const std::vector<double>& values,
                                      const std::vector<double>& probs, std::size_t t,
                                      const FiniteRange& grid, std::size_t cap) {
  std::map<double, double> sums{{0.0, 1.0}};
  for (std::size_t step = 0; step < t; ++step) {
    std::map<double, double> next;
    for (const auto& [sum, q] : sums) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double key = sum + values[i];
        auto it = next.lower_bound(key - 1e-12);
        if (it != next.end() && std::abs(it->first - key) <= 1e-12) {
          it->second += q * probs[i];
        } else {
          next.emplace(key, q * probs[i]);
        }
      }
      if (next.size() > cap)
        throw ScaleError("GroundTruthOracle: mean support exceeds the enumeration cap");
    }
    sums = std::move(next);
  }
  std::vector<double> mass(grid.size(), 0.0);
  for (const auto& [sum, q] : sums)
    mass[grid.project_index(sum / static_cast<double>(t))] += q;
  std::vector<double> atoms;
  std::vector<double> out;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] > 0.0) {
      atoms.push_back(grid.value(i));
      out.push_back(mass[i]);
    }
  }
  return DiscreteDistribution(std::move(atoms), std::move(out));
}

}  // namespace

DistributionDescriptor DistributionDescriptor::rademacher(std::size_t features) {
  if (features == 0 || features > 63)
    throw ParameterError("rademacher: features must be in [1, 63]");
  DistributionDescriptor d;
  d.kind = Kind::rademacher_features;
  d.features = features;
  return d;
}

DistributionDescriptor DistributionDescriptor::bernoulli_outcome(double p) {
  if (!(p >= 0) || !(p <= 1)) throw ParameterError("bernoulli: p must be in [0,1]");
  DistributionDescriptor d;
  d.kind = Kind::bernoulli;
  d.p = p;
  return d;
}

DistributionDescriptor DistributionDescriptor::discrete(std::vector<double> values,
                                                        std::vector<double> probs) {
  check_probs(values, probs);
  DistributionDescriptor d;
  d.kind = Kind::discrete;
  d.values = std::move(values);
  d.probs = std::move(probs);
  return d;
}

DistributionDescriptor DistributionDescriptor::gaussian_discretized(double mu, double sigma,
                                                                    double lo, double hi,
                                                                    double step) {
  if (!(sigma > 0)) throw ParameterError("gaussian_discretized: sigma must be > 0");
  const FiniteRange grid = FiniteRange::grid(lo, hi, step);
  DistributionDescriptor d;
  d.kind = Kind::gaussian_discretized;
  d.values = grid.values();
  d.probs.resize(d.values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    const double a = (d.values[i] - step / 2 - mu) / sigma;
    const double b = (d.values[i] + step / 2 - mu) / sigma;
    d.probs[i] = normal_cdf(b) - normal_cdf(a);
    sum += d.probs[i];
  }
  for (double& q : d.probs) q /= sum;
  return d;
}

std::string DistributionDescriptor::to_json() const {
  nlohmann::json j;
  switch (kind) {
    case Kind::rademacher_features:
      j["type"] = "rademacher_features";
      j["features"] = features;
      break;
    case Kind::bernoulli:
      j["type"] = "bernoulli";
      j["p"] = p;
      break;
    case Kind::discrete:
      j["type"] = "discrete";
      j["values"] = values;
      j["probs"] = probs;
      break;
    case Kind::gaussian_discretized:
      j["type"] = "discrete";  // serialized in discretized form
      j["values"] = values;
      j["probs"] = probs;
      break;
  }
  return j.dump();
}

DistributionDescriptor DistributionDescriptor::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("DistributionDescriptor: bad JSON: ") + e.what());
  }
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "rademacher_features") return rademacher(j.at("features").get<std::size_t>());
    if (type == "bernoulli") return bernoulli_outcome(j.at("p").get<double>());
    if (type == "discrete")
      return discrete(j.at("values").get<std::vector<double>>(),
                      j.at("probs").get<std::vector<double>>());
    if (type == "gaussian_discretized")
      return gaussian_discretized(j.at("mu").get<double>(), j.at("sigma").get<double>(),
                                  j.at("lo").get<double>(), j.at("hi").get<double>(),
                                  j.at("step").get<double>());
    throw DataError("DistributionDescriptor: unknown type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("DistributionDescriptor: schema violation: ") + e.what());
  }
}

std::vector<Sample> generate_samples(const DistributionDescriptor& dist, std::size_t n,
                                     Rng& rng) {
  std::vector<Sample> out(n);
  switch (dist.kind) {
    case DistributionDescriptor::Kind::rademacher_features: {
      const Sample mask = dist.features == 64 ? ~Sample{0} : ((Sample{1} << dist.features) - 1);
      for (Sample& s : out) s = rng.next_u64() & mask;
      break;
    }
    case DistributionDescriptor::Kind::bernoulli:
      for (Sample& s : out) s = rng.bernoulli(dist.p) ? 1 : 0;
      break;
    case DistributionDescriptor::Kind::discrete:
    case DistributionDescriptor::Kind::gaussian_discretized: {
      // Inverse-CDF sampling over the value table.
      std::vector<double> cdf(dist.probs.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        acc += dist.probs[i];
        cdf[i] = acc;
      }
      for (Sample& s : out) {
        const double u = rng.uniform();
        s = static_cast<Sample>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (s >= dist.values.size()) s = dist.values.size() - 1;
      }
      break;
    }
  }
  return out;
}

QueryDescriptor QueryDescriptor::feature_mean(std::size_t feature) {
  QueryDescriptor q;
  q.kind = Kind::feature_mean;
  q.feature = feature;
  return q;
}

QueryDescriptor QueryDescriptor::signed_combo(std::vector<int> signs) {
  if (signs.empty()) throw ParameterError("signed_combo: needs at least one sign");
  for (int s : signs)
    if (s != 1 && s != -1) throw ParameterError("signed_combo: signs must be +/-1");
  QueryDescriptor q;
  q.kind = Kind::signed_combo;
  q.signs = std::move(signs);
  return q;
}

QueryDescriptor QueryDescriptor::block_mean() {
  QueryDescriptor q;
  q.kind = Kind::block_mean;
  return q;
}

QueryDescriptor QueryDescriptor::value_mean() {
  QueryDescriptor q;
  q.kind = Kind::value_mean;
  return q;
}

QueryDescriptor QueryDescriptor::constant_value(double c) {
  QueryDescriptor q;
  q.kind = Kind::constant;
  q.constant = c;
  return q;
}

std::string QueryDescriptor::to_json() const {
  nlohmann::json j;
  switch (kind) {
    case Kind::feature_mean:
      j["type"] = "feature_mean";
      j["feature"] = feature;
      break;
    case Kind::signed_combo:
      j["type"] = "signed_combo";
      j["signs"] = signs;
      break;
    case Kind::block_mean:
      j["type"] = "block_mean";
      break;
    case Kind::value_mean:
      j["type"] = "value_mean";
      break;
    case Kind::constant:
      j["type"] = "constant";
      j["value"] = constant;
      break;
  }
  return j.dump();
}

QueryDescriptor QueryDescriptor::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("QueryDescriptor: bad JSON: ") + e.what());
  }
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "feature_mean") return feature_mean(j.at("feature").get<std::size_t>());
    if (type == "signed_combo") return signed_combo(j.at("signs").get<std::vector<int>>());
    if (type == "block_mean") return block_mean();
    if (type == "value_mean") return value_mean();
    if (type == "constant") return constant_value(j.at("value").get<double>());
    throw DataError("QueryDescriptor: unknown type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("QueryDescriptor: schema violation: ") + e.what());
  }
}

std::string QueryDescriptor::truth_key() const {
  switch (kind) {
    case Kind::feature_mean:
      return "feature_mean";  // i.i.d. features share one distribution
    case Kind::signed_combo:
      return "signed_combo:" + std::to_string(signs.size());  // symmetric in signs
    case Kind::block_mean:
      return "block_mean";
    case Kind::value_mean:
      return "value_mean";
    case Kind::constant:
      return "constant:" + std::to_string(constant);
  }
  return "?";
}

EstimatorQuery make_query(const QueryDescriptor& query, const DistributionDescriptor& data,
                          std::size_t block_size, const FiniteRange& grid) {
  const double t = static_cast<double>(block_size);
  EstimatorQuery::Eval eval;

  switch (query.kind) {
    case QueryDescriptor::Kind::feature_mean: {
      if (data.kind != DistributionDescriptor::Kind::rademacher_features ||
          query.feature >= data.features)
        throw ParameterError("feature_mean: needs rademacher data with that feature");
      const Sample bit = Sample{1} << query.feature;
      eval = [bit, t](std::span<const Sample> block) {
        std::size_t ones = 0;
        for (Sample s : block) ones += (s & bit) ? 1 : 0;
        return (2.0 * static_cast<double>(ones) - t) / t;
      };
      break;
    }
    case QueryDescriptor::Kind::signed_combo: {
      if (data.kind != DistributionDescriptor::Kind::rademacher_features ||
          query.signs.size() > data.features)
        throw ParameterError("signed_combo: needs rademacher data with enough features");
      Sample pos = 0;
      Sample neg = 0;
      for (std::size_t j = 0; j < query.signs.size(); ++j)
        (query.signs[j] > 0 ? pos : neg) |= Sample{1} << j;
      const double scale = static_cast<double>(query.signs.size()) * t;
      // Each sample contributes sum_j s_j x_j = 2(pop(pos bits) - pop(neg bits)) - bias.
      const double bias =
          static_cast<double>(std::popcount(pos)) - static_cast<double>(std::popcount(neg));
      eval = [pos, neg, scale, bias, t](std::span<const Sample> block) {
        double acc = 0.0;
        for (Sample s : block)
          acc += 2.0 * (static_cast<double>(std::popcount(s & pos)) -
                        static_cast<double>(std::popcount(s & neg)));
        return (acc - t * bias) / scale;
      };
      break;
    }
    case QueryDescriptor::Kind::block_mean: {
      if (data.kind != DistributionDescriptor::Kind::bernoulli)
        throw ParameterError("block_mean: needs bernoulli data");
      eval = [t](std::span<const Sample> block) {
        std::size_t ones = 0;
        for (Sample s : block) ones += s;
        return static_cast<double>(ones) / t;
      };
      break;
    }
    case QueryDescriptor::Kind::value_mean: {
      if (data.kind != DistributionDescriptor::Kind::discrete &&
          data.kind != DistributionDescriptor::Kind::gaussian_discretized)
        throw ParameterError("value_mean: needs a value-table distribution");
      const std::vector<double> values = data.values;
      eval = [values, t](std::span<const Sample> block) {
        double acc = 0.0;
        for (Sample s : block) acc += values[s];
        return acc / t;
      };
      break;
    }
    case QueryDescriptor::Kind::constant: {
      const double c = query.constant;
      eval = [c](std::span<const Sample>) { return c; };
      break;
    }
  }
  return EstimatorQuery(block_size, grid, std::move(eval), query.to_json());
}

GroundTruthOracle::GroundTruthOracle(DistributionDescriptor data, std::size_t block_size)
    : data_(std::move(data)), block_size_(block_size) {
  if (block_size_ == 0) throw ParameterError("GroundTruthOracle: block size must be >= 1");
}

DiscreteDistribution GroundTruthOracle::exact_distribution(const QueryDescriptor& query,
                                                           const FiniteRange& grid) const {
  const auto n = static_cast<std::uint64_t>(block_size_);
  switch (query.kind) {
    case QueryDescriptor::Kind::feature_mean:
      return projected_binomial(n, 0.5, grid, /*signed_scale=*/true);
    case QueryDescriptor::Kind::signed_combo:
      // Sum of |signs|*t independent +/-1 bits, regardless of the signs.
      return projected_binomial(n * query.signs.size(), 0.5, grid, /*signed_scale=*/true);
    case QueryDescriptor::Kind::block_mean:
      return projected_binomial(n, data_.p, grid, /*signed_scale=*/false);
    case QueryDescriptor::Kind::value_mean:
      return mean_convolution(data_.values, data_.probs, block_size_, grid, kAtomCap);
    case QueryDescriptor::Kind::constant:
      return DiscreteDistribution({grid.project(query.constant)}, {1.0});
  }
  throw ParameterError("exact_distribution: unsupported query");
}

QuantileInterval GroundTruthOracle::true_iqr(const QueryDescriptor& query,
                                             const FiniteRange& grid, double a, double b) const {
  return quantile_interval(exact_distribution(query, grid), a, b);
}

EmpiricalDistribution GroundTruthOracle::mc_distribution(const QueryDescriptor& query,
                                                         const FiniteRange& grid,
                                                         std::size_t draws, Rng& rng) const {
  const EstimatorQuery q = make_query(query, data_, block_size_, grid);
  std::vector<double> values(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const std::vector<Sample> block = generate_samples(data_, block_size_, rng);
    values[i] = q.evaluate(block);
  }
  return EmpiricalDistribution(std::move(values));
}

McQuantileBound GroundTruthOracle::mc_quantile_ci(const EmpiricalDistribution& dist, double q,
                                                  double z) {
  const double n = static_cast<double>(dist.size());
  const double center = n * q;
  const double spread = z * std::sqrt(n * q * (1.0 - q)) + 1.0;
  const double lo_rank = std::max(0.0, center - spread);
  const double hi_rank = std::min(n - 1.0, center + spread);

  // Walk the atoms to the ranks.
  const auto& atoms = dist.atoms();
  const auto& counts = dist.counts();
  McQuantileBound out{atoms.front(), atoms.back()};
  double acc = 0.0;
  bool lo_set = false;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    acc += static_cast<double>(counts[i]);
    if (!lo_set && acc > lo_rank) {
      out.lo_value = atoms[i];
      lo_set = true;
    }
    if (acc > hi_rank) {
      out.hi_value = atoms[i];
      break;
    }
  }
  return out;
}

}  // namespace adaptive_median::harness
