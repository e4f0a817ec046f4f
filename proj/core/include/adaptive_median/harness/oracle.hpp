#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "adaptive_median/dataset.hpp"
#include "adaptive_median/distribution.hpp"
#include "adaptive_median/finite_range.hpp"
#include "adaptive_median/query.hpp"
#include "adaptive_median/rng.hpp"

namespace adaptive_median::harness {

// Synthetic data distributions. Raw samples are opaque 64-bit words whose
// meaning is fixed here: packed +/-1 feature vectors (bit j set = +1), a 0/1
// outcome, or an index into an explicit value table.
struct DistributionDescriptor {
  enum class Kind { rademacher_features, bernoulli, discrete, gaussian_discretized };

  Kind kind = Kind::bernoulli;
  std::size_t features = 0;     // rademacher_features, at most 63
  double p = 0.5;               // bernoulli
  std::vector<double> values;   // discrete / gaussian_discretized
  std::vector<double> probs;

  static DistributionDescriptor rademacher(std::size_t features);
  static DistributionDescriptor bernoulli_outcome(double p);
  static DistributionDescriptor discrete(std::vector<double> values, std::vector<double> probs);
  static DistributionDescriptor gaussian_discretized(double mu, double sigma, double lo,
                                                     double hi, double step);

  std::string to_json() const;
  static DistributionDescriptor from_json(const std::string& text);
};

std::vector<Sample> generate_samples(const DistributionDescriptor& dist, std::size_t n, Rng& rng);

// Query families the harness can build, evaluate, and compute ground truth
// for. Serialized descriptors are what transcripts record.
struct QueryDescriptor {
  enum class Kind { feature_mean, signed_combo, block_mean, value_mean, constant };

  Kind kind = Kind::block_mean;
  std::size_t feature = 0;      // feature_mean
  std::vector<int> signs;       // signed_combo, entries +/-1
  double constant = 0.0;        // constant

  static QueryDescriptor feature_mean(std::size_t feature);
  static QueryDescriptor signed_combo(std::vector<int> signs);
  static QueryDescriptor block_mean();
  static QueryDescriptor value_mean();
  static QueryDescriptor constant_value(double c);

  std::string to_json() const;
  static QueryDescriptor from_json(const std::string& text);

  // Cache key: descriptors whose pushforward distribution coincides map to
  // the same key (e.g. all feature_mean queries; signed combos of equal arity).
  std::string truth_key() const;
};

EstimatorQuery make_query(const QueryDescriptor& query, const DistributionDescriptor& data,
                          std::size_t block_size, const FiniteRange& grid);

// Confidence bounds on a Monte-Carlo quantile estimate (order statistics).
struct McQuantileBound {
  double lo_value = 0.0;
  double hi_value = 0.0;
};

// Exact or Monte-Carlo access to the distribution of a projected query on
// fresh blocks.
class GroundTruthOracle {
 public:
  static constexpr std::size_t kAtomCap = 1000000;

  GroundTruthOracle(DistributionDescriptor data, std::size_t block_size);

  // Exact pushforward of the projected query over P^t. Throws ScaleError if
  // the support is not enumerable within the atom cap.
  DiscreteDistribution exact_distribution(const QueryDescriptor& query,
                                          const FiniteRange& grid) const;

  QuantileInterval true_iqr(const QueryDescriptor& query, const FiniteRange& grid, double a,
                            double b) const;

  // Monte-Carlo pushforward from `draws` fresh blocks.
  EmpiricalDistribution mc_distribution(const QueryDescriptor& query, const FiniteRange& grid,
                                        std::size_t draws, Rng& rng) const;

  // Two-sided order-statistic bound for the q-quantile at z standard errors.
  static McQuantileBound mc_quantile_ci(const EmpiricalDistribution& dist, double q, double z);

  const DistributionDescriptor& data() const { return data_; }
  std::size_t block_size() const { return block_size_; }

 private:
  DistributionDescriptor data_;
  std::size_t block_size_;
};

}  // namespace adaptive_median::harness
