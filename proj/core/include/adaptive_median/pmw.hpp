#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "adaptive_median/dp_median.hpp"
#include "adaptive_median/finite_range.hpp"
#include "adaptive_median/rng.hpp"

namespace adaptive_median {

// Probability vector over an explicitly enumerated universe Z. Kept exactly
// normalized (renormalized after every reweighting).
class UniverseDistribution {
 public:
  static constexpr std::size_t kUniverseCap = 1000000;

  explicit UniverseDistribution(std::size_t size);  // uniform
  explicit UniverseDistribution(std::vector<double> weights);

  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t z) const { return weights_[z]; }

  // E_{Z~x}[f(Z)]
  double expectation(const std::function<double(std::size_t)>& f) const;

  // Multiplies weight z by factor(z) and renormalizes.
  void reweight(const std::function<double(std::size_t)>& factor);

  std::size_t sample(Rng& rng) const;

 private:
  std::vector<double> weights_;
  void normalize();
};

// Private-multiplicative-weights session parameters. Queries map Z to
// [-1,1]; answers promise |v - D[psi]| <= alpha for all k adaptive queries
// jointly w.p. >= 1-beta at the calibrated m. The internal machinery runs on
// the [0,1] scale with accuracy a = alpha/2.
//
// Internal constants (exposed here since no reference pins them):
//   update threshold T = threshold_factor * a        (default a/2)
//   Laplace noise scale b = a / (4 ln(16 max(k,2)/beta)), override below
//   update cap = ceil(64 ln|Z| / a^2)
struct PmwConfig {
  double alpha = 0.125;
  double beta = 0.05;
  std::size_t max_queries = 1;  // k, counted in statistical queries; estimator
                                // queries cost up to 2*ceil(log2|T|) each
  std::uint64_t seed = 0;
  double threshold_factor = 0.5;
  double noise_scale_override = 0.0;   // 0 = calibrate from the formula above
  std::size_t update_cap_override = 0; // 0 = ceil(64 ln|Z| / a^2)

  void validate() const;
};

// Calibrated sample bound m0 = ceil(C sqrt(ln|Z|) ln(max(k,2))
// ln^{3/2}(1/(alpha*beta)) / alpha^3) with C = 4.
std::size_t pmw_required_m(std::size_t universe_size, double alpha, double beta, std::size_t k);

// Update-count cap for the given universe and accuracy.
std::size_t pmw_update_cap(std::size_t universe_size, double alpha);

// Answers statistical queries over a small universe from a synthetic
// distribution, updating it only when a noisy test says the synthetic answer
// drifted from the data. Updates are fully corrective (the reweighting is
// tilted until the synthetic expectation matches the noisy empirical
// answer), so a repeated query triggers at most one update.
class PmwSession {
 public:
  // block_atoms: the m blocks of the dataset, encoded as indices into Z.
  PmwSession(const std::vector<std::size_t>& block_atoms, std::size_t universe_size,
             const PmwConfig& config);

  // psi maps atom index to [-1,1]. Throws UpdateBudgetError when the update
  // cap is exhausted and ScaleError past k queries.
  double answer_sq(const std::function<double(std::size_t)>& psi);

  // Answers an estimator query phi: Z -> range via the binary-search median
  // reduction, using at most 2*ceil(log2(|range|)) statistical queries.
  // Requires alpha <= 1/8 so the oracle meets the reduction's accuracy need.
  double answer_estimator(const std::function<double(std::size_t)>& phi,
                          const FiniteRange& range);

  std::size_t update_count() const { return updates_; }
  std::size_t update_cap() const { return update_cap_; }
  std::size_t sq_calls() const { return sq_calls_; }
  std::size_t last_estimator_sq_calls() const { return last_estimator_calls_; }
  const UniverseDistribution& synthetic() const { return synthetic_; }

 private:
  PmwConfig config_;
  std::vector<double> empirical_;  // histogram of block atoms, normalized
  UniverseDistribution synthetic_;
  Rng rng_;
  double accuracy_;        // a = alpha/2, [0,1] scale
  double threshold_;       // T
  double noise_scale_;     // b
  std::size_t update_cap_;
  std::size_t updates_ = 0;
  std::size_t sq_calls_ = 0;
  std::size_t last_estimator_calls_ = 0;
  double noisy_threshold_ = 0.0;
  bool epoch_active_ = false;

  double answer_unit_sq(const std::function<double(std::size_t)>& psi_unit);
};

}  // namespace adaptive_median
