#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "adaptive_median/distribution.hpp"
#include "adaptive_median/finite_range.hpp"
#include "adaptive_median/rng.hpp"

namespace adaptive_median {

// Per-invocation parameters of the private approximate-median mechanisms.
// An alpha-approximate median of a multiset s is any member of
// iqr(s; (1-alpha)/2, (1+alpha)/2); alpha = 1 asks only for an interior point.
struct MedianParams {
  double epsilon = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  void validate() const;
};

// Utility of grid value v against the value multiset:
//   c(v) = max(#{i : y_i < v}, #{i : y_i > v}).
// Sensitivity 1 under replacement of one value; minimized near the median.
std::uint64_t utility(const EmpiricalDistribution& values, double v);

// Maximal run of consecutive grid indices [first, last] sharing one utility
// value. The runs partition T; there are at most 2*distinct(values)+1 of
// them, which is the "m+1 intervals" decomposition when values are distinct.
struct UtilityRun {
  std::size_t first = 0;
  std::size_t last = 0;
  std::uint64_t cost = 0;

  std::size_t width() const { return last - first + 1; }
};

class UtilityProfile {
 public:
  UtilityProfile(const EmpiricalDistribution& values, const FiniteRange& range);

  const std::vector<UtilityRun>& runs() const { return runs_; }
  std::uint64_t min_utility() const { return min_utility_; }

 private:
  std::vector<UtilityRun> runs_;
  std::uint64_t min_utility_ = 0;
};

// Exponential-mechanism approximate median: outputs v in T with probability
// proportional to exp(-(epsilon/2) * c(v)). Sampling goes through the run
// decomposition and subtracts the minimum utility before exponentiation so
// large epsilon*m cannot underflow everything at once.
double em_median(const EmpiricalDistribution& values, const FiniteRange& range, double epsilon,
                 Rng& rng);

// Exact output distribution of em_median, for audits and oracle tests.
// Normalized to 1 within 1e-12. Range capped at 1e5 grid points.
std::vector<double> em_exact_distribution(const EmpiricalDistribution& values,
                                          const FiniteRange& range, double epsilon);

// Smallest m guaranteeing an alpha-approximate median with probability
// >= 1-beta: ceil(4*ln(|T|/beta) / (epsilon*alpha)).
std::size_t required_m_em(std::size_t range_size, double beta, double epsilon, double alpha);

// em_median specialized to alpha = 1: with m >= required_m_em(|T|, beta,
// epsilon, 1) the output lies in [min(values), max(values)] w.p. >= 1-beta.
double interior_point(const EmpiricalDistribution& values, const FiniteRange& range,
                      double epsilon, Rng& rng);

// ---------------------------------------------------------------------------
// Approximate median from statistical queries.

enum class CdfSide { leq, lt };

// Answers the statistical query "fraction of values <= v" (or "< v") with
// some additive accuracy guarantee.
using CdfSqOracle = std::function<double(double v, CdfSide side)>;

// Binary-search approximate median over T given alpha/4-accurate responses.
// Stops at a point v with p_leq(v) > 1/2 - alpha/4 and p_lt(v) < 1/2 + alpha/4
// and uses at most 2*ceil(log2(|T|)) oracle calls. If both stopping
// conditions fail at one probe, or the bracket empties, the oracle broke its
// accuracy contract and a ProtocolError is thrown.
double bs_median(const CdfSqOracle& oracle, const FiniteRange& range, double alpha,
                 std::size_t* calls = nullptr);

// CdfSqOracle answering relative to a fixed empirical value multiset with
// centered Gaussian noise of scale sigma added to each answer. Calls are
// counted so sessions can charge their ledgers.
class NoisySqOracle {
 public:
  NoisySqOracle(EmpiricalDistribution values, double sigma, Rng& rng);

  double answer(double v, CdfSide side);
  std::size_t calls() const { return calls_; }
  CdfSqOracle fn();

 private:
  EmpiricalDistribution values_;
  double sigma_;
  Rng* rng_;
  std::size_t calls_ = 0;
};

// Calibration for the Gaussian-noise binary-search median. The per-query
// budget is split evenly: the 2L = 2*ceil(log2|T|) adaptive answers compose
// like one Gaussian release of l2 sensitivity sqrt(2L)/m, giving
//   sigma = sqrt(2L) * sqrt(2 ln(1.25/delta)) / (epsilon * m)
// per answer. The split is configuration, not a paper constant.
struct SqMedianCalibration {
  std::size_t sq_budget = 0;  // 2 * ceil(log2 |T|)
  double epsilon = 0;         // whole-invocation budget
  double delta = 0;
  double sigma = 0;           // Gaussian scale for means of m values
};

SqMedianCalibration sq_median_calibration(std::size_t m, std::size_t range_size, double epsilon,
                                          double delta);

// Sample bound of the Gaussian-noise median:
//   ceil(12 * sqrt(2L * ln(1/delta) * ln(2L/beta)) / (epsilon*alpha)),
// with L = ceil(log2 |T|).
std::size_t required_m_sq_median(std::size_t range_size, double epsilon, double delta,
                                 double alpha, double beta);

}  // namespace adaptive_median
