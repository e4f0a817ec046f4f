#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adaptive_median/finite_range.hpp"

namespace adaptive_median {

// Multiset of real values, stored as sorted distinct atoms with counts.
// Both cdf_leq and cdf_lt are exposed so that the strict/non-strict quantile
// inequalities are always spelled out at the call site.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> values);

  // Multiset given directly as sorted distinct atoms with positive counts.
  static EmpiricalDistribution from_atoms(std::vector<double> atoms,
                                          std::vector<std::uint64_t> counts);

  // Multiset of grid values given as a per-grid-index histogram.
  static EmpiricalDistribution from_histogram(const FiniteRange& range,
                                              std::span<const std::uint64_t> counts);

  std::uint64_t size() const { return total_; }  // m
  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::uint64_t count_lt(double v) const;
  std::uint64_t count_leq(double v) const;
  std::uint64_t count_gt(double v) const { return total_ - count_leq(v); }

  double cdf_leq(double v) const;
  double cdf_lt(double v) const;

  double mean() const;
  double sd() const;
  double mad() const;  // mean absolute deviation around the mean

 private:
  EmpiricalDistribution() = default;

  std::vector<double> atoms_;          // sorted, distinct
  std::vector<std::uint64_t> counts_;  // positive
  std::vector<std::uint64_t> prefix_;  // prefix_[i] = count of values < atoms_[i]
  std::uint64_t total_ = 0;

  void build_prefix();
};

// Exact discrete distribution: sorted distinct atoms with probabilities
// summing to 1 (validated to 1e-9, then normalized exactly).
class DiscreteDistribution {
 public:
  DiscreteDistribution(std::vector<double> atoms, std::vector<double> probs);

  std::size_t size() const { return atoms_.size(); }
  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }

  double cdf_leq(double v) const;
  double cdf_lt(double v) const;

  double mean() const;
  double sd() const;
  double mad() const;

 private:
  std::vector<double> atoms_;
  std::vector<double> probs_;
  std::vector<double> prefix_;  // prefix_[i] = mass strictly below atoms_[i]
};

// The (a,b)-quantile interval {v : P[Y <= v] > a  and  P[Y < v] < b}.
// `members` lists the support atoms in the interval; membership of arbitrary
// reals is tested with in_quantile_interval.
struct QuantileInterval {
  double lo_quantile = 0.0;
  double hi_quantile = 1.0;
  std::vector<double> members;

  bool empty() const { return members.empty(); }
};

QuantileInterval quantile_interval(const EmpiricalDistribution& dist, double a, double b);
QuantileInterval quantile_interval(const DiscreteDistribution& dist, double a, double b);

// Strict-inequality membership test for any real v (not only support atoms).
bool in_quantile_interval(const EmpiricalDistribution& dist, double v, double a, double b);
bool in_quantile_interval(const DiscreteDistribution& dist, double v, double a, double b);

}  // namespace adaptive_median
