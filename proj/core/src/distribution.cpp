#include "adaptive_median/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "adaptive_median/errors.hpp"

namespace adaptive_median {

namespace {

void check_quantiles(double a, double b) {
  if (!(a >= 0.0) || !(b <= 1.0) || !(a < b))
    throw ParameterError("quantile_interval: need 0 <= a < b <= 1");
}

template <typename Dist>
QuantileInterval interval_impl(const Dist& dist, double a, double b) {
  check_quantiles(a, b);
  QuantileInterval out;
  out.lo_quantile = a;
  out.hi_quantile = b;
  for (double v : dist.atoms()) {
    if (dist.cdf_leq(v) > a && dist.cdf_lt(v) < b) out.members.push_back(v);
  }
  return out;
}

}  // namespace

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values) {
  if (values.empty()) throw DataError("EmpiricalDistribution: empty value multiset");
  for (double v : values)
    if (std::isnan(v)) throw DataError("EmpiricalDistribution: NaN value");
  std::sort(values.begin(), values.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == 0 || values[i] != atoms_.back()) {
      atoms_.push_back(values[i]);
      counts_.push_back(1);
    } else {
      ++counts_.back();
    }
  }
  total_ = values.size();
  build_prefix();
}

EmpiricalDistribution EmpiricalDistribution::from_atoms(std::vector<double> atoms,
                                                        std::vector<std::uint64_t> counts) {
  if (atoms.empty() || atoms.size() != counts.size())
    throw DataError("EmpiricalDistribution: atoms/counts size mismatch or empty");
  EmpiricalDistribution dist;
  dist.atoms_ = std::move(atoms);
  dist.counts_ = std::move(counts);
  for (std::size_t i = 0; i < dist.atoms_.size(); ++i) {
    if (std::isnan(dist.atoms_[i])) throw DataError("EmpiricalDistribution: NaN atom");
    if (i > 0 && !(dist.atoms_[i - 1] < dist.atoms_[i]))
      throw DataError("EmpiricalDistribution: atoms must be strictly increasing");
    if (dist.counts_[i] == 0) throw DataError("EmpiricalDistribution: zero count");
    dist.total_ += dist.counts_[i];
  }
  dist.build_prefix();
  return dist;
}

EmpiricalDistribution EmpiricalDistribution::from_histogram(
    const FiniteRange& range, std::span<const std::uint64_t> counts) {
  if (counts.size() != range.size())
    throw DataError("EmpiricalDistribution: histogram size must match grid size");
  std::vector<double> atoms;
  std::vector<std::uint64_t> nonzero;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      atoms.push_back(range.value(i));
      nonzero.push_back(counts[i]);
    }
  }
  return from_atoms(std::move(atoms), std::move(nonzero));
}

void EmpiricalDistribution::build_prefix() {
  prefix_.resize(atoms_.size());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    prefix_[i] = acc;
    acc += counts_[i];
  }
}

std::uint64_t EmpiricalDistribution::count_lt(double v) const {
  const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), v);
  if (it == atoms_.end()) return total_;
  const auto i = static_cast<std::size_t>(it - atoms_.begin());
  return prefix_[i];
}

std::uint64_t EmpiricalDistribution::count_leq(double v) const {
  const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), v);
  if (it == atoms_.begin()) return 0;
  const auto i = static_cast<std::size_t>(it - atoms_.begin()) - 1;
  return prefix_[i] + counts_[i];
}

double EmpiricalDistribution::cdf_leq(double v) const {
  return static_cast<double>(count_leq(v)) / static_cast<double>(total_);
}

double EmpiricalDistribution::cdf_lt(double v) const {
  return static_cast<double>(count_lt(v)) / static_cast<double>(total_);
}

double EmpiricalDistribution::mean() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    acc += atoms_[i] * static_cast<double>(counts_[i]);
  return acc / static_cast<double>(total_);
}

double EmpiricalDistribution::sd() const {
  const double mu = mean();
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const double d = atoms_[i] - mu;
    acc += d * d * static_cast<double>(counts_[i]);
  }
  return std::sqrt(acc / static_cast<double>(total_));
}

double EmpiricalDistribution::mad() const {
  const double mu = mean();
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    acc += std::abs(atoms_[i] - mu) * static_cast<double>(counts_[i]);
  return acc / static_cast<double>(total_);
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> atoms, std::vector<double> probs)
    : atoms_(std::move(atoms)), probs_(std::move(probs)) {
  if (atoms_.empty() || atoms_.size() != probs_.size())
    throw DataError("DiscreteDistribution: atoms/probs size mismatch or empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!std::isfinite(atoms_[i])) throw DataError("DiscreteDistribution: non-finite atom");
    if (i > 0 && !(atoms_[i - 1] < atoms_[i]))
      throw DataError("DiscreteDistribution: atoms must be strictly increasing");
    if (!(probs_[i] >= 0.0)) throw DataError("DiscreteDistribution: negative probability");
    sum += probs_[i];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError("DiscreteDistribution: probabilities must sum to 1 within 1e-9");
  for (double& p : probs_) p /= sum;
  prefix_.resize(atoms_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    prefix_[i] = acc;
    acc += probs_[i];
  }
}

double DiscreteDistribution::cdf_leq(double v) const {
  const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), v);
  if (it == atoms_.begin()) return 0.0;
  const auto i = static_cast<std::size_t>(it - atoms_.begin()) - 1;
  return prefix_[i] + probs_[i];
}

double DiscreteDistribution::cdf_lt(double v) const {
  const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), v);
  if (it == atoms_.end()) return 1.0;
  return prefix_[static_cast<std::size_t>(it - atoms_.begin())];
}

double DiscreteDistribution::mean() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) acc += atoms_[i] * probs_[i];
  return acc;
}

double DiscreteDistribution::sd() const {
  const double mu = mean();
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const double d = atoms_[i] - mu;
    acc += d * d * probs_[i];
  }
  return std::sqrt(acc);
}

double DiscreteDistribution::mad() const {
  const double mu = mean();
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) acc += std::abs(atoms_[i] - mu) * probs_[i];
  return acc;
}

QuantileInterval quantile_interval(const EmpiricalDistribution& dist, double a, double b) {
  return interval_impl(dist, a, b);
}

QuantileInterval quantile_interval(const DiscreteDistribution& dist, double a, double b) {
  return interval_impl(dist, a, b);
}

bool in_quantile_interval(const EmpiricalDistribution& dist, double v, double a, double b) {
  check_quantiles(a, b);
  return dist.cdf_leq(v) > a && dist.cdf_lt(v) < b;
}

bool in_quantile_interval(const DiscreteDistribution& dist, double v, double a, double b) {
  check_quantiles(a, b);
  return dist.cdf_leq(v) > a && dist.cdf_lt(v) < b;
}

}  // namespace adaptive_median
