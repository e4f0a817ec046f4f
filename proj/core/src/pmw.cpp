#include "adaptive_median/pmw.hpp"

#include <algorithm>
#include <cmath>

#include "adaptive_median/errors.hpp"

namespace adaptive_median {

UniverseDistribution::UniverseDistribution(std::size_t size)
    : weights_(size, size ? 1.0 / static_cast<double>(size) : 0.0) {
  if (size == 0) throw DataError("UniverseDistribution: empty universe");
  if (size > kUniverseCap) throw ScaleError("UniverseDistribution: universe exceeds 1e6 atoms");
}

UniverseDistribution::UniverseDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw DataError("UniverseDistribution: empty universe");
  if (weights_.size() > kUniverseCap)
    throw ScaleError("UniverseDistribution: universe exceeds 1e6 atoms");
  for (double w : weights_)
    if (!(w >= 0) || !std::isfinite(w)) throw DataError("UniverseDistribution: bad weight");
  normalize();
}

void UniverseDistribution::normalize() {
  double sum = 0.0;
  for (double w : weights_) sum += w;
  if (!(sum > 0)) throw DataError("UniverseDistribution: weights sum to zero");
  for (double& w : weights_) w /= sum;
}

double UniverseDistribution::expectation(const std::function<double(std::size_t)>& f) const {
  double acc = 0.0;
  for (std::size_t z = 0; z < weights_.size(); ++z) acc += weights_[z] * f(z);
  return acc;
}

void UniverseDistribution::reweight(const std::function<double(std::size_t)>& factor) {
  for (std::size_t z = 0; z < weights_.size(); ++z) {
    const double f = factor(z);
    if (!(f >= 0) || !std::isfinite(f)) throw DataError("UniverseDistribution: bad factor");
    weights_[z] *= f;
  }
  normalize();
}

std::size_t UniverseDistribution::sample(Rng& rng) const {
  double target = rng.uniform();
  for (std::size_t z = 0; z < weights_.size(); ++z) {
    if (target < weights_[z]) return z;
    target -= weights_[z];
  }
  return weights_.size() - 1;
}

void PmwConfig::validate() const {
  if (!(alpha > 0) || !(alpha <= 1)) throw ParameterError("PmwConfig: alpha must be in (0,1]");
  if (!(beta > 0) || !(beta < 1)) throw ParameterError("PmwConfig: beta must be in (0,1)");
  if (max_queries < 1) throw ParameterError("PmwConfig: k must be >= 1");
  if (!(threshold_factor > 0) || !(threshold_factor < 1))
    throw ParameterError("PmwConfig: threshold_factor must be in (0,1)");
  if (noise_scale_override < 0) throw ParameterError("PmwConfig: negative noise scale");
}

std::size_t pmw_required_m(std::size_t universe_size, double alpha, double beta, std::size_t k) {
  if (universe_size < 2) throw ParameterError("pmw_required_m: universe must have >= 2 atoms");
  if (!(alpha > 0) || !(alpha <= 1) || !(beta > 0) || !(beta < 1) || k < 1)
    throw ParameterError("pmw_required_m: invalid parameters");
  const double logz = std::log(static_cast<double>(universe_size));
  const double logk = std::log(static_cast<double>(std::max<std::size_t>(k, 2)));
  const double logab = std::log(1.0 / (alpha * beta));
  const double bound = 4.0 * std::sqrt(logz) * logk * std::pow(logab, 1.5) / std::pow(alpha, 3);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(bound)));
}

std::size_t pmw_update_cap(std::size_t universe_size, double alpha) {
  const double a = alpha / 2.0;
  const double logz = std::log(static_cast<double>(std::max<std::size_t>(universe_size, 2)));
  return static_cast<std::size_t>(std::ceil(64.0 * logz / (a * a)));
}

PmwSession::PmwSession(const std::vector<std::size_t>& block_atoms, std::size_t universe_size,
                       const PmwConfig& config)
    : config_(config),
      empirical_(universe_size, 0.0),
      synthetic_(universe_size),
      rng_(Rng::derive(config.seed, 0)),
      accuracy_(config.alpha / 2.0),
      threshold_(config.threshold_factor * config.alpha / 2.0),
      update_cap_(config.update_cap_override > 0 ? config.update_cap_override
                                                 : pmw_update_cap(universe_size, config.alpha)) {
  config_.validate();
  if (block_atoms.empty()) throw DataError("PmwSession: empty dataset");
  for (std::size_t z : block_atoms) {
    if (z >= universe_size) throw DataError("PmwSession: block atom outside the universe");
    empirical_[z] += 1.0;
  }
  for (double& w : empirical_) w /= static_cast<double>(block_atoms.size());

  noise_scale_ = config_.noise_scale_override > 0
                     ? config_.noise_scale_override
                     : accuracy_ /
                           (4.0 * std::log(16.0 *
                                           static_cast<double>(
                                               std::max<std::size_t>(config_.max_queries, 2)) /
                                           config_.beta));
}

double PmwSession::answer_unit_sq(const std::function<double(std::size_t)>& psi_unit) {
  ++sq_calls_;

  double s = 0.0;
  double xv = 0.0;
  for (std::size_t z = 0; z < empirical_.size(); ++z) {
    const double y = psi_unit(z);
    s += empirical_[z] * y;
    xv += synthetic_.weight(z) * y;
  }

  if (!epoch_active_) {
    noisy_threshold_ = threshold_ + rng_.laplace(noise_scale_);
    epoch_active_ = true;
  }
  const double discrepancy = std::abs(s - xv) + rng_.laplace(noise_scale_);
  if (discrepancy < noisy_threshold_) return xv;  // lazy round

  // Update round: answer from the data with noise and tilt the synthetic
  // distribution until its expectation matches that answer.
  if (updates_ >= update_cap_) throw UpdateBudgetError("PmwSession: update cap exhausted");
  ++updates_;
  epoch_active_ = false;

  const double target = std::clamp(s + rng_.laplace(noise_scale_), 0.0, 1.0);

  // x'[psi] is continuous and increasing in the tilt eta; solve by bisection.
  auto tilted_expectation = [&](double eta) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t z = 0; z < empirical_.size(); ++z) {
      const double w = synthetic_.weight(z) * std::exp(eta * psi_unit(z));
      num += w * psi_unit(z);
      den += w;
    }
    return num / den;
  };
  constexpr double kEtaMax = 60.0;
  double lo = -kEtaMax;
  double hi = kEtaMax;
  if (tilted_expectation(lo) > target) {
    hi = lo;
  } else if (tilted_expectation(hi) < target) {
    lo = hi;
  } else {
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      (tilted_expectation(mid) <= target ? lo : hi) = mid;
    }
  }
  const double eta = 0.5 * (lo + hi);
  synthetic_.reweight([&](std::size_t z) { return std::exp(eta * psi_unit(z)); });

  return target;
}

double PmwSession::answer_sq(const std::function<double(std::size_t)>& psi) {
  // Map psi: Z -> [-1,1] onto the unit scale and back.
  auto unit = [&psi](std::size_t z) {
    const double y = psi(z);
    if (!(y >= -1.0) || !(y <= 1.0)) throw DataError("PmwSession: psi must map into [-1,1]");
    return 0.5 * (y + 1.0);
  };
  return 2.0 * answer_unit_sq(unit) - 1.0;
}

double PmwSession::answer_estimator(const std::function<double(std::size_t)>& phi,
                                    const FiniteRange& range) {
  if (config_.alpha > 0.125 + 1e-12)
    throw ParameterError(
        "answer_estimator: session alpha must be <= 1/8 for the binary-search reduction");

  CdfSqOracle oracle = [&](double v, CdfSide side) {
    auto indicator = [&](std::size_t z) {
      const double y = phi(z);
      return (side == CdfSide::leq ? y <= v : y < v) ? 1.0 : 0.0;
    };
    return answer_unit_sq(indicator);
  };
  std::size_t calls = 0;
  const double out = bs_median(oracle, range, 0.5, &calls);
  last_estimator_calls_ = calls;
  return out;
}

}  // namespace adaptive_median
