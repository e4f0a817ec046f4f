#include "adaptive_median/dp_median.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adaptive_median/accountant.hpp"
#include "adaptive_median/errors.hpp"

namespace adaptive_median {

namespace {

constexpr std::size_t kExactOracleRangeCap = 100000;

std::size_t log2_ceil(std::size_t n) {
  std::size_t bits = 0;
  std::size_t pow = 1;
  while (pow < n) {
    pow <<= 1;
    ++bits;
  }
  return bits;
}

}  // namespace

void MedianParams::validate() const {
  if (!(epsilon > 0)) throw ParameterError("MedianParams: epsilon must be > 0");
  if (!(alpha > 0) || !(alpha <= 1)) throw ParameterError("MedianParams: alpha must be in (0,1]");
  if (!(beta > 0) || !(beta < 1)) throw ParameterError("MedianParams: beta must be in (0,1)");
}

std::uint64_t utility(const EmpiricalDistribution& values, double v) {
  return std::max(values.count_lt(v), values.count_gt(v));
}

UtilityProfile::UtilityProfile(const EmpiricalDistribution& values, const FiniteRange& range) {
  const std::uint64_t m = values.size();
  const std::size_t r = range.size();
  const auto& atoms = values.atoms();
  const auto& counts = values.counts();

  min_utility_ = m;
  std::uint64_t below = 0;
  std::size_t cursor = 0;  // first grid index not yet assigned to a run

  auto emit = [&](std::size_t first, std::size_t last_excl, std::uint64_t cost) {
    if (first >= last_excl) return;
    runs_.push_back({first, last_excl - 1, cost});
    min_utility_ = std::min(min_utility_, cost);
  };

  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const std::size_t at_lt = range.count_lt(atoms[j]);
    const std::size_t at_leq = range.count_leq(atoms[j]);
    // Grid values strictly between the previous atom and this one.
    emit(cursor, at_lt, std::max(below, m - below));
    // Grid value equal to this atom, if it is on the grid.
    emit(at_lt, at_leq, std::max(below, m - below - counts[j]));
    below += counts[j];
    cursor = std::max(cursor, at_leq);
  }
  emit(cursor, r, std::max(below, m - below));  // grid values above the top atom
}

std::vector<double> em_exact_distribution(const EmpiricalDistribution& values,
                                          const FiniteRange& range, double epsilon) {
  if (!(epsilon > 0)) throw ParameterError("em_exact_distribution: epsilon must be > 0");
  if (range.size() > kExactOracleRangeCap)
    throw ScaleError("em_exact_distribution: |T| exceeds the exact-oracle cap of 1e5");

  const UtilityProfile profile(values, range);
  std::vector<double> probs(range.size(), 0.0);
  double total = 0.0;
  for (const UtilityRun& run : profile.runs()) {
    const double w =
        std::exp(-0.5 * epsilon * static_cast<double>(run.cost - profile.min_utility()));
    for (std::size_t i = run.first; i <= run.last; ++i) probs[i] = w;
    total += w * static_cast<double>(run.width());
  }
  for (double& p : probs) p /= total;
  return probs;
}

double em_median(const EmpiricalDistribution& values, const FiniteRange& range, double epsilon,
                 Rng& rng) {
  if (!(epsilon > 0)) throw ParameterError("em_median: epsilon must be > 0");

  const UtilityProfile profile(values, range);
  const auto& runs = profile.runs();

  double total = 0.0;
  for (const UtilityRun& run : runs)
    total += static_cast<double>(run.width()) *
             std::exp(-0.5 * epsilon * static_cast<double>(run.cost - profile.min_utility()));

  // Pick the run proportionally to its probability, then a uniform member.
  double target = rng.uniform() * total;
  for (const UtilityRun& run : runs) {
    const double w =
        static_cast<double>(run.width()) *
        std::exp(-0.5 * epsilon * static_cast<double>(run.cost - profile.min_utility()));
    if (target < w || &run == &runs.back()) {
      const std::size_t offset = static_cast<std::size_t>(rng.uniform_index(run.width()));
      return range.value(run.first + offset);
    }
    target -= w;
  }
  return range.value(range.size() - 1);  // unreachable
}

std::size_t required_m_em(std::size_t range_size, double beta, double epsilon, double alpha) {
  if (range_size == 0) throw ParameterError("required_m_em: empty range");
  if (!(beta > 0) || !(epsilon > 0) || !(alpha > 0))
    throw ParameterError("required_m_em: parameters must be positive");
  const double bound = 4.0 * std::log(static_cast<double>(range_size) / beta) / (epsilon * alpha);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(bound)));
}

double interior_point(const EmpiricalDistribution& values, const FiniteRange& range,
                      double epsilon, Rng& rng) {
  return em_median(values, range, epsilon, rng);
}

double bs_median(const CdfSqOracle& oracle, const FiniteRange& range, double alpha,
                 std::size_t* calls) {
  if (!(alpha > 0) || !(alpha <= 1)) throw ParameterError("bs_median: alpha must be in (0,1]");
  if (calls) *calls = 0;

  std::size_t lo = 0;
  std::size_t hi = range.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double v = range.value(mid);
    const double p_leq = oracle(v, CdfSide::leq);
    double p_lt = oracle(v, CdfSide::lt);
    if (calls) *calls += 2;

    // An alpha/4-accurate pair can disagree by at most alpha/2; beyond that
    // the oracle broke its contract. Within it, clamping restores the
    // consistency p_lt <= p_leq without leaving the accuracy envelope, so at
    // most one stopping condition can fail.
    if (p_lt - p_leq > alpha / 2 + 1e-12)
      throw ProtocolError("bs_median: oracle answers violate p_lt <= p_leq beyond alpha/2");
    p_lt = std::min(p_lt, p_leq);

    const bool leq_ok = p_leq > 0.5 - alpha / 4;
    const bool lt_ok = p_lt < 0.5 + alpha / 4;
    if (leq_ok && lt_ok) return v;
    if (!leq_ok) {
      lo = mid + 1;  // too little mass at or below v: the median is to the right
    } else {
      if (mid == 0) throw ProtocolError("bs_median: search bracket emptied at the low end");
      hi = mid - 1;
    }
  }
  // A single candidate remains. Both bracket edges were established by failed
  // probes (or are grid ends), and the data lives on T, so the edge conditions
  // transfer to this point: it is an alpha-approximate median without another
  // probe. This keeps the call count within 2*ceil(log2(|T|)).
  return range.value(lo);
}

NoisySqOracle::NoisySqOracle(EmpiricalDistribution values, double sigma, Rng& rng)
    : values_(std::move(values)), sigma_(sigma), rng_(&rng) {
  if (!(sigma > 0)) throw ParameterError("NoisySqOracle: sigma must be > 0");
}

double NoisySqOracle::answer(double v, CdfSide side) {
  ++calls_;
  const double exact = side == CdfSide::leq ? values_.cdf_leq(v) : values_.cdf_lt(v);
  return exact + rng_->gaussian(0.0, sigma_);
}

CdfSqOracle NoisySqOracle::fn() {
  return [this](double v, CdfSide side) { return answer(v, side); };
}

SqMedianCalibration sq_median_calibration(std::size_t m, std::size_t range_size, double epsilon,
                                          double delta) {
  if (m == 0) throw ParameterError("sq_median_calibration: m must be >= 1");
  if (!(epsilon > 0) || !(delta > 0) || !(delta < 1))
    throw ParameterError("sq_median_calibration: need epsilon > 0 and delta in (0,1)");

  SqMedianCalibration cal;
  const std::size_t L = log2_ceil(std::max<std::size_t>(range_size, 2));
  cal.sq_budget = 2 * L;
  cal.epsilon = epsilon;
  cal.delta = delta;
  cal.sigma = std::sqrt(static_cast<double>(cal.sq_budget)) *
              std::sqrt(2.0 * std::log(1.25 / delta)) / (epsilon * static_cast<double>(m));
  return cal;
}

std::size_t required_m_sq_median(std::size_t range_size, double epsilon, double delta,
                                 double alpha, double beta) {
  if (!(epsilon > 0) || !(alpha > 0) || !(beta > 0) || !(delta > 0) || !(delta < 1))
    throw ParameterError("required_m_sq_median: invalid parameters");
  const double L = static_cast<double>(log2_ceil(std::max<std::size_t>(range_size, 2)));
  const double bound =
      12.0 * std::sqrt(2.0 * L * std::log(1.0 / delta) * std::log(2.0 * L / beta)) /
      (epsilon * alpha);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(bound)));
}

}  // namespace adaptive_median
