#include "adaptive_median/accountant.hpp"

#include <cmath>
#include <utility>

#include <nlohmann/json.hpp>

#include "adaptive_median/errors.hpp"

namespace adaptive_median {

namespace {

ComposedBudget compose_from_sums(double sum_eps_sq, double sum_delta, double delta_slack) {
  ComposedBudget out;
  out.epsilon_hat = 0.5 * sum_eps_sq + std::sqrt(2.0 * std::log(1.0 / delta_slack) * sum_eps_sq);
  out.delta_hat = delta_slack + sum_delta;
  return out;
}

void check_delta_slack(double delta_slack) {
  if (!(delta_slack > 0) || !(delta_slack < 1))
    throw ParameterError("compose_advanced: delta_slack must be in (0,1)");
}

}  // namespace

ComposedBudget compose_advanced(std::span<const PrivacyCharge> charges, double delta_slack) {
  check_delta_slack(delta_slack);
  double sum_eps_sq = 0.0;
  double sum_delta = 0.0;
  for (const PrivacyCharge& c : charges) {
    if (!(c.epsilon >= 0) || !std::isfinite(c.epsilon) || !(c.delta >= 0) ||
        !std::isfinite(c.delta))
      throw ParameterError("compose_advanced: charges must be finite and nonnegative");
    sum_eps_sq += c.epsilon * c.epsilon;
    sum_delta += c.delta;
  }
  return compose_from_sums(sum_eps_sq, sum_delta, delta_slack);
}

double max_per_query_epsilon(std::size_t k, double epsilon_target, double delta_slack) {
  check_delta_slack(delta_slack);
  if (k == 0) throw ParameterError("max_per_query_epsilon: k must be >= 1");
  if (!(epsilon_target > 0)) throw ParameterError("max_per_query_epsilon: target must be > 0");

  const double kd = static_cast<double>(k);
  auto composed = [&](double e) {
    return 0.5 * kd * e * e + e * std::sqrt(2.0 * kd * std::log(1.0 / delta_slack));
  };
  double lo = 0.0;
  double hi = 1.0;
  while (composed(hi) < epsilon_target) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (composed(mid) <= epsilon_target ? lo : hi) = mid;
  }
  // Shaved so that re-composing k charges stays within the target even when
  // the summation order differs from the bound evaluated here.
  return lo * (1.0 - 1e-9);
}

PrivacyLedger::PrivacyLedger(double delta_slack, std::optional<PrivacyCharge> target)
    : delta_slack_(delta_slack), target_(std::move(target)) {
  check_delta_slack(delta_slack_);
}

bool PrivacyLedger::try_charge(PrivacyCharge charge) {
  if (!(charge.epsilon >= 0) || !(charge.delta >= 0) || !std::isfinite(charge.epsilon) ||
      !std::isfinite(charge.delta))
    throw ParameterError("PrivacyLedger: charges must be finite and nonnegative");
  if (target_) {
    const ComposedBudget next =
        compose_from_sums(sum_eps_sq_ + charge.epsilon * charge.epsilon,
                          sum_delta_ + charge.delta, delta_slack_);
    if (next.epsilon_hat > target_->epsilon || next.delta_hat > target_->delta) return false;
  }
  charges_.push_back(charge);
  sum_eps_sq_ += charge.epsilon * charge.epsilon;
  sum_delta_ += charge.delta;
  return true;
}

ComposedBudget PrivacyLedger::composed() const {
  return compose_from_sums(sum_eps_sq_, sum_delta_, delta_slack_);
}

std::string PrivacyLedger::to_json(const std::string& profile) const {
  nlohmann::json j;
  j["charges"] = nlohmann::json::array();
  for (const PrivacyCharge& c : charges_)
    j["charges"].push_back({{"epsilon", c.epsilon}, {"delta", c.delta}});
  const ComposedBudget budget = composed();
  j["epsilon_hat"] = budget.epsilon_hat;
  j["delta_hat"] = budget.delta_hat;
  j["delta_slack"] = delta_slack_;
  j["profile"] = profile;
  if (target_) j["target"] = {{"epsilon", target_->epsilon}, {"delta", target_->delta}};
  return j.dump();
}

SessionCalibration calibrate_session(std::size_t k, std::size_t r, double beta,
                                     const CalibrationConstants& constants) {
  if (k < 1 || r < 2) throw ParameterError("calibrate_session: need k >= 1 and r >= 2");
  if (!(beta > 0) || !(beta < 1)) throw ParameterError("calibrate_session: beta must be in (0,1)");

  const double kd = static_cast<double>(k);
  const double log_kr = std::log(kd * static_cast<double>(r) / beta);
  const double log_slack = std::log(constants.delta_divisor / beta);

  const double m_main =
      constants.m_factor * std::sqrt(std::max(kd, 16.0) * log_slack) * log_kr;
  const double m_floor = constants.m_floor_factor * std::log(2.0 * kd / beta);

  SessionCalibration cal;
  cal.m = static_cast<std::size_t>(std::ceil(std::max(m_main, m_floor)));
  cal.epsilon_tilde = constants.epsilon_numerator * log_kr / static_cast<double>(cal.m);
  cal.delta_slack = beta / constants.delta_divisor;

  const std::vector<PrivacyCharge> charges(k, {cal.epsilon_tilde, 0.0});
  cal.composed = compose_advanced(charges, cal.delta_slack);
  cal.meets_dp_premise = cal.composed.epsilon_hat <= constants.epsilon_cap &&
                         static_cast<double>(cal.m) >= 2560.0 * std::log(2.0 * kd / beta);

  const CalibrationConstants paper = CalibrationConstants::paper_faithful();
  const bool is_paper = constants.m_factor == paper.m_factor &&
                        constants.m_floor_factor == paper.m_floor_factor &&
                        constants.epsilon_numerator == paper.epsilon_numerator &&
                        constants.delta_divisor == paper.delta_divisor;
  if (is_paper && !cal.meets_dp_premise)
    throw ProtocolError("calibrate_session: paper-faithful constants failed the 1/20 self-check");
  return cal;
}

InteriorCalibration calibrate_interior_session(std::size_t k, std::size_t r, double beta) {
  if (k < 1 || r < 2) throw ParameterError("calibrate_interior_session: need k >= 1 and r >= 2");
  if (!(beta > 0) || !(beta < 1))
    throw ParameterError("calibrate_interior_session: beta must be in (0,1)");

  const double kd = static_cast<double>(k);
  const double log_range = std::log(2.0 * static_cast<double>(r) / beta);

  // m = 8 ln(2r/beta) sqrt(2k ln(1/delta)) with delta = beta/(10 k m); the
  // dependence of delta on m is logarithmic, so a short fixed-point iteration
  // converges.
  double m = 1000.0;
  for (int i = 0; i < 64; ++i) {
    const double delta = beta / (10.0 * kd * m);
    const double next = std::ceil(8.0 * log_range * std::sqrt(2.0 * kd * std::log(1.0 / delta)));
    if (next == m) break;
    m = next;
  }

  InteriorCalibration cal;
  cal.m = static_cast<std::size_t>(m);
  cal.delta = beta / (10.0 * kd * m);
  // Per-query budget giving each query failure beta/(2k) at alpha = 1.
  cal.epsilon_tilde = 4.0 * std::log(2.0 * kd * static_cast<double>(r) / beta) / m;
  return cal;
}

}  // namespace adaptive_median
