#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adaptive_median {

struct PrivacyCharge {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct ComposedBudget {
  double epsilon_hat = 0.0;
  double delta_hat = 0.0;
};

// Advanced adaptive composition:
//   epsilon_hat = 1/2 * sum eps_j^2 + sqrt(2 ln(1/delta_slack) * sum eps_j^2)
//   delta_hat   = delta_slack + sum delta_j
// delta_slack must lie in (0,1); charges must be finite and nonnegative.
ComposedBudget compose_advanced(std::span<const PrivacyCharge> charges, double delta_slack);

// Largest per-query epsilon whose k-fold advanced composition stays within
// epsilon_target (bisection on the monotone composed bound).
double max_per_query_epsilon(std::size_t k, double epsilon_target, double delta_slack);

// Per-session record of privacy charges with an optional hard budget.
// Owned by exactly one session; composed snapshots are read-only.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(double delta_slack,
                         std::optional<PrivacyCharge> target = std::nullopt);

  // Appends the charge if the recomposed budget stays within the target;
  // otherwise refuses and leaves the ledger unchanged.
  bool try_charge(PrivacyCharge charge);

  ComposedBudget composed() const;
  const std::vector<PrivacyCharge>& charges() const { return charges_; }
  double delta_slack() const { return delta_slack_; }
  const std::optional<PrivacyCharge>& target() const { return target_; }

  // {"charges": [...], "epsilon_hat": ..., "delta_hat": ..., "profile": ...}
  std::string to_json(const std::string& profile) const;

 private:
  double delta_slack_;
  std::optional<PrivacyCharge> target_;
  std::vector<PrivacyCharge> charges_;
  double sum_eps_sq_ = 0.0;
  double sum_delta_ = 0.0;
};

// Session calibration constants. The paper-faithful profile uses the
// conservative constants verbatim; an aggressive profile may override them
// for experimentation, and reports always state which profile ran.
struct CalibrationConstants {
  double m_factor = 640.0;        // m = m_factor * sqrt(max(k,16) ln(delta_div/beta)) ln(kr/beta)
  double m_floor_factor = 2560.0; // m >= m_floor_factor * ln(2k/beta)
  double epsilon_numerator = 16.0;  // epsilon_tilde = epsilon_numerator * ln(kr/beta) / m
  double delta_divisor = 256.0;     // delta_slack = beta / delta_divisor
  double epsilon_cap = 0.05;        // composed budget must stay within 1/20

  static CalibrationConstants paper_faithful() { return {}; }
};

struct SessionCalibration {
  std::size_t m = 0;
  double epsilon_tilde = 0.0;
  double delta_slack = 0.0;
  ComposedBudget composed;        // k-fold composition self-check
  bool meets_dp_premise = false;  // composed.epsilon_hat <= epsilon_cap and m floor holds
};

// Per-query budget for a session of k queries with ranges of size at most r
// and failure probability beta. The composed-budget self-check is evaluated
// numerically on every call rather than trusted symbolically; with the
// paper-faithful constants a failed check is a logic error and throws.
SessionCalibration calibrate_session(std::size_t k, std::size_t r, double beta,
                                     const CalibrationConstants& constants =
                                         CalibrationConstants::paper_faithful());

// Calibration for the interior-point session variant: per-query failure
// beta/(2k) at alpha = 1, with delta and m solved jointly (delta depends on m,
// so the pair is iterated to a fixed point).
struct InteriorCalibration {
  std::size_t m = 0;
  double epsilon_tilde = 0.0;
  double delta = 0.0;  // beta / (10 k m)
};

InteriorCalibration calibrate_interior_session(std::size_t k, std::size_t r, double beta);

}  // namespace adaptive_median
