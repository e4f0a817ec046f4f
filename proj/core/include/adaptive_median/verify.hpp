#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "adaptive_median/accountant.hpp"
#include "adaptive_median/dataset.hpp"
#include "adaptive_median/distribution.hpp"
#include "adaptive_median/query.hpp"
#include "adaptive_median/rng.hpp"

namespace adaptive_median {

enum class VerifyAnswer { yes, no, bottom };

const char* to_string(VerifyAnswer a);

// Verification-session parameters: a guess v for query phi should be
// accepted when v lies in iqr(phi(P^t); rho, 1-rho) and rejected when it
// falls outside iqr(phi(P^t); rho-alpha, 1-rho+alpha). After ell rejections
// the session only answers bottom.
struct VerifyConfig {
  double rho = 0.1;
  double alpha = 0.05;
  std::size_t ell = 1;
  std::size_t max_queries = 1;  // k
  double beta = 0.05;
  std::size_t block_size = 1;  // t
  std::uint64_t seed = 0;

  void validate() const;
};

// Explicit constants behind the O(.) sample bound, derived as follows:
//   epsilon = (1/2) ln(1 + alpha/(8 rho)), delta = alpha*beta/384
//   m1 = ceil(96 ln(16k/beta) / (epsilon*alpha))            [generalization]
//   epsilon_epoch: largest per-epoch budget whose ell-fold advanced
//       composition stays within epsilon (bisection)
//   m0: smallest m making all <= 2k query-noise and <= ell+1 threshold-noise
//       draws stay within slack/4 jointly w.p. >= 1 - 3 beta/8,
//       with slack = alpha/3, threshold noise Lap(2/(epsilon_epoch m)) and
//       query noise Lap(4/(epsilon_epoch m))
//   m = max(m0, m1)
struct SvCalibration {
  std::size_t m = 0;
  std::size_t m0 = 0;
  std::size_t m1 = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double epsilon_epoch = 0.0;
  double sv_slack = 0.0;  // alpha/3
};

SvCalibration sv_calibration(std::size_t ell, double alpha, double beta, std::size_t k,
                             double rho);
std::size_t required_m_sv(std::size_t ell, double alpha, double beta, std::size_t k, double rho);

// The sparse-vector primitive. One "epoch" is a run against a fixed noisy
// threshold; a No answer consumes one unit of the ell budget and starts a new
// epoch. Privacy is charged per epoch, so ledger growth is O(ell) even over
// k >> ell queries.
//
// The comparison uses the shifted threshold u - slack/2 so the one-sided
// contract holds: s > u  =>  Yes, and s <= u - slack  =>  No, each up to the
// noise tails the calibration keeps below beta.
class AboveThreshold {
 public:
  AboveThreshold(std::size_t ell, double slack, double epsilon_epoch, std::size_t m, Rng rng,
                 PrivacyLedger* ledger = nullptr);

  VerifyAnswer answer(double empirical_mean, double threshold);

  bool halted() const { return halted_; }
  std::size_t no_count() const { return no_count_; }
  std::size_t epochs_started() const { return epochs_; }

 private:
  std::size_t ell_;
  double slack_;
  double epsilon_epoch_;
  double threshold_scale_;  // 2 / (epsilon_epoch * m)
  double query_scale_;      // 4 / (epsilon_epoch * m)
  Rng rng_;
  PrivacyLedger* ledger_;
  double noisy_shift_ = 0.0;  // current epoch's threshold noise
  bool epoch_active_ = false;
  std::size_t no_count_ = 0;
  std::size_t epochs_ = 0;
  bool halted_ = false;
};

// Answers one statistical query psi (blocks -> [0,1]) against threshold u.
VerifyAnswer above_threshold_answer(AboveThreshold& state,
                                    const std::function<double(std::span<const Sample>)>& psi,
                                    double u, const BlockedDataset& values);

// The two-statistical-query reduction for one verification query, given the
// multiset of block evaluations of phi. Both tails of the guessed quantile
// position are checked against u = rho - alpha/3; Yes requires both, a No on
// the first tail short-circuits so each verify-level No consumes exactly one
// epoch of the ell budget.
VerifyAnswer sv_verify(AboveThreshold& state, const EmpiricalDistribution& phi_values, double v,
                       double rho, double alpha);

struct VerifyTranscriptEntry {
  std::size_t index = 0;
  std::string query_descriptor;
  double guess = 0.0;
  VerifyAnswer answer = VerifyAnswer::bottom;
};

// Verification session over a blocked dataset.
class VerifySession {
 public:
  VerifySession(std::vector<Sample> samples, const VerifyConfig& config);

  // Evaluates phi on every block and verifies the guess v. Queries are
  // re-evaluated per call; callers that reuse a query cache its values and
  // use sv_verify directly.
  VerifyAnswer verify(const EstimatorQuery& phi, double v);

  bool halted() const { return state_.halted(); }
  std::size_t no_count() const { return state_.no_count(); }
  std::size_t queries_asked() const { return asked_; }
  const SvCalibration& calibration() const { return calibration_; }
  const PrivacyLedger& ledger() const { return ledger_; }
  const VerifyConfig& config() const { return config_; }
  const std::vector<VerifyTranscriptEntry>& transcript() const { return transcript_; }

  // JSON lines matching the engine transcript layout, with answers Y/N/bot.
  std::string transcript_jsonl() const;

 private:
  VerifyConfig config_;
  SvCalibration calibration_;
  BlockedDataset data_;
  PrivacyLedger ledger_;
  AboveThreshold state_;
  std::size_t asked_ = 0;
  std::vector<VerifyTranscriptEntry> transcript_;
};

}  // namespace adaptive_median
