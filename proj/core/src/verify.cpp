#include "adaptive_median/verify.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptive_median/errors.hpp"

namespace adaptive_median {

const char* to_string(VerifyAnswer a) {
  switch (a) {
    case VerifyAnswer::yes: return "Y";
    case VerifyAnswer::no: return "N";
    default: return "bot";
  }
}

void VerifyConfig::validate() const {
  if (!(alpha > 0) || !(alpha < rho) || !(rho < 0.25))
    throw ParameterError("VerifyConfig: need 0 < alpha < rho < 1/4");
  if (ell < 1 || max_queries < 1 || block_size < 1)
    throw ParameterError("VerifyConfig: ell, k and t must be >= 1");
  if (!(beta > 0) || !(beta < 1)) throw ParameterError("VerifyConfig: beta must be in (0,1)");
}

SvCalibration sv_calibration(std::size_t ell, double alpha, double beta, std::size_t k,
                             double rho) {
  VerifyConfig probe;
  probe.rho = rho;
  probe.alpha = alpha;
  probe.ell = ell;
  probe.max_queries = k;
  probe.beta = beta;
  probe.validate();

  SvCalibration cal;
  cal.epsilon = 0.5 * std::log1p(alpha / (8.0 * rho));
  cal.delta = alpha * beta / 384.0;
  cal.sv_slack = alpha / 3.0;

  const double kd = static_cast<double>(k);
  const double ld = static_cast<double>(ell);
  cal.m1 = static_cast<std::size_t>(
      std::ceil(96.0 * std::log(16.0 * kd / beta) / (cal.epsilon * alpha)));

  cal.epsilon_epoch = max_per_query_epsilon(ell, cal.epsilon, cal.delta);

  const double m0_query =
      16.0 * std::log(8.0 * kd / beta) / (cal.sv_slack * cal.epsilon_epoch);
  const double m0_threshold =
      8.0 * std::log(8.0 * (ld + 1.0) / beta) / (cal.sv_slack * cal.epsilon_epoch);
  cal.m0 = static_cast<std::size_t>(std::ceil(std::max(m0_query, m0_threshold)));

  cal.m = std::max(cal.m0, cal.m1);
  return cal;
}

std::size_t required_m_sv(std::size_t ell, double alpha, double beta, std::size_t k, double rho) {
  return sv_calibration(ell, alpha, beta, k, rho).m;
}

AboveThreshold::AboveThreshold(std::size_t ell, double slack, double epsilon_epoch, std::size_t m,
                               Rng rng, PrivacyLedger* ledger)
    : ell_(ell),
      slack_(slack),
      epsilon_epoch_(epsilon_epoch),
      threshold_scale_(2.0 / (epsilon_epoch * static_cast<double>(m))),
      query_scale_(4.0 / (epsilon_epoch * static_cast<double>(m))),
      rng_(rng),
      ledger_(ledger) {
  if (ell < 1) throw ParameterError("AboveThreshold: ell must be >= 1");
  if (!(slack > 0)) throw ParameterError("AboveThreshold: slack must be > 0");
  if (!(epsilon_epoch > 0) || m == 0)
    throw ParameterError("AboveThreshold: need epsilon_epoch > 0 and m >= 1");
}

VerifyAnswer AboveThreshold::answer(double empirical_mean, double threshold) {
  if (halted_) return VerifyAnswer::bottom;
  if (!epoch_active_) {
    if (ledger_ && !ledger_->try_charge({epsilon_epoch_, 0.0})) {
      halted_ = true;
      return VerifyAnswer::bottom;
    }
    noisy_shift_ = rng_.laplace(threshold_scale_);
    epoch_active_ = true;
    ++epochs_;
  }
  const double nu = rng_.laplace(query_scale_);
  if (empirical_mean + nu >= threshold - slack_ / 2.0 + noisy_shift_) return VerifyAnswer::yes;
  ++no_count_;
  epoch_active_ = false;
  if (no_count_ == ell_) halted_ = true;
  return VerifyAnswer::no;
}

VerifyAnswer above_threshold_answer(AboveThreshold& state,
                                    const std::function<double(std::span<const Sample>)>& psi,
                                    double u, const BlockedDataset& values) {
  if (state.halted()) return VerifyAnswer::bottom;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.block_count(); ++i) {
    const double y = psi(values.block(i));
    if (!(y >= 0.0) || !(y <= 1.0))
      throw DataError("above_threshold_answer: psi must map blocks to [0,1]");
    sum += y;
  }
  return state.answer(sum / static_cast<double>(values.block_count()), u);
}

VerifyAnswer sv_verify(AboveThreshold& state, const EmpiricalDistribution& phi_values, double v,
                       double rho, double alpha) {
  if (state.halted()) return VerifyAnswer::bottom;
  const double u = rho - alpha / 3.0;

  // psi_low = 1(phi(z) <= v): mass at or below the guess.
  const VerifyAnswer low = state.answer(phi_values.cdf_leq(v), u);
  if (low != VerifyAnswer::yes) return low;

  // psi_high = 1(phi(z) >= v): mass at or above the guess.
  const VerifyAnswer high = state.answer(1.0 - phi_values.cdf_lt(v), u);
  return high;
}

namespace {

BlockedDataset make_verify_dataset(std::vector<Sample> samples, const VerifyConfig& config,
                                   const SvCalibration& calibration) {
  const std::size_t required = calibration.m * config.block_size;
  if (samples.size() < required)
    throw InsufficientDataError("VerifySession: need n >= " + std::to_string(required) +
                                    " samples (" + std::to_string(samples.size()) + " given)",
                                required);
  return BlockedDataset(std::move(samples), config.block_size);
}

VerifyConfig validated(VerifyConfig config) {
  config.validate();
  return config;
}

}  // namespace

VerifySession::VerifySession(std::vector<Sample> samples, const VerifyConfig& config)
    : config_(validated(config)),
      calibration_(sv_calibration(config_.ell, config_.alpha, config_.beta, config_.max_queries,
                                  config_.rho)),
      data_(make_verify_dataset(std::move(samples), config_, calibration_)),
      ledger_(calibration_.delta),
      state_(config_.ell, calibration_.sv_slack, calibration_.epsilon_epoch, data_.block_count(),
             Rng::derive(config_.seed, 0), &ledger_) {}

VerifyAnswer VerifySession::verify(const EstimatorQuery& phi, double v) {
  if (phi.block_size() != config_.block_size)
    throw ParameterError("VerifySession: query block size does not match the session");
  if (asked_ >= config_.max_queries) return VerifyAnswer::bottom;

  VerifyAnswer answer = VerifyAnswer::bottom;
  if (!state_.halted()) {
    std::vector<double> values(data_.block_count());
    for (std::size_t i = 0; i < data_.block_count(); ++i)
      values[i] = phi.evaluate(data_.block(i));
    answer = sv_verify(state_, EmpiricalDistribution(std::move(values)), v, config_.rho,
                       config_.alpha);
  }
  transcript_.push_back({asked_, phi.descriptor(), v, answer});
  ++asked_;
  return answer;
}

std::string VerifySession::transcript_jsonl() const {
  nlohmann::json h;
  h["type"] = "header";
  h["schema_version"] = 1;
  h["kind"] = "verify";
  h["rho"] = config_.rho;
  h["alpha"] = config_.alpha;
  h["ell"] = config_.ell;
  h["k"] = config_.max_queries;
  h["beta"] = config_.beta;
  h["t"] = config_.block_size;
  h["seed"] = config_.seed;
  h["m"] = data_.block_count();

  std::string out = h.dump();
  out.push_back('\n');
  for (const VerifyTranscriptEntry& e : transcript_) {
    nlohmann::json j;
    j["type"] = "entry";
    j["index"] = e.index;
    j["query"] = e.query_descriptor;
    j["guess"] = e.guess;
    j["answer"] = to_string(e.answer);
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace adaptive_median
