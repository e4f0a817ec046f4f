#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adaptive_median/accountant.hpp"
#include "adaptive_median/dataset.hpp"
#include "adaptive_median/query.hpp"
#include "adaptive_median/rng.hpp"

namespace adaptive_median {

enum class SessionVariant {
  iqr_median,      // 1/4-approximate median per query
  interior_point,  // 1-approximate median per query
};

// Session-level privacy budget chosen by the caller instead of the
// paper-faithful closed-form constants. The per-query budget is derived by
// inverting advanced composition via bisection.
struct AggressiveBudget {
  double epsilon_star = 0.0;
  double delta_star = 0.0;
};

struct SessionConfig {
  std::size_t block_size = 1;     // t
  std::size_t max_queries = 1;    // k
  std::size_t max_range_size = 2; // r; larger per-query ranges are rejected
  double beta = 0.05;
  SessionVariant variant = SessionVariant::iqr_median;
  std::optional<AggressiveBudget> aggressive;  // empty = paper-faithful profile
  std::uint64_t seed = 0;

  void validate() const;
  bool paper_profile() const { return !aggressive.has_value(); }
};

struct TranscriptEntry {
  std::size_t index = 0;
  std::string query_descriptor;
  double range_lo = 0.0;
  double range_hi = 0.0;
  std::size_t range_size = 0;
  double answer = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed_stamp = 0;
};

// Ordered record of one interactive session, replayable under the same seed.
// Serializes to JSON lines: one header line, then one line per answer.
class Transcript {
 public:
  struct Header {
    std::size_t schema_version = 1;
    SessionConfig config;
    std::string dataset_descriptor;
    std::size_t block_count = 0;
    std::size_t discarded = 0;
    double epsilon_tilde = 0.0;
    bool guarantee_void = false;
  };

  Header header;
  std::vector<TranscriptEntry> entries;

  std::string to_jsonl() const;
  static Transcript from_jsonl(const std::string& text);
};

// The interactive query-answering session: the dataset is partitioned once,
// each query is answered by a private approximate median of its block
// evaluations, and every answer charges (epsilon_tilde, 0) to the ledger.
class Session {
 public:
  // Throws InsufficientDataError (reporting the required sample count) when
  // the dataset cannot support the calibrated number of blocks.
  static Session open(std::vector<Sample> samples, const SessionConfig& config,
                      std::string dataset_descriptor = {});

  // Answers one estimator query, or returns nullopt (bottom) once the query
  // budget or privacy budget is exhausted. Oversized ranges and mismatched
  // block sizes are rejected with ParameterError without charging.
  std::optional<double> answer(const EstimatorQuery& query);

  // Wraps an unbounded-range estimator as a query over the interval [-5,5]
  // discretized with step zeta, then answers it. For estimators normalized so
  // the block-distribution mean lies in [-1,1] with MAD at most 1, the answer
  // deviates from that mean by at most 4*MAD + zeta (jointly w.p. >= 1-beta).
  std::optional<double> answer_mad(const std::function<double(std::span<const Sample>)>& raw_eval,
                                   double zeta, std::string descriptor = {});

  // Quantile level rho = beta*t/(4*k*n) guaranteed by the interior-point
  // variant; n counts the samples actually used (m*t).
  double interior_point_rho() const;

  const SessionConfig& config() const { return config_; }
  double epsilon_tilde() const { return epsilon_tilde_; }
  std::size_t block_count() const { return data_.block_count(); }
  std::size_t queries_answered() const { return answered_; }
  bool refusing() const { return refusing_ || answered_ >= config_.max_queries; }
  bool guarantee_void() const { return transcript_.header.guarantee_void; }
  const PrivacyLedger& ledger() const { return ledger_; }
  const Transcript& transcript() const { return transcript_; }

  // Required sample count n0 = m*t for the configured calibration.
  static std::size_t required_samples(const SessionConfig& config);

 private:
  Session(BlockedDataset data, const SessionConfig& config, double epsilon_tilde,
          PrivacyLedger ledger, Transcript::Header header);

  BlockedDataset data_;
  SessionConfig config_;
  double epsilon_tilde_;
  PrivacyLedger ledger_;
  Transcript transcript_;
  std::size_t answered_ = 0;
  bool refusing_ = false;
  // The protocol is turn-based; concurrent answer calls are serialized.
  std::unique_ptr<std::mutex> turn_ = std::make_unique<std::mutex>();
};

}  // namespace adaptive_median
