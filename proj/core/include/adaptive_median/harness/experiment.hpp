#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptive_median/engine.hpp"
#include "adaptive_median/harness/oracle.hpp"
#include "adaptive_median/verify.hpp"

namespace adaptive_median::harness {

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  double step = 0.1;

  FiniteRange make() const { return FiniteRange::grid(lo, hi, step); }
};

// One pass/fail check evaluated on the aggregated report. The threshold is
// either a literal value or the formula "beta_plus_3se" resolved at run time
// as beta + 3*sqrt(beta*(1-beta)/trials).
struct AssertionSpec {
  std::string name;
  std::string metric;
  std::string op;  // "le" or "ge"
  double value = 0.0;
  bool beta_plus_3se = false;
};

struct VerifyProbeSpec {
  double rho = 0.1;
  double alpha = 0.05;
  std::size_t ell = 1;
  std::vector<double> guesses;  // proposed answers, cycled across the k queries
};

// A fully seeded experiment: distribution, adversary, mechanism, session
// configuration, trial count and assertions.
struct ExperimentSpec {
  std::size_t schema_version = 1;
  std::string name;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::size_t workers = 0;  // 0 = hardware concurrency

  DistributionDescriptor data;
  std::size_t n = 0;  // raw samples per trial; 0 derives it from calibration (engine only)

  // Session parameters shared by all mechanisms.
  std::size_t block_size = 1;   // t
  std::size_t max_queries = 1;  // k
  double beta = 0.05;
  GridSpec grid;
  SessionVariant variant = SessionVariant::iqr_median;
  std::optional<AggressiveBudget> aggressive;

  std::string mechanism;  // engine | naive_empirical | data_splitting | gaussian_noise | verify
  double mechanism_sigma = 0.0;

  std::string adversary_json;  // answer-mechanism experiments
  std::optional<VerifyProbeSpec> verify_probe;  // verify experiments

  std::vector<AssertionSpec> assertions;

  // Parses and structurally validates a spec document; DataError carries the
  // violated constraint.
  static ExperimentSpec from_json(const std::string& text);
  std::string to_json() const;
};

struct TrialRecord {
  std::size_t index = 0;
  std::size_t answered = 0;
  bool any_violation = false;
  bool final_bias_3se = false;
  bool all_far_correct = true;
  double max_abs_deviation = 0.0;
  bool bottom = false;
};

struct AssertionResult {
  std::string name;
  std::string metric;
  std::string op;
  double threshold = 0.0;
  double observed = 0.0;
  bool pass = false;
};

struct ExperimentReport {
  std::string name;
  std::string mechanism;
  std::string profile;
  std::size_t trials = 0;
  std::uint64_t seed = 0;

  std::size_t violation_trials = 0;
  double violation_rate = 0.0;
  std::pair<double, double> violation_cp99{0.0, 0.0};
  std::size_t final_bias_trials = 0;
  double final_bias_rate = 0.0;
  std::size_t far_correct_trials = 0;
  double far_correct_rate = 0.0;
  std::size_t bottom_trials = 0;
  bool guarantee_void = false;

  std::vector<AssertionResult> assertions;
  std::vector<TrialRecord> records;

  bool all_assertions_pass() const;
  double metric(const std::string& name) const;

  std::string to_json(const std::string& spec_echo) const;
  std::string to_csv() const;
};

// Worker pool over [0, count): each index runs exactly once; results must be
// written to index-addressed slots so aggregation stays deterministic.
// workers = 0 uses hardware concurrency.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

// Runs every trial (seeded, order-independent across the worker pool) and
// aggregates by trial index. A positive workers_override wins over the spec.
ExperimentReport run_experiment(const ExperimentSpec& spec, std::size_t workers_override = 0);

// Re-runs a single trial and returns the engine transcript (engine
// experiments only; nullopt otherwise).
std::optional<Transcript> run_trial_transcript(const ExperimentSpec& spec,
                                               std::size_t trial_index);

// Replays a transcript: rebuilds the dataset and queries from the recorded
// descriptors, re-answers under the recorded (or overridden) seed, and
// returns the per-entry mismatches. Both the answer and the per-query seed
// stamp are compared, so divergent randomness surfaces even when a coarse
// grid makes the answers collide.
struct ReplayDiff {
  std::size_t entry = 0;
  double recorded = 0.0;
  double recomputed = 0.0;
  bool stamp_mismatch = false;
};

std::vector<ReplayDiff> replay_transcript(const Transcript& transcript,
                                          std::optional<std::uint64_t> seed_override,
                                          std::optional<std::vector<Sample>> samples_override);

}  // namespace adaptive_median::harness
