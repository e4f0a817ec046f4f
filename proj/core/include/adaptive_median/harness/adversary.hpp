#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptive_median/harness/oracle.hpp"

namespace adaptive_median::harness {

// A stateful analyst policy: maps the answer history to the next query.
// Implementations must respect the session's t, r and k limits.
class AdversaryStrategy {
 public:
  virtual ~AdversaryStrategy() = default;

  virtual std::size_t planned_queries() const = 0;

  // answers[i] is the mechanism's answer to query i (nullopt = bottom).
  virtual QueryDescriptor next(std::size_t index,
                               std::span<const std::optional<double>> answers) = 0;
};

// The classic adaptive sign-selection attack: probe the empirical mean of
// each feature, then ask for the mean of the feature combination re-signed
// toward the answers. Against a mechanism that leaks empirical means this
// drives the final answer off the truth (zero) by about sqrt(2(k-1)/(pi n))
// while the final query's own distribution stays centered.
class OverfitBoostAdversary : public AdversaryStrategy {
 public:
  OverfitBoostAdversary(std::size_t features, std::size_t queries);

  std::size_t planned_queries() const override { return queries_; }
  QueryDescriptor next(std::size_t index,
                       std::span<const std::optional<double>> answers) override;

 private:
  std::size_t features_;
  std::size_t queries_;
};

// Non-adaptive batch repeating one descriptor. Useful as a null adversary
// and for distribution-level accuracy runs.
class FixedBatchAdversary : public AdversaryStrategy {
 public:
  FixedBatchAdversary(QueryDescriptor query, std::size_t queries);

  std::size_t planned_queries() const override { return queries_; }
  QueryDescriptor next(std::size_t index,
                       std::span<const std::optional<double>> answers) override;

 private:
  QueryDescriptor query_;
  std::size_t queries_;
};

// Builds a strategy from its JSON form, e.g. {"type":"overfit_boost"} or
// {"type":"fixed_batch","query":{...}}. `queries` and `features` come from
// the experiment configuration.
std::unique_ptr<AdversaryStrategy> make_adversary(const std::string& json_text,
                                                  std::size_t queries, std::size_t features);

}  // namespace adaptive_median::harness
