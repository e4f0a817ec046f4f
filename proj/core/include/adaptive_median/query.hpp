#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>

#include "adaptive_median/dataset.hpp"
#include "adaptive_median/finite_range.hpp"

namespace adaptive_median {

// An estimator query: a deterministic map from a block of t samples to a
// member of a finite range T. The raw evaluator may return any finite real;
// the result is projected to the nearest grid value (ties to the smaller),
// so the declared-range invariant holds by construction.
class EstimatorQuery {
 public:
  using Eval = std::function<double(std::span<const Sample>)>;

  EstimatorQuery(std::size_t block_size, FiniteRange range, Eval eval,
                 std::string descriptor = {})
      : block_size_(block_size),
        range_(std::move(range)),
        eval_(std::move(eval)),
        descriptor_(std::move(descriptor)) {}

  std::size_t block_size() const { return block_size_; }
  const FiniteRange& range() const { return range_; }

  // Serialized form recorded in transcripts so sessions can be replayed.
  const std::string& descriptor() const { return descriptor_; }

  double evaluate(std::span<const Sample> block) const {
    return range_.project(eval_(block));
  }
  std::size_t evaluate_index(std::span<const Sample> block) const {
    return range_.project_index(eval_(block));
  }

 private:
  std::size_t block_size_;
  FiniteRange range_;
  Eval eval_;
  std::string descriptor_;
};

}  // namespace adaptive_median
