#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace adaptive_median {

// A raw data point. The value is opaque to the mechanisms; each data
// generator fixes its meaning (a 0/1 outcome, an index into a finite
// universe, or a packed vector of binary features).
using Sample = std::uint64_t;

// n raw samples split into m = floor(n/t) disjoint contiguous blocks of
// exactly t samples, in input order. The n mod t trailing samples are
// discarded and the discard count is surfaced for reports.
class BlockedDataset {
 public:
  BlockedDataset(std::vector<Sample> samples, std::size_t block_size);

  std::size_t block_size() const { return block_size_; }      // t
  std::size_t block_count() const { return block_count_; }    // m
  std::size_t discarded() const { return discarded_; }        // n mod t
  std::size_t sample_count() const { return samples_.size(); }

  std::span<const Sample> block(std::size_t i) const;
  const std::vector<Sample>& samples() const { return samples_; }

 private:
  std::vector<Sample> samples_;
  std::size_t block_size_ = 0;
  std::size_t block_count_ = 0;
  std::size_t discarded_ = 0;
};

BlockedDataset block_partition(std::vector<Sample> samples, std::size_t block_size);

}  // namespace adaptive_median
