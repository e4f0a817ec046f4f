#include "adaptive_median/dataset.hpp"

#include <string>
#include <utility>

#include "adaptive_median/errors.hpp"

namespace adaptive_median {

BlockedDataset::BlockedDataset(std::vector<Sample> samples, std::size_t block_size)
    : samples_(std::move(samples)), block_size_(block_size) {
  if (block_size_ == 0) throw ParameterError("BlockedDataset: block size must be >= 1");
  if (samples_.size() < block_size_)
    throw InsufficientDataError(
        "BlockedDataset: need at least one full block (" + std::to_string(block_size_) +
            " samples), got " + std::to_string(samples_.size()),
        block_size_);
  block_count_ = samples_.size() / block_size_;
  discarded_ = samples_.size() % block_size_;
}

std::span<const Sample> BlockedDataset::block(std::size_t i) const {
  return {samples_.data() + i * block_size_, block_size_};
}

BlockedDataset block_partition(std::vector<Sample> samples, std::size_t block_size) {
  return BlockedDataset(std::move(samples), block_size);
}

}  // namespace adaptive_median
