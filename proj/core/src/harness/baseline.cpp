#include "adaptive_median/harness/baseline.hpp"

#include "adaptive_median/errors.hpp"

namespace adaptive_median::harness {

double NaiveEmpiricalMechanism::empirical_mean(const EstimatorQuery& query) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < data_.block_count(); ++i) acc += query.evaluate(data_.block(i));
  return acc / static_cast<double>(data_.block_count());
}

std::optional<double> NaiveEmpiricalMechanism::answer(const EstimatorQuery& query) {
  return empirical_mean(query);
}

DataSplittingMechanism::DataSplittingMechanism(std::vector<Sample> samples,
                                               std::size_t block_size, std::size_t chunks)
    : data_(std::move(samples), block_size), chunks_(chunks) {
  if (chunks_ == 0) throw ParameterError("DataSplittingMechanism: chunks must be >= 1");
  blocks_per_chunk_ = data_.block_count() / chunks_;
  if (blocks_per_chunk_ == 0)
    throw InsufficientDataError("DataSplittingMechanism: fewer blocks than chunks", chunks_);
}

std::optional<double> DataSplittingMechanism::answer(const EstimatorQuery& query) {
  if (used_ >= chunks_) return std::nullopt;
  const std::size_t first = used_ * blocks_per_chunk_;
  ++used_;
  double acc = 0.0;
  for (std::size_t i = 0; i < blocks_per_chunk_; ++i)
    acc += query.evaluate(data_.block(first + i));
  return acc / static_cast<double>(blocks_per_chunk_);
}

GaussianNoiseMechanism::GaussianNoiseMechanism(std::vector<Sample> samples,
                                               std::size_t block_size, double sigma, Rng rng)
    : NaiveEmpiricalMechanism(std::move(samples), block_size), sigma_(sigma), rng_(rng) {
  if (sigma_ < 0) throw ParameterError("GaussianNoiseMechanism: sigma must be >= 0");
}

std::optional<double> GaussianNoiseMechanism::answer(const EstimatorQuery& query) {
  return empirical_mean(query) + (sigma_ > 0 ? rng_.gaussian(0.0, sigma_) : 0.0);
}

}  // namespace adaptive_median::harness
