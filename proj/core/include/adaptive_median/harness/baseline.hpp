#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "adaptive_median/dataset.hpp"
#include "adaptive_median/engine.hpp"
#include "adaptive_median/query.hpp"
#include "adaptive_median/rng.hpp"

namespace adaptive_median::harness {

// Common answering interface shared by the protected engine and the
// reference baselines, so experiments can swap them under one adversary.
class AnswerMechanism {
 public:
  virtual ~AnswerMechanism() = default;
  virtual std::optional<double> answer(const EstimatorQuery& query) = 0;
  virtual std::string name() const = 0;
  virtual const Session* session() const { return nullptr; }
};

class EngineMechanism : public AnswerMechanism {
 public:
  explicit EngineMechanism(Session session) : session_(std::move(session)) {}

  std::optional<double> answer(const EstimatorQuery& query) override {
    return session_.answer(query);
  }
  std::string name() const override { return "engine"; }
  const Session* session() const override { return &session_; }

 private:
  Session session_;
};

// Answers with the full-dataset empirical value: the mean of the query over
// all blocks. No protection; this is the attack target.
class NaiveEmpiricalMechanism : public AnswerMechanism {
 public:
  NaiveEmpiricalMechanism(std::vector<Sample> samples, std::size_t block_size)
      : data_(std::move(samples), block_size) {}

  std::optional<double> answer(const EstimatorQuery& query) override;
  std::string name() const override { return "naive_empirical"; }

 protected:
  BlockedDataset data_;

  double empirical_mean(const EstimatorQuery& query) const;
};

// Consumes a fresh chunk of blocks per query; bottom once exhausted.
class DataSplittingMechanism : public AnswerMechanism {
 public:
  DataSplittingMechanism(std::vector<Sample> samples, std::size_t block_size,
                         std::size_t chunks);

  std::optional<double> answer(const EstimatorQuery& query) override;
  std::string name() const override { return "data_splitting"; }

 private:
  BlockedDataset data_;
  std::size_t chunks_;
  std::size_t blocks_per_chunk_;
  std::size_t used_ = 0;
};

// Empirical value plus centered Gaussian noise of a configured scale.
class GaussianNoiseMechanism : public NaiveEmpiricalMechanism {
 public:
  GaussianNoiseMechanism(std::vector<Sample> samples, std::size_t block_size, double sigma,
                         Rng rng);

  std::optional<double> answer(const EstimatorQuery& query) override;
  std::string name() const override { return "gaussian_noise"; }

 private:
  double sigma_;
  Rng rng_;
};

}  // namespace adaptive_median::harness
