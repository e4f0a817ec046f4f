#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "adaptive_median/distribution.hpp"
#include "adaptive_median/finite_range.hpp"
#include "adaptive_median/rng.hpp"

namespace adaptive_median::harness {

// Exhaustive differential-privacy audit over all value multisets of size m
// drawn from the grid, paired with every single-replacement neighbor. The
// mechanism is supplied as its exact output distribution over the grid.
struct AuditResult {
  double max_ratio = 0.0;        // max over neighbors and outputs of p/p'
  double bound = 0.0;            // e^epsilon
  bool pass = false;             // max_ratio <= bound * (1 + tol)
  std::size_t instances = 0;     // multisets enumerated
  std::size_t pairs = 0;         // ordered neighbor pairs checked
};

using ExactMechanism =
    std::function<std::vector<double>(const EmpiricalDistribution&, const FiniteRange&)>;

AuditResult audit_exact(std::size_t m, const FiniteRange& range, double epsilon,
                        const ExactMechanism& mechanism, double tol = 1e-9);

// The exponential-mechanism median under audit.
AuditResult audit_em_exact(std::size_t m, const FiniteRange& range, double epsilon,
                           double tol = 1e-9);

// Negative control: the noiseless argmin-utility "mechanism" (a point mass),
// which any audit must fail with an unbounded ratio.
AuditResult audit_broken_argmin(std::size_t m, const FiniteRange& range, double epsilon);

// Frequency-based audit of a sampled mechanism on one neighbor pair: draws
// are collected per output and the likelihood ratio is lower-bounded with
// Clopper-Pearson intervals at the given confidence. `max_ratio` below the
// bound does not certify privacy; a lower bound above e^epsilon refutes it.
struct SampledAuditResult {
  double max_ratio_lower_bound = 0.0;
  double bound = 0.0;
  bool refuted = false;  // lower bound exceeded e^epsilon
  std::size_t draws = 0;
};

using SampledMechanism = std::function<double(const EmpiricalDistribution&, const FiniteRange&, Rng&)>;

SampledAuditResult audit_sampled(const EmpiricalDistribution& values,
                                 const EmpiricalDistribution& neighbor, const FiniteRange& range,
                                 double epsilon, const SampledMechanism& mechanism,
                                 std::size_t draws, Rng& rng, double confidence = 0.99);

}  // namespace adaptive_median::harness
