#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

namespace adaptive_median::harness {

// log of the binomial pmf P[Bin(n,p) = k]
double log_binomial_pmf(std::uint64_t n, std::uint64_t k, double p);
double binomial_pmf(std::uint64_t n, std::uint64_t k, double p);

// P[Bin(n,p) <= k]
double binomial_cdf(std::uint64_t n, std::uint64_t k, double p);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Two-sided Clopper-Pearson interval for x successes in n trials at the
// given confidence (e.g. 0.99).
std::pair<double, double> clopper_pearson(std::uint64_t x, std::uint64_t n, double confidence);

}  // namespace adaptive_median::harness
