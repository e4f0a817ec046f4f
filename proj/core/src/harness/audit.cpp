#include "adaptive_median/harness/audit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "adaptive_median/dp_median.hpp"
#include "adaptive_median/errors.hpp"
#include "adaptive_median/harness/stats.hpp"

namespace adaptive_median::harness {

namespace {

// Enumerate all size-m multisets of grid indices (nondecreasing vectors).
void enumerate_multisets(std::size_t m, std::size_t r,
                         const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> pick(m, 0);
  while (true) {
    visit(pick);
    std::size_t i = m;
    while (i > 0 && pick[i - 1] == r - 1) --i;
    if (i == 0) return;
    const std::size_t v = pick[i - 1] + 1;
    for (std::size_t j = i - 1; j < m; ++j) pick[j] = v;
  }
}

EmpiricalDistribution multiset_values(const std::vector<std::size_t>& pick,
                                      const FiniteRange& range) {
  std::vector<double> values;
  values.reserve(pick.size());
  for (std::size_t idx : pick) values.push_back(range.value(idx));
  return EmpiricalDistribution(std::move(values));
}

}  // namespace

AuditResult audit_exact(std::size_t m, const FiniteRange& range, double epsilon,
                        const ExactMechanism& mechanism, double tol) {
  if (m == 0) throw ParameterError("audit_exact: m must be >= 1");
  const std::size_t r = range.size();

  // Cache every multiset's output distribution, then compare neighbors.
  std::map<std::vector<std::size_t>, std::vector<double>> dists;
  enumerate_multisets(m, r, [&](const std::vector<std::size_t>& pick) {
    dists.emplace(pick, mechanism(multiset_values(pick, range), range));
  });

  AuditResult out;
  out.bound = std::exp(epsilon);
  out.instances = dists.size();

  for (const auto& [pick, probs] : dists) {
    for (std::size_t pos = 0; pos < m; ++pos) {
      if (pos > 0 && pick[pos] == pick[pos - 1]) continue;  // same replacement site
      for (std::size_t repl = 0; repl < r; ++repl) {
        if (repl == pick[pos]) continue;
        std::vector<std::size_t> neighbor = pick;
        neighbor[pos] = repl;
        std::sort(neighbor.begin(), neighbor.end());
        const std::vector<double>& other = dists.at(neighbor);
        ++out.pairs;
        for (std::size_t v = 0; v < r; ++v) {
          const double ratio = other[v] > 0.0
                                   ? probs[v] / other[v]
                                   : (probs[v] > 0.0 ? std::numeric_limits<double>::infinity()
                                                     : 1.0);
          if (ratio > out.max_ratio) out.max_ratio = ratio;
        }
      }
    }
  }
  out.pass = out.max_ratio <= out.bound * (1.0 + tol);
  return out;
}

AuditResult audit_em_exact(std::size_t m, const FiniteRange& range, double epsilon, double tol) {
  return audit_exact(
      m, range, epsilon,
      [epsilon](const EmpiricalDistribution& values, const FiniteRange& grid) {
        return em_exact_distribution(values, grid, epsilon);
      },
      tol);
}

AuditResult audit_broken_argmin(std::size_t m, const FiniteRange& range, double epsilon) {
  return audit_exact(m, range, epsilon,
                     [](const EmpiricalDistribution& values, const FiniteRange& grid) {
                       // Point mass on the first utility minimizer: no noise.
                       std::vector<double> probs(grid.size(), 0.0);
                       std::size_t best = 0;
                       std::uint64_t best_cost = utility(values, grid.value(0));
                       for (std::size_t v = 1; v < grid.size(); ++v) {
                         const std::uint64_t cost = utility(values, grid.value(v));
                         if (cost < best_cost) {
                           best_cost = cost;
                           best = v;
                         }
                       }
                       probs[best] = 1.0;
                       return probs;
                     });
}

SampledAuditResult audit_sampled(const EmpiricalDistribution& values,
                                 const EmpiricalDistribution& neighbor, const FiniteRange& range,
                                 double epsilon, const SampledMechanism& mechanism,
                                 std::size_t draws, Rng& rng, double confidence) {
  if (draws == 0) throw ParameterError("audit_sampled: draws must be >= 1");

  std::map<double, std::uint64_t> first;
  std::map<double, std::uint64_t> second;
  for (std::size_t i = 0; i < draws; ++i) ++first[mechanism(values, range, rng)];
  for (std::size_t i = 0; i < draws; ++i) ++second[mechanism(neighbor, range, rng)];

  SampledAuditResult out;
  out.bound = std::exp(epsilon);
  out.draws = draws;
  for (const auto& [v, count] : first) {
    const auto [p_lo, p_hi] = clopper_pearson(count, draws, confidence);
    const auto it = second.find(v);
    const std::uint64_t other = it == second.end() ? 0 : it->second;
    const auto [q_lo, q_hi] = clopper_pearson(other, draws, confidence);
    if (q_hi <= 0.0) continue;
    const double lb = p_lo / q_hi;
    if (lb > out.max_ratio_lower_bound) out.max_ratio_lower_bound = lb;
  }
  out.refuted = out.max_ratio_lower_bound > out.bound;
  return out;
}

}  // namespace adaptive_median::harness
