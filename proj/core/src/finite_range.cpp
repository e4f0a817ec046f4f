#include "adaptive_median/finite_range.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "adaptive_median/errors.hpp"

namespace adaptive_median {

FiniteRange::FiniteRange(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DataError("FiniteRange: empty grid");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw DataError("FiniteRange: non-finite grid value");
    if (i > 0 && !(values_[i - 1] < values_[i]))
      throw DataError("FiniteRange: grid values must be strictly increasing");
  }
}

FiniteRange FiniteRange::grid(double lo, double hi, double step) {
  if (!(step > 0) || !std::isfinite(step) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
    throw ParameterError("FiniteRange::grid: need finite lo <= hi and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = lo + static_cast<double>(i) * step;
  return FiniteRange(std::move(values));
}

FiniteRange FiniteRange::centered_grid(double half_width, double step) {
  if (!(step > 0) || !(half_width >= 0))
    throw ParameterError("FiniteRange::centered_grid: need half_width >= 0 and step > 0");
  const auto reach = static_cast<long long>(std::floor(half_width / step + 1e-9));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(2 * reach + 1));
  for (long long j = -reach; j <= reach; ++j) values.push_back(static_cast<double>(j) * step);
  return FiniteRange(std::move(values));
}

std::size_t FiniteRange::project_index(double x) const {
  if (std::isnan(x)) throw DataError("project: NaN input");
  const auto it = std::lower_bound(values_.begin(), values_.end(), x);
  if (it == values_.end()) return values_.size() - 1;
  if (it == values_.begin()) return 0;
  const auto hi = static_cast<std::size_t>(it - values_.begin());
  const std::size_t lo = hi - 1;
  // Tie goes to the smaller grid value.
  return (x - values_[lo] <= values_[hi] - x) ? lo : hi;
}

std::size_t FiniteRange::count_lt(double x) const {
  return static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), x) -
                                  values_.begin());
}

std::size_t FiniteRange::count_leq(double x) const {
  return static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), x) -
                                  values_.begin());
}

double project_to_range(double x, const FiniteRange& range) { return range.project(x); }

}  // namespace adaptive_median
