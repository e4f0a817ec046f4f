#pragma once

#include <cstddef>
#include <vector>

namespace adaptive_median {

// The sorted finite answer grid T. Supports non-uniform grids (e.g. a
// logarithmic scale); uniform grids come from grid(). Immutable after
// construction and safe to share across threads.
class FiniteRange {
 public:
  // Values must be non-empty, strictly increasing and finite.
  explicit FiniteRange(std::vector<double> values);

  // Uniform grid lo, lo+step, ..., up to hi (inclusive within rounding).
  static FiniteRange grid(double lo, double hi, double step);

  // Symmetric grid {j*step : j integer} intersected with [-half_width, half_width].
  static FiniteRange centered_grid(double half_width, double step);

  std::size_t size() const { return values_.size(); }
  double value(std::size_t i) const { return values_[i]; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }
  const std::vector<double>& values() const { return values_; }

  // Index of the nearest grid value; exact ties resolve to the smaller value.
  // NaN input is a DataError.
  std::size_t project_index(double x) const;
  double project(double x) const { return values_[project_index(x)]; }

  // Number of grid values strictly below / at-or-below x.
  std::size_t count_lt(double x) const;
  std::size_t count_leq(double x) const;

 private:
  std::vector<double> values_;
};

// Nearest grid value, ties to the smaller value.
double project_to_range(double x, const FiniteRange& range);

}  // namespace adaptive_median
