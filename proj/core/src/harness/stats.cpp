#include "adaptive_median/harness/stats.hpp"

#include <cmath>
#include <limits>

#include "adaptive_median/errors.hpp"

namespace adaptive_median::harness {

double log_binomial_pmf(std::uint64_t n, std::uint64_t k, double p) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) +
         kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

double binomial_pmf(std::uint64_t n, std::uint64_t k, double p) {
  return std::exp(log_binomial_pmf(n, k, p));
}

double binomial_cdf(std::uint64_t n, std::uint64_t k, double p) {
  if (k >= n) return 1.0;
  // P[Bin(n,p) <= k] = I_{1-p}(n-k, k+1)
  return incomplete_beta(static_cast<double>(n - k), static_cast<double>(k) + 1.0, 1.0 - p);
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double md = static_cast<double>(m);
    const double m2 = 2.0 * md;
    double aa = md * (b - md) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + md) * (qab + md) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw ParameterError("incomplete_beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

namespace {

// Quantile of Beta(a,b) by bisection on the regularized incomplete beta.
double beta_quantile(double a, double b, double q) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (incomplete_beta(a, b, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<double, double> clopper_pearson(std::uint64_t x, std::uint64_t n, double confidence) {
  if (n == 0 || x > n) throw ParameterError("clopper_pearson: need 0 <= x <= n, n >= 1");
  if (!(confidence > 0) || !(confidence < 1))
    throw ParameterError("clopper_pearson: confidence must be in (0,1)");
  const double tail = (1.0 - confidence) / 2.0;
  const double xd = static_cast<double>(x);
  const double nd = static_cast<double>(n);
  const double lo = x == 0 ? 0.0 : beta_quantile(xd, nd - xd + 1.0, tail);
  const double hi = x == n ? 1.0 : beta_quantile(xd + 1.0, nd - xd, 1.0 - tail);
  return {lo, hi};
}

}  // namespace adaptive_median::harness
