#include "dcpm/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace dcpm::numerics {

namespace {

void check_rate(double rho) {
  if (!(rho > 0.0))
    throw std::domain_error("poisson: rate must be positive");
}

struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double poisson_log_pmf(long x, double rho) {
  check_rate(rho);
  if (x < 0) throw std::domain_error("poisson: x must be non-negative");
  return static_cast<double>(x) * std::log(rho) - rho -
         std::lgamma(static_cast<double>(x) + 1.0);
}

double poisson_pmf(long x, double rho) {
  return std::exp(poisson_log_pmf(x, rho));
}

double poisson_cdf(long x, double rho) {
  check_rate(rho);
  if (x < 0) return 0.0;
  KahanSum acc;
  for (long k = 0; k <= x; ++k) {
    double t = poisson_pmf(k, rho);
    acc.add(t);
    // Past the mode the terms decay geometrically; the remaining tail is
    // bounded by t * (k+1) / (k+1-rho).
    if (static_cast<double>(k) > rho &&
        t * (static_cast<double>(k) + 1.0) /
                (static_cast<double>(k) + 1.0 - rho) <
            1e-18)
      break;
  }
  return acc.sum < 1.0 ? acc.sum : 1.0;
}

long poisson_quantile(double p, double rho) {
  check_rate(rho);
  if (!(p > 0.0) || !(p < 1.0))
    throw std::domain_error("poisson: p must lie in (0,1)");
  KahanSum acc;
  const long guard =
      static_cast<long>(rho + 64.0 * std::sqrt(rho + 1.0) + 512.0);
  for (long k = 0;; ++k) {
    acc.add(poisson_pmf(k, rho));
    if (acc.sum >= p) return k;
    if (k > guard) return k;  // p numerically indistinguishable from 1
  }
}

}  // namespace dcpm::numerics
