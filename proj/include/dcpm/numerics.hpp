#pragma once

namespace dcpm::numerics {

/// log of the Poisson pmf, x * log(rho) - rho - lgamma(x + 1).
double poisson_log_pmf(long x, double rho);

/// e^{-rho} rho^x / x!, evaluated in log space. Safe for rho up to 1e4
/// and x up to 1e5. Throws std::domain_error on x < 0 or rho <= 0.
double poisson_pmf(long x, double rho);

/// F(x; rho) = sum_{k=0}^{x} pmf(k). Returns 0 for x < 0.
double poisson_cdf(long x, double rho);

/// Smallest integer x with F(x; rho) >= p. Throws std::domain_error
/// unless 0 < p < 1.
long poisson_quantile(double p, double rho);

}  // namespace dcpm::numerics
