#pragma once

#include <span>
#include <vector>

#include "iapgev/numeric/rng.hpp"

namespace iapgev::numeric {

inline constexpr double log_sqrt_2pi = 0.91893853320467274178;

double std_normal_logpdf(double x) noexcept;
double std_normal_cdf(double x) noexcept;

// ln Phi(x), accurate deep into the lower tail where Phi underflows.
double log_std_normal_cdf(double x) noexcept;

// phi(x) / Phi(x); the derivative of ln Phi(x).
double normal_hazard_lower(double x) noexcept;

// Throws ShapeError on empty input. Entries equal to -inf are allowed and
// contribute nothing; an all -inf input yields -inf.
double log_sum_exp(std::span<const double> x);
std::vector<double> softmax(std::span<const double> x);

// Truncated Normal on [0, inf) with location `mean` and scale `sigma`.
double truncnorm_logpdf(double x, double mean, double sigma) noexcept;
double truncnorm_mean(double mean, double sigma) noexcept;
double truncnorm_variance(double mean, double sigma) noexcept;

// Truncated Normal on [lower, inf). Plain rejection from the untruncated
// Normal while the acceptance probability is at least 0.05, otherwise the
// exponential-proposal tail sampler.
double sample_truncated_normal(double mean, double sigma, double lower, Rng& rng);

}  // namespace iapgev::numeric
