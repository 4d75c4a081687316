#include "iapgev/numeric/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "iapgev/error.hpp"

namespace iapgev::numeric {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Robert (1995) exponential proposal for the standard Normal tail x >= a > 0.
double sample_std_normal_tail(double a, Rng& rng) {
    const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
        const double z = a - std::log(rng.uniform()) / rate;
        const double d = z - rate;
        if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
    }
}

}  // namespace

double std_normal_logpdf(double x) noexcept { return -log_sqrt_2pi - 0.5 * x * x; }

double std_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_std_normal_cdf(double x) noexcept {
    if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    // Asymptotic series: Phi(x) = phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8).
    const double r = 1.0 / (x * x);
    const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
    return std_normal_logpdf(x) - std::log(-x) + std::log(series);
}

double normal_hazard_lower(double x) noexcept {
    return std::exp(std_normal_logpdf(x) - log_std_normal_cdf(x));
}

double log_sum_exp(std::span<const double> x) {
    if (x.empty()) throw ShapeError("log_sum_exp: empty input");
    const double m = *std::max_element(x.begin(), x.end());
    if (m == -inf) return -inf;
    if (m == inf) return inf;
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - m);
    return m + std::log(acc);
}

std::vector<double> softmax(std::span<const double> x) {
    if (x.empty()) throw ShapeError("softmax: empty input");
    const double m = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - m);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

double truncnorm_logpdf(double x, double mean, double sigma) noexcept {
    if (x < 0.0) return -inf;
    return std_normal_logpdf((x - mean) / sigma) - std::log(sigma) -
           log_std_normal_cdf(mean / sigma);
}

double truncnorm_mean(double mean, double sigma) noexcept {
    return mean + sigma * normal_hazard_lower(mean / sigma);
}

double truncnorm_variance(double mean, double sigma) noexcept {
    const double alpha = -mean / sigma;
    const double lambda = normal_hazard_lower(mean / sigma);
    return sigma * sigma * (1.0 + alpha * lambda - lambda * lambda);
}

double sample_truncated_normal(double mean, double sigma, double lower, Rng& rng) {
    if (!(sigma > 0.0)) throw ParameterError("sample_truncated_normal: sigma must be positive");
    const double a = (lower - mean) / sigma;
    if (std_normal_cdf(-a) >= 0.05) {
        for (;;) {
            const double x = mean + sigma * rng.normal();
            if (x >= lower) return x;
        }
    }
    return std::max(lower, mean + sigma * sample_std_normal_tail(a, rng));
}

}  // namespace iapgev::numeric
