#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "iapgev/estimation/likelihood.hpp"
#include "iapgev/numeric/dense_matrix.hpp"

namespace iapgev::estimation {

struct EstimationOptions {
    std::size_t max_iterations = 500;
    double gradient_tolerance = 1e-6;   // infinity norm
    double relative_tolerance = 1e-9;   // |LL change| / max(|LL|, 1)
    double hessian_step = 1e-4;         // relative to max(|beta_a|, 1)
    std::size_t workers = 1;
    std::optional<std::vector<double>> targets;  // for t-tests against given values
};

enum class StopReason { gradient, relative_change, line_search, iteration_cap };
std::string_view stop_reason_name(StopReason r) noexcept;

struct EstimationResult {
    std::vector<std::string> names;
    std::vector<double> beta;
    std::vector<double> std_error;  // NaN when unavailable
    std::vector<double> t_zero;
    std::vector<double> targets;    // empty without targets
    std::vector<double> t_target;
    double ll0 = 0.0;
    double ll_hat = 0.0;
    bool converged = false;
    StopReason stop = StopReason::iteration_cap;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    bool std_errors_available = false;
    numeric::DenseMatrix covariance;
    std::size_t observations = 0;

    double rho_squared() const { return 1.0 - ll_hat / ll0; }
};

// Quasi-Newton (BFGS) ascent from `start` with backtracking Armijo steps.
// Standard errors come from the inverse of minus the Hessian, itself built
// from central differences of the analytic gradient. Throws DataError on an
// empty dataset and NumericalError when the start point has no finite
// likelihood.
EstimationResult estimate(const Dataset& data, const ModelSpec& spec, std::vector<double> start,
                          const EstimationOptions& options = {});

// Log-likelihood at fixed coefficients; nothing is refitted.
double evaluate(const Dataset& data, std::span<const double> beta, const ModelSpec& spec, std::size_t workers = 1);

// "# key: value" metadata lines followed by a coefficient table.
void write_report(std::ostream& out, const EstimationResult& result, const ModelSpec& spec);

}  // namespace iapgev::estimation
