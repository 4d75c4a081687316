#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "iapgev/numeric/dense_matrix.hpp"

namespace iapgev::gev {

// Systematic utilities V_j, one per alternative.
struct UtilityVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

// Implicit availability/perception weights stored as ln BC_j. An alternative
// outside the working choice set carries -inf (BC = 0). Any positive weight is
// accepted. IAP-MNL probabilities do not depend on the overall scale of BC;
// IAP-CNL ones only when every nest scale is equal.
struct PerceptionVector {
    std::vector<double> log_bc;

    static PerceptionVector ones(std::size_t n) { return {std::vector<double>(n, 0.0)}; }
    static PerceptionVector from_weights(std::span<const double> bc);

    std::size_t size() const noexcept { return log_bc.size(); }
    double operator[](std::size_t i) const { return log_bc[i]; }
    bool perceived(std::size_t i) const { return log_bc[i] != -std::numeric_limits<double>::infinity(); }
    double weight(std::size_t i) const { return std::exp(log_bc[i]); }
};

// Cross-nested structure: model scale mu, nest scales mu_m and the J x M
// inclusion matrix alpha. The constructor enforces the sufficient conditions
// for a valid generation function and throws StructureError otherwise.
class NestStructure {
public:
    NestStructure(double model_scale, std::vector<double> nest_scales, numeric::DenseMatrix inclusion);

    // One nest holding every alternative with mu_1 = mu.
    static NestStructure single_nest(std::size_t alternatives, double model_scale = 1.0);

    double model_scale() const noexcept { return model_scale_; }
    const std::vector<double>& nest_scales() const noexcept { return nest_scales_; }
    double nest_scale(std::size_t m) const { return nest_scales_[m]; }
    const numeric::DenseMatrix& inclusion() const noexcept { return inclusion_; }
    double alpha(std::size_t j, std::size_t m) const { return inclusion_(j, m); }
    std::size_t nests() const noexcept { return nest_scales_.size(); }
    std::size_t alternatives() const noexcept { return inclusion_.rows(); }

private:
    double model_scale_;
    std::vector<double> nest_scales_;
    numeric::DenseMatrix inclusion_;
};

}  // namespace iapgev::gev
