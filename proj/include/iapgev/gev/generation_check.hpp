#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iapgev/gev/types.hpp"

namespace iapgev::gev {

inline constexpr std::size_t max_verified_alternatives = 5;
inline constexpr std::size_t max_verified_order = 3;
inline constexpr double mixed_partial_step = 1e-3;
inline constexpr double mixed_partial_noise_floor = 1e-4;
inline constexpr double homogeneity_tolerance = 1e-10;

// k-th mixed partial of G with respect to e^{V_i} for k distinct perceived
// alternatives, evaluated literally from the closed form
//   sum_m mu_m^k prod_l (BC_l alpha_lm y_l^{mu_m - 1}) prod_{l<k} (mu/mu_m - l) y_m^{(mu - k mu_m)/mu_m}.
double cnl_mixed_partial_analytic(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests,
                                  std::span<const std::size_t> indices);

// Same quantity by central differences of G over the 2^k corners, with step
// `step` on the e^{V} arguments.
double cnl_mixed_partial_fd(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests,
                            std::span<const std::size_t> indices, double step = mixed_partial_step);

struct HomogeneityCheck {
    double factor;
    double residual;  // |G(factor e^V) - factor^mu G(e^V)| / G(e^V)
};

struct DivergenceCheck {
    std::size_t alternative;
    bool strictly_increasing;
    double growth;  // G after scaling e^{V_i} by 1e8, over the base value
};

struct MixedPartialCheck {
    std::vector<std::size_t> indices;
    double finite_difference;
    double analytic;
    bool sign_ok;       // sign pattern (odd k >= 0, even k <= 0) within the noise floor
    bool vanishes_ok;   // when every mu_m == mu and k > 1: |value| below the noise floor
    bool agreement_ok;  // finite difference and closed form agree
};

struct GenerationCheckReport {
    double generation = 0.0;
    bool nonnegative = false;
    std::vector<HomogeneityCheck> homogeneity;
    std::vector<DivergenceCheck> divergence;
    std::vector<MixedPartialCheck> partials;
    bool equal_scales = false;

    bool homogeneity_ok() const;
    bool divergence_ok() const;
    bool partials_ok() const;
    bool passed() const;
    std::string describe() const;
};

// Numerical check of the generation-function properties on one instance.
// Throws UnsupportedCheckError for more than 5 alternatives or order above 3.
GenerationCheckReport verify_generation_function(const NestStructure& nests, const UtilityVector& v, const PerceptionVector& bc,
                               std::size_t max_order);

}  // namespace iapgev::gev
