#pragma once

#include <cmath>
#include <vector>

#include "iapgev/gev/types.hpp"
#include "iapgev/numeric/rng.hpp"

namespace iapgev::testing {

struct GevInstance {
    gev::UtilityVector v;
    gev::PerceptionVector bc;
    gev::NestStructure nests;
};

inline double uniform_in(numeric::Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// Random valid cross-nested instance. Utilities stay in [-0.5, 0.5] and every
// alternative has a dominant nest, which keeps finite-difference steps of 1e-3
// on e^V well conditioned.
inline GevInstance random_gev_instance(numeric::Rng& rng, std::size_t j_count, std::size_t m_count,
                                       bool equal_scales = false) {
    const double mu = uniform_in(rng, 1.0, 2.0);
    std::vector<double> nest_scales(m_count);
    for (double& s : nest_scales) s = equal_scales ? mu : mu * uniform_in(rng, 1.2, 3.0);
    numeric::DenseMatrix alpha(j_count, m_count);
    for (std::size_t j = 0; j < j_count; ++j) {
        const std::size_t dominant = rng.index(m_count);
        double total = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            alpha(j, m) = m == dominant ? uniform_in(rng, 1.0, 2.0) : uniform_in(rng, 0.0, 0.5);
            total += alpha(j, m);
        }
        for (std::size_t m = 0; m < m_count; ++m) alpha(j, m) /= total;
    }
    gev::UtilityVector v;
    gev::PerceptionVector bc;
    for (std::size_t j = 0; j < j_count; ++j) {
        v.values.push_back(uniform_in(rng, -0.5, 0.5));
        bc.log_bc.push_back(std::log(uniform_in(rng, 0.5, 1.0)));
    }
    return {std::move(v), std::move(bc), gev::NestStructure(mu, std::move(nest_scales), std::move(alpha))};
}

// Literal cross-nested probability without perception weights, assembled from
// nest shares P(m) and within-nest shares P(i|m).
inline std::vector<double> reference_cnl_prob(const gev::UtilityVector& v, const gev::NestStructure& nests,
                                              const std::vector<double>& bc_weights) {
    const std::size_t J = v.size(), M = nests.nests();
    const double mu = nests.model_scale();
    std::vector<double> y(M, 0.0);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t j = 0; j < J; ++j)
            y[m] += bc_weights[j] * nests.alpha(j, m) * std::exp(nests.nest_scale(m) * v[j]);
    double denom = 0.0;
    for (std::size_t m = 0; m < M; ++m)
        if (y[m] > 0.0) denom += std::pow(y[m], mu / nests.nest_scale(m));
    std::vector<double> p(J, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        if (y[m] == 0.0) continue;
        const double nest_share = std::pow(y[m], mu / nests.nest_scale(m)) / denom;
        for (std::size_t j = 0; j < J; ++j)
            p[j] += nest_share * bc_weights[j] * nests.alpha(j, m) * std::exp(nests.nest_scale(m) * v[j]) / y[m];
    }
    return p;
}

}  // namespace iapgev::testing
