#pragma once

#include <cmath>
#include <vector>

#include "iapgev/estimation/likelihood.hpp"
#include "iapgev/gev/probability.hpp"
#include "iapgev/numeric/rng.hpp"

namespace iapgev::testing {

// Random choice situation with every optional column filled: attributes in
// [0, 2), BC in [0.1, 1) and normalized random nest rows.
inline estimation::Observation random_observation(numeric::Rng& rng, std::size_t alternatives, std::size_t attributes,
                                                  std::size_t nests) {
    estimation::Observation obs;
    obs.attributes = numeric::DenseMatrix(alternatives, attributes);
    for (double& v : obs.attributes.entries()) v = 2.0 * rng.uniform();
    gev::PerceptionVector bc;
    for (std::size_t j = 0; j < alternatives; ++j) bc.log_bc.push_back(std::log(0.1 + 0.9 * rng.uniform()));
    obs.perception = bc;
    numeric::DenseMatrix alpha(alternatives, nests);
    for (std::size_t j = 0; j < alternatives; ++j) {
        double total = 0.0;
        for (std::size_t m = 0; m < nests; ++m) total += alpha(j, m) = 0.05 + rng.uniform();
        for (std::size_t m = 0; m < nests; ++m) alpha(j, m) /= total;
    }
    obs.inclusion = alpha;
    obs.chosen = rng.index(alternatives);
    return obs;
}

inline std::size_t draw_index(const std::vector<double>& p, numeric::Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        acc += p[j];
        if (u < acc) return j;
    }
    return p.size() - 1;
}

// Re-draws every chosen index from the model at beta.
inline void simulate_choices(estimation::Dataset& data, const estimation::ModelSpec& spec,
                             const std::vector<double>& beta, numeric::Rng& rng) {
    for (auto& obs : data) {
        const auto v = estimation::utilities(spec, beta, obs);
        const auto bc = estimation::uses_perception(spec.family) ? *obs.perception
                                                                 : gev::PerceptionVector::ones(obs.size());
        const auto p = estimation::uses_nests(spec.family) ? gev::iap_cnl_prob(v, bc, spec.nests_for(obs))
                                                           : gev::iap_mnl_prob(v, bc);
        obs.chosen = draw_index(p, rng);
    }
}

inline estimation::Dataset random_dataset(numeric::Rng& rng, std::size_t n, std::size_t alternatives,
                                          std::size_t attributes, std::size_t nests) {
    estimation::Dataset data;
    for (std::size_t i = 0; i < n; ++i) data.push_back(random_observation(rng, alternatives, attributes, nests));
    return data;
}

}  // namespace iapgev::testing
