#pragma once

#include <cstddef>
#include <vector>

#include "iapgev/gev/types.hpp"

namespace iapgev::gev {

// p(i) = BC_i e^{V_i} / sum_j BC_j e^{V_j}. Alternatives with BC = 0 get
// exactly zero. Throws DegenerateChoiceSetError when no alternative is perceived.
std::vector<double> iap_mnl_prob(const UtilityVector& v, const PerceptionVector& bc);
std::vector<double> iap_mnl_log_prob(const UtilityVector& v, const PerceptionVector& bc);

// ln of sum_m (sum_j BC_j alpha_jm e^{mu_m V_j})^{mu/mu_m}; inner sums in log space.
double log_cnl_generation(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests);
double cnl_generation(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests);

// G'_i = sum_m alpha_im e^{(mu_m - 1) V_i} y_m^{(mu - mu_m)/mu_m}, with
// y_m = sum_j BC_j alpha_jm e^{mu_m V_j}; so dG/de^{V_i} = BC_i mu G'_i.
// Nests with y_m = 0 contribute nothing; -inf when every term vanishes.
double log_cnl_partial(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests,
                       std::size_t i);
double cnl_partial(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests,
                   std::size_t i);

// p(i) = BC_i e^{V_i + ln G'_i} / sum_j BC_j e^{V_j + ln G'_j}.
std::vector<double> iap_cnl_prob(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests);
std::vector<double> iap_cnl_log_prob(const UtilityVector& v, const PerceptionVector& bc,
                                     const NestStructure& nests);

}  // namespace iapgev::gev
