#include "iapgev/gev/probability.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "iapgev/error.hpp"
#include "iapgev/numeric/special.hpp"

namespace iapgev::gev {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

void check_inputs(const UtilityVector& v, const PerceptionVector& bc) {
    if (v.size() == 0) throw ShapeError("empty choice set");
    if (v.size() != bc.size()) throw ShapeError("utility and perception lengths differ");
    bool any = false;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (!std::isfinite(v[j])) throw ParameterError("utility " + std::to_string(j) + " is not finite");
        if (std::isnan(bc[j]) || bc[j] == std::numeric_limits<double>::infinity())
            throw ParameterError("ln BC " + std::to_string(j) + " is not a valid log weight");
        any = any || bc.perceived(j);
    }
    if (!any) throw DegenerateChoiceSetError("no alternative has positive perception");
}

void check_inputs(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests) {
    check_inputs(v, bc);
    if (nests.alternatives() != v.size()) throw ShapeError("nest structure has a different alternative count");
}

// ln y_m for every nest.
std::vector<double> log_nest_sums(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests) {
    std::vector<double> out(nests.nests(), neg_inf);
    std::vector<double> terms;
    for (std::size_t m = 0; m < nests.nests(); ++m) {
        terms.clear();
        const double mu_m = nests.nest_scale(m);
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double a = nests.alpha(j, m);
            if (a > 0.0 && bc.perceived(j)) terms.push_back(bc[j] + std::log(a) + mu_m * v[j]);
        }
        if (!terms.empty()) out[m] = numeric::log_sum_exp(terms);
    }
    return out;
}

double log_partial_from_sums(const UtilityVector& v, const NestStructure& nests, std::span<const double> log_y,
                             std::size_t i) {
    const double mu = nests.model_scale();
    std::vector<double> terms;
    for (std::size_t m = 0; m < nests.nests(); ++m) {
        const double a = nests.alpha(i, m);
        if (!(a > 0.0) || log_y[m] == neg_inf) continue;
        const double mu_m = nests.nest_scale(m);
        terms.push_back(std::log(a) + (mu_m - 1.0) * v[i] + (mu - mu_m) / mu_m * log_y[m]);
    }
    return terms.empty() ? neg_inf : numeric::log_sum_exp(terms);
}

std::vector<double> normalize_log(std::vector<double> log_numerators) {
    const double denom = numeric::log_sum_exp(log_numerators);
    if (denom == neg_inf) throw DegenerateChoiceSetError("all choice probabilities vanish");
    for (double& a : log_numerators) a = (a == neg_inf) ? neg_inf : a - denom;
    return log_numerators;
}

std::vector<double> exp_all(std::vector<double> log_p) {
    for (double& a : log_p) a = (a == neg_inf) ? 0.0 : std::exp(a);
    return log_p;
}

}  // namespace

std::vector<double> iap_mnl_log_prob(const UtilityVector& v, const PerceptionVector& bc) {
    check_inputs(v, bc);
    std::vector<double> numerators(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) numerators[j] = bc.perceived(j) ? v[j] + bc[j] : neg_inf;
    return normalize_log(std::move(numerators));
}

std::vector<double> iap_mnl_prob(const UtilityVector& v, const PerceptionVector& bc) {
    return exp_all(iap_mnl_log_prob(v, bc));
}

double log_cnl_generation(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests) {
    check_inputs(v, bc, nests);
    const auto log_y = log_nest_sums(v, bc, nests);
    std::vector<double> terms;
    for (std::size_t m = 0; m < nests.nests(); ++m)
        if (log_y[m] != neg_inf) terms.push_back(nests.model_scale() / nests.nest_scale(m) * log_y[m]);
    if (terms.empty()) throw DegenerateChoiceSetError("generation function has no perceived members");
    return numeric::log_sum_exp(terms);
}

double cnl_generation(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests) {
    return std::exp(log_cnl_generation(v, bc, nests));
}

double log_cnl_partial(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests,
                       std::size_t i) {
    check_inputs(v, bc, nests);
    if (i >= v.size()) throw IndexError("alternative index " + std::to_string(i) + " out of range");
    const auto log_y = log_nest_sums(v, bc, nests);
    return log_partial_from_sums(v, nests, log_y, i);
}

double cnl_partial(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests,
                   std::size_t i) {
    const double lp = log_cnl_partial(v, bc, nests, i);
    return lp == neg_inf ? 0.0 : std::exp(lp);
}

std::vector<double> iap_cnl_log_prob(const UtilityVector& v, const PerceptionVector& bc,
                                     const NestStructure& nests) {
    check_inputs(v, bc, nests);
    const auto log_y = log_nest_sums(v, bc, nests);
    std::vector<double> numerators(v.size(), neg_inf);
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (!bc.perceived(j)) continue;
        const double lg = log_partial_from_sums(v, nests, log_y, j);
        if (lg != neg_inf) numerators[j] = bc[j] + v[j] + lg;
    }
    return normalize_log(std::move(numerators));
}

std::vector<double> iap_cnl_prob(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests) {
    return exp_all(iap_cnl_log_prob(v, bc, nests));
}

}  // namespace iapgev::gev
