#include "iapgev/estimation/likelihood.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "iapgev/error.hpp"
#include "iapgev/gev/probability.hpp"
#include "iapgev/numeric/parallel.hpp"
#include "iapgev/numeric/special.hpp"

namespace iapgev::estimation {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

gev::PerceptionVector perception_of(const ModelSpec& spec, const Observation& obs) {
    if (uses_perception(spec.family)) return *obs.perception;
    return gev::PerceptionVector::ones(obs.size());
}

}  // namespace

std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::mnl: return "MNL";
        case Family::cnl: return "CNL";
        case Family::iap_mnl: return "IAP-MNL";
        case Family::iap_cnl: return "IAP-CNL";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::mnl, Family::cnl, Family::iap_mnl, Family::iap_cnl})
        if (family_name(f) == name) return f;
    throw ConfigError("unknown model family '" + std::string(name) + "' (expected MNL, CNL, IAP-MNL or IAP-CNL)");
}

bool uses_perception(Family f) noexcept { return f == Family::iap_mnl || f == Family::iap_cnl; }
bool uses_nests(Family f) noexcept { return f == Family::cnl || f == Family::iap_cnl; }

ModelSpec ModelSpec::all_attributes(Family family, const data::AttributeSchema& schema) {
    ModelSpec spec;
    spec.family = family;
    for (std::size_t a = 0; a < schema.size(); ++a) {
        spec.names.push_back(schema[a].name);
        spec.columns.push_back(a);
    }
    return spec;
}

ModelSpec ModelSpec::select(Family family, const data::AttributeSchema& schema, const std::vector<std::string>& names) {
    ModelSpec spec;
    spec.family = family;
    for (const auto& name : names) {
        const auto idx = schema.index_of(name);
        if (!idx) throw SchemaError("unknown attribute '" + name + "'");
        spec.names.push_back(name);
        spec.columns.push_back(*idx);
    }
    return spec;
}

void ModelSpec::validate() const {
    if (columns.empty()) throw ConfigError("model has no coefficients");
    if (names.size() != columns.size()) throw ConfigError("model needs one name per coefficient");
    if (!(model_scale > 0.0) || !std::isfinite(model_scale)) throw ConfigError("model scale must be positive");
    if (uses_nests(family) && !(nest_scale >= model_scale && std::isfinite(nest_scale)))
        throw ConfigError("nest scale must be finite and at least the model scale");
}

void ModelSpec::check(const Observation& obs) const {
    if (obs.size() == 0) throw SpecError("observation has an empty choice set");
    if (obs.chosen >= obs.size()) throw SpecError("chosen index outside the choice set");
    for (std::size_t c : columns)
        if (c >= obs.attributes.cols()) throw SpecError("coefficient column beyond the observation's attributes");
    if (uses_perception(family)) {
        if (!obs.perception) throw SpecError(std::string(family_name(family)) + " needs ln BC for every alternative");
        if (obs.perception->size() != obs.size()) throw SpecError("ln BC count differs from the choice set size");
    }
    if (uses_nests(family)) {
        if (!obs.inclusion) throw SpecError(std::string(family_name(family)) + " needs nest membership rows");
        if (obs.inclusion->rows() != obs.size()) throw SpecError("nest membership rows differ from the choice set size");
    }
}

gev::NestStructure ModelSpec::nests_for(const Observation& obs) const {
    const std::size_t m = obs.inclusion->cols();
    return {model_scale, std::vector<double>(m, nest_scale), *obs.inclusion};
}

double utility(std::span<const double> beta, std::span<const double> x) {
    if (beta.size() != x.size()) throw ShapeError("utility: coefficient and attribute counts differ");
    double v = 0.0;
    for (std::size_t a = 0; a < beta.size(); ++a) v += beta[a] * x[a];
    return v;
}

gev::UtilityVector utilities(const ModelSpec& spec, std::span<const double> beta, const Observation& obs) {
    if (beta.size() != spec.coefficients()) throw ShapeError("coefficient vector has the wrong length");
    gev::UtilityVector v;
    v.values.resize(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < beta.size(); ++a) acc += beta[a] * obs.attributes(j, spec.columns[a]);
        v.values[j] = acc;
    }
    return v;
}

double log_probability(const ModelSpec& spec, std::span<const double> beta, const Observation& obs) {
    spec.check(obs);
    const auto v = utilities(spec, beta, obs);
    const auto bc = perception_of(spec, obs);
    if (uses_nests(spec.family)) return gev::iap_cnl_log_prob(v, bc, spec.nests_for(obs))[obs.chosen];
    return gev::iap_mnl_log_prob(v, bc)[obs.chosen];
}

double log_likelihood(const Dataset& data, std::span<const double> beta, const ModelSpec& spec, std::size_t workers) {
    spec.validate();
    std::vector<double> parts(data.size());
    numeric::parallel_for(data.size(), workers,
                          [&](std::size_t n) { parts[n] = log_probability(spec, beta, data[n]); });
    double total = 0.0;
    for (double p : parts) total += p;
    return total;
}

LikelihoodGradient log_probability_gradient(const ModelSpec& spec, std::span<const double> beta,
                                            const Observation& obs) {
    spec.check(obs);
    const std::size_t J = obs.size(), K = spec.coefficients();
    const auto v = utilities(spec, beta, obs);
    const auto bc = perception_of(spec, obs);
    auto x = [&](std::size_t j, std::size_t a) { return obs.attributes(j, spec.columns[a]); };
    LikelihoodGradient out;
    out.gradient.assign(K, 0.0);
    const std::size_t i = obs.chosen;

    if (!uses_nests(spec.family)) {
        std::vector<double> logits(J);
        for (std::size_t j = 0; j < J; ++j) logits[j] = bc.perceived(j) ? bc[j] + v[j] : neg_inf;
        const double lse = numeric::log_sum_exp(logits);
        if (lse == neg_inf) throw DegenerateChoiceSetError("no alternative is perceived");
        out.value = logits[i] - lse;
        if (out.value == neg_inf) return out;
        for (std::size_t j = 0; j < J; ++j) {
            if (logits[j] == neg_inf) continue;
            const double p = std::exp(logits[j] - lse);
            for (std::size_t a = 0; a < K; ++a) out.gradient[a] -= p * x(j, a);
        }
        for (std::size_t a = 0; a < K; ++a) out.gradient[a] += x(i, a);
        return out;
    }

    const auto nests = spec.nests_for(obs);
    const std::size_t M = nests.nests();
    const double mu = nests.model_scale();
    // Per nest: ln y_m and the weighted attribute average x_bar_m.
    std::vector<double> log_y(M, neg_inf);
    numeric::DenseMatrix x_bar(M, K);
    std::vector<double> terms(J);
    for (std::size_t m = 0; m < M; ++m) {
        const double mu_m = nests.nest_scale(m);
        for (std::size_t j = 0; j < J; ++j) {
            const double alpha = nests.alpha(j, m);
            terms[j] = (bc.perceived(j) && alpha > 0.0) ? bc[j] + std::log(alpha) + mu_m * v[j] : neg_inf;
        }
        log_y[m] = numeric::log_sum_exp(terms);
        if (log_y[m] == neg_inf) continue;
        for (std::size_t j = 0; j < J; ++j) {
            if (terms[j] == neg_inf) continue;
            const double w = std::exp(terms[j] - log_y[m]);
            for (std::size_t a = 0; a < K; ++a) x_bar(m, a) += w * x(j, a);
        }
    }
    // ln G and the nest shares pi_m.
    std::vector<double> share_terms(M, neg_inf);
    for (std::size_t m = 0; m < M; ++m)
        if (log_y[m] != neg_inf) share_terms[m] = mu / nests.nest_scale(m) * log_y[m];
    const double log_g = numeric::log_sum_exp(share_terms);
    if (log_g == neg_inf) throw DegenerateChoiceSetError("no alternative is perceived");
    // ln G'_i and its term shares rho_im.
    std::vector<double> partial_terms(M, neg_inf);
    for (std::size_t m = 0; m < M; ++m) {
        const double alpha = nests.alpha(i, m);
        if (alpha <= 0.0 || log_y[m] == neg_inf) continue;
        const double mu_m = nests.nest_scale(m);
        partial_terms[m] = std::log(alpha) + (mu_m - 1.0) * v[i] + (mu - mu_m) / mu_m * log_y[m];
    }
    const double log_gp = numeric::log_sum_exp(partial_terms);
    if (!bc.perceived(i) || log_gp == neg_inf) {
        out.value = neg_inf;
        return out;
    }
    out.value = bc[i] + v[i] + log_gp - log_g;
    for (std::size_t a = 0; a < K; ++a) {
        double d = x(i, a);
        for (std::size_t m = 0; m < M; ++m) {
            const double mu_m = nests.nest_scale(m);
            if (partial_terms[m] != neg_inf) {
                const double rho = std::exp(partial_terms[m] - log_gp);
                d += rho * ((mu_m - 1.0) * x(i, a) + (mu - mu_m) * x_bar(m, a));
            }
            if (share_terms[m] != neg_inf) d -= mu * std::exp(share_terms[m] - log_g) * x_bar(m, a);
        }
        out.gradient[a] = d;
    }
    return out;
}

LikelihoodGradient log_likelihood_gradient(const Dataset& data, std::span<const double> beta, const ModelSpec& spec,
                                           std::size_t workers) {
    spec.validate();
    std::vector<LikelihoodGradient> parts(data.size());
    numeric::parallel_for(data.size(), workers,
                          [&](std::size_t n) { parts[n] = log_probability_gradient(spec, beta, data[n]); });
    LikelihoodGradient total;
    total.gradient.assign(spec.coefficients(), 0.0);
    for (const auto& p : parts) {
        total.value += p.value;
        for (std::size_t a = 0; a < total.gradient.size(); ++a) total.gradient[a] += p.gradient[a];
    }
    return total;
}

}  // namespace iapgev::estimation
