#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iapgev/data/schema.hpp"
#include "iapgev/gev/types.hpp"
#include "iapgev/numeric/dense_matrix.hpp"

namespace iapgev::estimation {

enum class Family { mnl, cnl, iap_mnl, iap_cnl };

std::string_view family_name(Family f) noexcept;
// Accepts "MNL", "CNL", "IAP-MNL", "IAP-CNL"; ConfigError otherwise.
Family parse_family(std::string_view name);
bool uses_perception(Family f) noexcept;
bool uses_nests(Family f) noexcept;

// One choice situation: J alternatives in absolute attribute space.
struct Observation {
    std::size_t chosen = 0;
    numeric::DenseMatrix attributes;                // J x attributes
    std::optional<gev::PerceptionVector> perception;  // ln BC per alternative
    std::optional<numeric::DenseMatrix> inclusion;    // J x nests, rows sum to 1

    std::size_t size() const noexcept { return attributes.rows(); }
};

using Dataset = std::vector<Observation>;

// Linear-in-parameters utility over a subset of attribute columns. Nest
// scales are fixed, not estimated.
struct ModelSpec {
    Family family = Family::mnl;
    std::vector<std::string> names;     // one per coefficient
    std::vector<std::size_t> columns;   // attribute column of each coefficient
    double model_scale = 1.0;
    double nest_scale = 2.0;            // every nest

    std::size_t coefficients() const noexcept { return columns.size(); }
    // Every attribute of the schema, in schema order.
    static ModelSpec all_attributes(Family family, const data::AttributeSchema& schema);
    // The named attributes; SchemaError for an unknown name.
    static ModelSpec select(Family family, const data::AttributeSchema& schema, const std::vector<std::string>& names);

    void validate() const;
    // SpecError when the observation lacks what the family needs.
    void check(const Observation& obs) const;
    gev::NestStructure nests_for(const Observation& obs) const;
};

// V = sum_a beta_a x_a over the spec's columns.
double utility(std::span<const double> beta, std::span<const double> x);
gev::UtilityVector utilities(const ModelSpec& spec, std::span<const double> beta, const Observation& obs);

// ln p(chosen) through the gev probability functions.
double log_probability(const ModelSpec& spec, std::span<const double> beta, const Observation& obs);

double log_likelihood(const Dataset& data, std::span<const double> beta, const ModelSpec& spec,
                      std::size_t workers = 1);

struct LikelihoodGradient {
    double value = 0.0;
    std::vector<double> gradient;
};

// Closed-form gradient of ln p(chosen) in beta. For the cross-nested
// families, with x_bar_m the within-nest average of x under the weights
// BC_j alpha_jm e^{mu_m V_j}:
//   d ln G'_i = sum_m rho_im ((mu_m - 1) x_i + (mu - mu_m) x_bar_m)
//   d ln G    = mu sum_m pi_m x_bar_m
// where rho_im are the shares of the terms of G'_i and pi_m the nest shares of G.
LikelihoodGradient log_probability_gradient(const ModelSpec& spec, std::span<const double> beta,
                                            const Observation& obs);

// Contributions are computed per observation and summed in index order, so
// the result does not depend on `workers`.
LikelihoodGradient log_likelihood_gradient(const Dataset& data, std::span<const double> beta, const ModelSpec& spec,
                                           std::size_t workers = 1);

}  // namespace iapgev::estimation
