#include "iapgev/gev/generation_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iapgev/error.hpp"
#include "iapgev/gev/probability.hpp"

namespace iapgev::gev {

namespace {

void check_indices(const UtilityVector& v, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ParameterError("mixed partial needs at least one index");
    for (std::size_t a = 0; a < indices.size(); ++a) {
        if (indices[a] >= v.size()) throw IndexError("mixed partial index out of range");
        for (std::size_t b = a + 1; b < indices.size(); ++b)
            if (indices[a] == indices[b]) throw ParameterError("mixed partial indices must be distinct");
    }
}

double generation_at(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests) {
    return std::exp(log_cnl_generation(v, bc, nests));
}

void combinations(std::span<const std::size_t> pool, std::size_t k, std::size_t start,
                  std::vector<std::size_t>& current, std::vector<std::vector<std::size_t>>& out) {
    if (current.size() == k) {
        out.push_back(current);
        return;
    }
    for (std::size_t i = start; i < pool.size(); ++i) {
        current.push_back(pool[i]);
        combinations(pool, k, i + 1, current, out);
        current.pop_back();
    }
}

}  // namespace

double cnl_mixed_partial_analytic(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests,
                                  std::span<const std::size_t> indices) {
    check_indices(v, indices);
    if (nests.alternatives() != v.size() || bc.size() != v.size()) throw ShapeError("mixed partial: inconsistent sizes");
    const double mu = nests.model_scale();
    const double k = static_cast<double>(indices.size());
    double total = 0.0;
    for (std::size_t m = 0; m < nests.nests(); ++m) {
        const double mu_m = nests.nest_scale(m);
        double y_m = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) y_m += bc.weight(j) * nests.alpha(j, m) * std::exp(mu_m * v[j]);
        if (y_m == 0.0) continue;
        double members = 1.0;
        for (std::size_t l : indices) members *= bc.weight(l) * nests.alpha(l, m) * std::pow(std::exp(v[l]), mu_m - 1.0);
        double falling = 1.0;
        for (std::size_t l = 0; l < indices.size(); ++l) falling *= mu / mu_m - static_cast<double>(l);
        total += std::pow(mu_m, k) * members * falling * std::pow(y_m, (mu - k * mu_m) / mu_m);
    }
    return total;
}

double cnl_mixed_partial_fd(const UtilityVector& v, const PerceptionVector& bc, const NestStructure& nests,
                            std::span<const std::size_t> indices, double step) {
    check_indices(v, indices);
    for (std::size_t l : indices)
        if (std::exp(v[l]) <= step) throw ParameterError("finite-difference step exceeds e^V");
    const std::size_t k = indices.size();
    double acc = 0.0;
    UtilityVector shifted = v;
    for (std::size_t corner = 0; corner < (std::size_t{1} << k); ++corner) {
        double sign = 1.0;
        for (std::size_t b = 0; b < k; ++b) {
            const std::size_t l = indices[b];
            const bool up = (corner >> b) & 1U;
            sign *= up ? 1.0 : -1.0;
            shifted.values[l] = std::log(std::exp(v[l]) + (up ? step : -step));
        }
        acc += sign * generation_at(shifted, bc, nests);
    }
    return acc / std::pow(2.0 * step, static_cast<double>(k));
}

bool GenerationCheckReport::homogeneity_ok() const {
    return std::all_of(homogeneity.begin(), homogeneity.end(),
                       [](const HomogeneityCheck& h) { return h.residual < homogeneity_tolerance; });
}

bool GenerationCheckReport::divergence_ok() const {
    return std::all_of(divergence.begin(), divergence.end(),
                       [](const DivergenceCheck& d) { return d.strictly_increasing && d.growth > 1e6; });
}

bool GenerationCheckReport::partials_ok() const {
    return std::all_of(partials.begin(), partials.end(), [](const MixedPartialCheck& p) {
        return p.sign_ok && p.vanishes_ok && p.agreement_ok;
    });
}

bool GenerationCheckReport::passed() const { return nonnegative && homogeneity_ok() && divergence_ok() && partials_ok(); }

std::string GenerationCheckReport::describe() const {
    std::ostringstream os;
    os << "G = " << generation << (nonnegative ? " (non-negative)" : " (NEGATIVE)") << '\n';
    for (const auto& h : homogeneity) os << "homogeneity beta=" << h.factor << " residual=" << h.residual << '\n';
    for (const auto& d : divergence)
        os << "divergence alt=" << d.alternative << " increasing=" << d.strictly_increasing << " growth=" << d.growth
           << '\n';
    for (const auto& p : partials) {
        os << "partial k=" << p.indices.size() << " {";
        for (std::size_t i = 0; i < p.indices.size(); ++i) os << (i ? "," : "") << p.indices[i];
        os << "} fd=" << p.finite_difference << " analytic=" << p.analytic << " sign_ok=" << p.sign_ok
           << " vanishes_ok=" << p.vanishes_ok << " agreement_ok=" << p.agreement_ok << '\n';
    }
    os << "result: " << (passed() ? "PASS" : "FAIL") << '\n';
    return os.str();
}

GenerationCheckReport verify_generation_function(const NestStructure& nests, const UtilityVector& v, const PerceptionVector& bc,
                               std::size_t max_order) {
    if (v.size() > max_verified_alternatives)
        throw UnsupportedCheckError("numerical generation-function checks support at most 5 alternatives");
    if (max_order == 0 || max_order > max_verified_order)
        throw UnsupportedCheckError("mixed partial order must be between 1 and 3");

    GenerationCheckReport report;
    report.generation = generation_at(v, bc, nests);
    report.nonnegative = std::isfinite(report.generation) && report.generation >= 0.0;
    report.equal_scales = std::all_of(nests.nest_scales().begin(), nests.nest_scales().end(),
                                      [&](double s) { return s == nests.model_scale(); });

    const double mu = nests.model_scale();
    for (double factor : {0.5, 2.0, 10.0}) {
        UtilityVector scaled = v;
        for (double& u : scaled.values) u += std::log(factor);
        const double g = generation_at(scaled, bc, nests);
        report.homogeneity.push_back(
            {factor, std::abs(g - std::pow(factor, mu) * report.generation) / report.generation});
    }

    std::vector<std::size_t> perceived;
    for (std::size_t j = 0; j < v.size(); ++j)
        if (bc.perceived(j)) perceived.push_back(j);

    for (std::size_t i : perceived) {
        DivergenceCheck d{i, true, 0.0};
        double previous = report.generation;
        UtilityVector grown = v;
        for (int s = 1; s <= 8; ++s) {
            grown.values[i] = v[i] + s * std::log(10.0);
            const double g = generation_at(grown, bc, nests);
            d.strictly_increasing = d.strictly_increasing && g > previous;
            previous = g;
        }
        d.growth = previous / report.generation;
        report.divergence.push_back(d);
    }

    for (std::size_t k = 1; k <= max_order && k <= perceived.size(); ++k) {
        std::vector<std::vector<std::size_t>> subsets;
        std::vector<std::size_t> current;
        combinations(perceived, k, 0, current, subsets);
        for (auto& subset : subsets) {
            MixedPartialCheck c;
            c.finite_difference = cnl_mixed_partial_fd(v, bc, nests, subset);
            c.analytic = cnl_mixed_partial_analytic(v, bc, nests, subset);
            const bool odd = k % 2 == 1;
            c.sign_ok = odd ? (c.finite_difference >= -mixed_partial_noise_floor && c.analytic >= 0.0)
                            : (c.finite_difference <= mixed_partial_noise_floor && c.analytic <= 0.0);
            c.vanishes_ok = !(report.equal_scales && k > 1) ||
                            (std::abs(c.finite_difference) < mixed_partial_noise_floor && c.analytic == 0.0);
            c.agreement_ok = std::abs(c.finite_difference - c.analytic) <=
                             mixed_partial_noise_floor * (1.0 + std::abs(c.analytic));
            c.indices = std::move(subset);
            report.partials.push_back(std::move(c));
        }
    }
    return report;
}

}  // namespace iapgev::gev
