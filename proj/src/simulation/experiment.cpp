#include "iapgev/simulation/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "iapgev/data/corpus.hpp"
#include "iapgev/data/csv.hpp"
#include "iapgev/data/schema.hpp"
#include "iapgev/error.hpp"
#include "iapgev/gev/probability.hpp"
#include "iapgev/numeric/parallel.hpp"
#include "iapgev/vae/checkpoint.hpp"
#include "iapgev/vae/inference.hpp"

namespace iapgev::simulation {

namespace {

constexpr double quantile_levels[] = {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99};

std::size_t draw_index(const std::vector<double>& p, numeric::Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] <= 0.0) continue;
        acc += p[j];
        last = j;
        if (u < acc) return j;
    }
    return last;
}

// Linear interpolation between order statistics of sorted values.
double quantile(const std::vector<double>& sorted, double level) {
    const double pos = level * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> pilot_log_bc(const vae::VaeModel& model, const ExperimentConfig& config) {
    std::vector<double> out(config.pilot_draws);
    const std::uint64_t stream = numeric::derive_seed(config.seed, 0);
    numeric::parallel_for(out.size(), config.workers, [&](std::size_t i) {
        numeric::Rng rng(numeric::derive_seed(stream, i));
        const auto row = vae::generate_alternative(model, rng);
        out[i] = vae::estimate_log_bc(model, row, config.bc_draws, rng);
    });
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string_view filter_mode_name(FilterMode m) noexcept {
    switch (m) {
        case FilterMode::low: return "low";
        case FilterMode::random: return "random";
        case FilterMode::high: return "high";
    }
    return "?";
}

FilterMode parse_filter_mode(std::string_view name) {
    for (FilterMode m : {FilterMode::low, FilterMode::random, FilterMode::high})
        if (filter_mode_name(m) == name) return m;
    throw ConfigError("unknown filter mode '" + std::string(name) + "' (expected low, random or high)");
}

bool accepts(FilterMode mode, double log_bc, double threshold) {
    const double bc = std::exp(log_bc);
    switch (mode) {
        case FilterMode::low: return bc <= threshold;
        case FilterMode::high: return bc >= threshold;
        case FilterMode::random: return true;
    }
    return false;
}

void ExperimentConfig::validate() const {
    if (attributes.empty()) throw ConfigError("experiment needs at least one attribute");
    if (attributes.size() != truth.size()) throw ConfigError("experiment needs one true coefficient per attribute");
    if (observations < 1) throw ConfigError("experiment needs at least one observation");
    if (alternatives < 1) throw ConfigError("choice sets need at least one alternative");
    if (mode != FilterMode::random && !threshold_quantile && !(threshold > 0.0))
        throw ConfigError("filter threshold must be positive");
    if (threshold_quantile && !(*threshold_quantile > 0.0 && *threshold_quantile < 1.0))
        throw ConfigError("threshold quantile must lie in (0, 1)");
    if (pilot_draws < 2) throw ConfigError("pilot needs at least two draws");
    if (bc_draws < 1 || membership_draws < 1) throw ConfigError("draw counts must be positive");
    if (rejection_cap < alternatives) throw ConfigError("rejection cap is below the choice set size");
    if (workers < 1) throw ConfigError("workers must be at least 1");
}

FilteredChoiceSet generate_filtered_choice_set(const vae::VaeModel& model, const ExperimentConfig& config,
                                               double threshold, numeric::Rng& rng) {
    if (!model.normalization()) throw ContractError("model has no normalization constants");
    const std::size_t A = model.attributes();
    FilteredChoiceSet out;
    out.model_rows = numeric::DenseMatrix(config.alternatives, A);
    std::size_t kept = 0;
    while (kept < config.alternatives) {
        if (out.candidates == config.rejection_cap)
            throw FilterInfeasibleError("filter '" + std::string(filter_mode_name(config.mode)) + "' with tau=" +
                                        data::format_real(threshold) + " accepted " + std::to_string(kept) + " of " +
                                        std::to_string(config.rejection_cap) + " draws");
        ++out.candidates;
        const auto row = vae::generate_alternative(model, rng);
        const std::uint64_t seed = rng.next_u64();
        numeric::Rng bc_rng(seed);
        const double log_bc = vae::estimate_log_bc(model, row, config.bc_draws, bc_rng);
        if (!accepts(config.mode, log_bc, threshold)) continue;
        std::copy(row.begin(), row.end(), out.model_rows.row_span(kept).begin());
        out.perception.log_bc.push_back(log_bc);
        out.bc_seeds.push_back(seed);
        ++kept;
    }
    out.attributes = data::denormalize(out.model_rows, *model.normalization());
    return out;
}

estimation::Dataset simulate_choices(estimation::Dataset sets, const estimation::ModelSpec& spec,
                                     std::span<const double> beta, numeric::Rng& rng) {
    for (auto& obs : sets) {
        obs.chosen = 0;
        spec.check(obs);
        const auto v = estimation::utilities(spec, beta, obs);
        const auto bc = estimation::uses_perception(spec.family) ? *obs.perception
                                                                 : gev::PerceptionVector::ones(obs.size());
        const auto p = estimation::uses_nests(spec.family) ? gev::iap_cnl_prob(v, bc, spec.nests_for(obs))
                                                           : gev::iap_mnl_prob(v, bc);
        obs.chosen = draw_index(p, rng);
    }
    return sets;
}

estimation::ModelSpec experiment_spec(const ExperimentConfig& config, estimation::Family family) {
    auto spec = estimation::ModelSpec::select(family, data::AttributeSchema::route_attributes(), config.attributes);
    spec.nest_scale = config.nest_scale;
    return spec;
}

std::vector<BcQuantile> bc_quantiles(const vae::VaeModel& model, const ExperimentConfig& config) {
    const auto sorted = pilot_log_bc(model, config);
    std::vector<BcQuantile> out;
    for (double q : quantile_levels) out.push_back({q, std::exp(quantile(sorted, q))});
    return out;
}

SimulatedDataset simulate_dataset(const vae::VaeModel& model, const ExperimentConfig& config, double threshold) {
    config.validate();
    if (model.attributes() != data::AttributeSchema::route_attributes().size())
        throw ConfigError("experiment model must cover the route attribute schema");
    const auto sim_spec = experiment_spec(config, config.simulate_family);
    const bool nests = estimation::uses_nests(config.simulate_family) || estimation::uses_nests(config.estimate_family);
    const std::uint64_t stream = numeric::derive_seed(config.seed, 1);
    SimulatedDataset out;
    out.threshold = threshold;
    out.observations.resize(config.observations);
    std::vector<std::size_t> candidates(config.observations);
    numeric::parallel_for(config.observations, config.workers, [&](std::size_t n) {
        numeric::Rng rng(numeric::derive_seed(stream, n));
        auto set = generate_filtered_choice_set(model, config, threshold, rng);
        estimation::Observation obs;
        obs.attributes = std::move(set.attributes);
        obs.perception = std::move(set.perception);
        if (nests) {
            numeric::DenseMatrix alpha(config.alternatives, model.latent_dim());
            for (std::size_t j = 0; j < config.alternatives; ++j) {
                const auto a = vae::nest_membership(model, set.model_rows.row_span(j), rng, config.membership_draws);
                std::copy(a.begin(), a.end(), alpha.row_span(j).begin());
            }
            obs.inclusion = std::move(alpha);
        }
        auto one = simulate_choices({std::move(obs)}, sim_spec, config.truth, rng);
        out.observations[n] = std::move(one.front());
        candidates[n] = set.candidates;
    });
    for (std::size_t c : candidates) out.candidates += c;
    return out;
}

ExperimentReport run_consistency_experiment(const vae::VaeModel& model, const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;
    report.config = config;
    report.model_id = vae::fingerprint(model);
    const auto sorted = pilot_log_bc(model, config);
    for (double q : quantile_levels) report.quantiles.push_back({q, std::exp(quantile(sorted, q))});
    report.threshold = config.threshold_quantile ? std::exp(quantile(sorted, *config.threshold_quantile))
                                                 : config.threshold;
    const auto sim = simulate_dataset(model, config, report.threshold);
    report.candidates = sim.candidates;
    estimation::EstimationOptions options;
    options.targets = config.truth;
    options.workers = config.workers;
    const auto spec = experiment_spec(config, config.estimate_family);
    report.estimate = estimation::estimate(sim.observations, spec, std::vector<double>(config.truth.size(), 0.0), options);
    report.low_power = !report.estimate.std_errors_available;
    for (std::size_t a = 0; a < config.truth.size() && !report.low_power; ++a)
        if (std::abs(config.truth[a]) < 1.96 * report.estimate.std_error[a]) report.low_power = true;
    return report;
}

void write_report(std::ostream& out, const ExperimentReport& r) {
    using data::format_real;
    const auto& c = r.config;
    const auto& e = r.estimate;
    out << "# experiment: " << filter_mode_name(c.mode) << '\n';
    out << "# seed: " << c.seed << '\n';
    out << "# model: " << r.model_id << '\n';
    out << "# observations: " << c.observations << '\n';
    out << "# alternatives: " << c.alternatives << '\n';
    out << "# simulate_family: " << estimation::family_name(c.simulate_family) << '\n';
    out << "# estimate_family: " << estimation::family_name(c.estimate_family) << '\n';
    out << "# bc_draws: " << c.bc_draws << '\n';
    out << "# threshold: " << format_real(r.threshold);
    if (c.threshold_quantile) out << " (pilot quantile " << format_real(*c.threshold_quantile) << ")";
    out << '\n';
    out << "# candidates_drawn: " << r.candidates << '\n';
    out << "# bc_quantiles:";
    for (const auto& q : r.quantiles) out << ' ' << format_real(q.level) << '=' << format_real(q.bc);
    out << '\n';
    out << "# LL0: " << format_real(e.ll0) << '\n';
    out << "# LLhat: " << format_real(e.ll_hat) << '\n';
    out << "# converged: " << (e.converged ? "true" : "false") << '\n';
    out << "# std_errors: " << (e.std_errors_available ? "available" : "unavailable") << '\n';
    out << "# low_power: " << (r.low_power ? "true" : "false") << '\n';
    out << "attribute,truth,beta,std_error,t_zero,t_truth\n";
    for (std::size_t a = 0; a < e.beta.size(); ++a) {
        out << '"' << e.names[a] << "\"," << format_real(c.truth[a]) << ',' << format_real(e.beta[a]) << ','
            << format_real(e.std_error[a]) << ',' << format_real(e.t_zero[a]) << ',' << format_real(e.t_target[a])
            << '\n';
    }
}

}  // namespace iapgev::simulation
