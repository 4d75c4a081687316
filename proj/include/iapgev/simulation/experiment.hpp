#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iapgev/estimation/estimate.hpp"
#include "iapgev/estimation/likelihood.hpp"
#include "iapgev/numeric/rng.hpp"
#include "iapgev/vae/model.hpp"

namespace iapgev::simulation {

// low keeps BC <= tau, high keeps BC >= tau, random keeps everything.
enum class FilterMode { low, random, high };

std::string_view filter_mode_name(FilterMode m) noexcept;
FilterMode parse_filter_mode(std::string_view name);
bool accepts(FilterMode mode, double log_bc, double threshold);

struct ExperimentConfig {
    std::vector<std::string> attributes = {"Route length detour", "Route highway/expressway percentage",
                                           "Route city node percentage"};
    std::vector<double> truth = {-1.5, 1.5, 0.5};
    std::size_t observations = 1000;
    std::size_t alternatives = 20;
    FilterMode mode = FilterMode::random;
    double threshold = 0.001;
    // When set, tau is this quantile of BC over the pilot draws instead.
    std::optional<double> threshold_quantile;
    std::size_t pilot_draws = 2000;
    std::size_t bc_draws = 100;
    std::size_t membership_draws = 100;
    std::size_t rejection_cap = 100000;
    estimation::Family simulate_family = estimation::Family::iap_mnl;
    estimation::Family estimate_family = estimation::Family::iap_mnl;
    double nest_scale = 2.0;
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    void validate() const;
};

// One generated choice set. ln BC of candidate j was estimated with
// Rng(bc_seeds[j]), so every value can be recomputed.
struct FilteredChoiceSet {
    numeric::DenseMatrix model_rows;   // the VAE's normalized space
    numeric::DenseMatrix attributes;   // absolute space
    gev::PerceptionVector perception;
    std::vector<std::uint64_t> bc_seeds;
    std::size_t candidates = 0;        // draws including rejected ones
};

// Draws alternatives from the model and keeps those passing the filter until
// `config.alternatives` are accepted. Throws FilterInfeasibleError after
// config.rejection_cap draws, and ContractError when the model has no
// normalization constants.
FilteredChoiceSet generate_filtered_choice_set(const vae::VaeModel& model, const ExperimentConfig& config,
                                               double threshold, numeric::Rng& rng);

// Draws each chosen index from the family's probabilities at beta.
estimation::Dataset simulate_choices(estimation::Dataset sets, const estimation::ModelSpec& spec,
                                     std::span<const double> beta, numeric::Rng& rng);

struct BcQuantile {
    double level;
    double bc;
};

struct SimulatedDataset {
    estimation::Dataset observations;
    double threshold = 0.0;
    std::size_t candidates = 0;
};

// Pilot distribution of BC over unfiltered draws from derive_seed(seed, 0).
std::vector<BcQuantile> bc_quantiles(const vae::VaeModel& model, const ExperimentConfig& config);

// Observation n uses Rng(derive_seed(derive_seed(seed, 1), n)); the result
// does not depend on config.workers.
SimulatedDataset simulate_dataset(const vae::VaeModel& model, const ExperimentConfig& config, double threshold);

struct ExperimentReport {
    ExperimentConfig config;
    std::string model_id;
    double threshold = 0.0;
    std::vector<BcQuantile> quantiles;
    std::size_t candidates = 0;
    estimation::EstimationResult estimate;
    bool low_power = false;  // some true coefficient lies within 1.96 se of zero
};

estimation::ModelSpec experiment_spec(const ExperimentConfig& config, estimation::Family family);

// Pilot, filtered generation, simulated choices at the true coefficients and
// estimation of the estimating family. A pure function of (model, config).
ExperimentReport run_consistency_experiment(const vae::VaeModel& model, const ExperimentConfig& config);

// "# key: value" provenance followed by attribute,beta,std_error,t_zero,t_truth rows.
void write_report(std::ostream& out, const ExperimentReport& report);

}  // namespace iapgev::simulation
