#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "iapgev/data/corpus.hpp"
#include "iapgev/numeric/dense_matrix.hpp"
#include "iapgev/vae/model.hpp"

namespace iapgev::vae {

// Value lists sampled uniformly per trial. Width and sigma come from the base
// hyperparameters.
struct SearchSpace {
    std::vector<std::size_t> latent_dim;
    std::vector<std::size_t> encoder_hidden_layers;
    std::vector<std::size_t> decoder_hidden_layers;
    std::vector<bool> batch_norm;
    std::vector<std::size_t> minibatch_size;
    std::vector<double> learning_rate;
    std::vector<std::size_t> mc_draws;
    std::vector<std::size_t> max_iterations;

    // The published value lists.
    static SearchSpace full();
    // Same structure lists with short runs, for single-core desk budgets.
    static SearchSpace desk();
    void validate() const;
};

struct TrialSpec {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    VaeHyperparams hyperparams;
};

struct TrialResult {
    TrialSpec spec;
    double score = -std::numeric_limits<double>::infinity();  // test-set sum of ln BC
    bool ok = false;
    std::string message;
};

// Trial t draws its configuration from derive_seed(seed, t).
std::vector<TrialSpec> sample_trials(const SearchSpace& space, const VaeHyperparams& base, std::size_t trials,
                                     std::uint64_t seed);

// Trains from scratch and scores with estimate_log_bc on every test row.
// Failures are reported in the result rather than thrown.
TrialResult run_trial(const TrialSpec& spec, const numeric::DenseMatrix& train_rows,
                      const numeric::DenseMatrix& test_rows, const std::optional<data::Normalization>& normalization,
                      VaeModel* trained = nullptr);

// Descending by score; ties keep the lower trial index first.
std::vector<TrialResult> rank_trials(std::vector<TrialResult> results);

// Runs the specs (in parallel when workers > 1) and ranks them.
std::vector<TrialResult> run_trials(const std::vector<TrialSpec>& specs, const numeric::DenseMatrix& train_rows,
                                    const numeric::DenseMatrix& test_rows,
                                    const std::optional<data::Normalization>& normalization, std::size_t workers = 1);

std::vector<TrialResult> random_search(const SearchSpace& space, const VaeHyperparams& base, std::size_t trials,
                                       const numeric::DenseMatrix& train_rows, const numeric::DenseMatrix& test_rows,
                                       const std::optional<data::Normalization>& normalization, std::uint64_t seed,
                                       std::size_t workers = 1);

}  // namespace iapgev::vae
