#include "iapgev/vae/search.hpp"

#include <algorithm>
#include <cmath>

#include "iapgev/error.hpp"
#include "iapgev/numeric/parallel.hpp"
#include "iapgev/numeric/rng.hpp"
#include "iapgev/vae/inference.hpp"
#include "iapgev/vae/train.hpp"

namespace iapgev::vae {

SearchSpace SearchSpace::full() {
    return {{1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
            {0, 1, 2, 3, 4, 5, 6},
            {0, 1, 2, 3, 4, 5, 6},
            {true, false},
            {50, 100, 200, 500, 1000},
            {0.0, 0.1, 0.01, 1e-3, 1e-5},
            {50, 100, 200, 500, 1000},
            {500, 1000, 5000, 10000, 20000}};
}

SearchSpace SearchSpace::desk() {
    SearchSpace s = full();
    s.minibatch_size = {50, 100};
    s.mc_draws = {10, 20, 50};
    s.max_iterations = {100, 200, 500};
    return s;
}

void SearchSpace::validate() const {
    if (latent_dim.empty() || encoder_hidden_layers.empty() || decoder_hidden_layers.empty() || batch_norm.empty() ||
        minibatch_size.empty() || learning_rate.empty() || mc_draws.empty() || max_iterations.empty())
        throw ConfigError("every hyperparameter value list must be non-empty");
}

std::vector<TrialSpec> sample_trials(const SearchSpace& space, const VaeHyperparams& base, std::size_t trials,
                                     std::uint64_t seed) {
    space.validate();
    if (trials < 1) throw ConfigError("random search needs at least one trial");
    std::vector<TrialSpec> out;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = numeric::derive_seed(seed, t);
        numeric::Rng rng(trial_seed);
        auto pick = [&](const auto& list) { return list[rng.index(list.size())]; };
        VaeHyperparams hp = base;
        hp.latent_dim = pick(space.latent_dim);
        hp.encoder_hidden_layers = pick(space.encoder_hidden_layers);
        hp.decoder_hidden_layers = pick(space.decoder_hidden_layers);
        hp.batch_norm = pick(space.batch_norm);
        hp.minibatch_size = pick(space.minibatch_size);
        hp.learning_rate = pick(space.learning_rate);
        hp.mc_draws = pick(space.mc_draws);
        hp.max_iterations = pick(space.max_iterations);
        out.push_back({t, trial_seed, hp});
    }
    return out;
}

TrialResult run_trial(const TrialSpec& spec, const numeric::DenseMatrix& train_rows,
                      const numeric::DenseMatrix& test_rows, const std::optional<data::Normalization>& normalization,
                      VaeModel* trained) {
    TrialResult result{spec, -std::numeric_limits<double>::infinity(), false, {}};
    try {
        numeric::Rng init(numeric::derive_seed(spec.seed, 1));
        VaeModel model(spec.hyperparams, train_rows.cols(), init);
        if (normalization) model.set_normalization(*normalization);
        numeric::Rng train_rng(numeric::derive_seed(spec.seed, 2));
        train(model, train_rows, train_rng);
        const auto log_bc = estimate_log_bc_rows(model, test_rows, spec.hyperparams.mc_draws,
                                                 numeric::derive_seed(spec.seed, 3));
        double score = 0.0;
        for (double v : log_bc) score += v;
        if (!std::isfinite(score)) {
            result.message = "test-set log-likelihood is not finite";
        } else {
            result.score = score;
            result.ok = true;
        }
        if (trained) *trained = std::move(model);
    } catch (const Error& e) {
        result.message = e.what();
    }
    return result;
}

std::vector<TrialResult> rank_trials(std::vector<TrialResult> results) {
    std::stable_sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.spec.index < b.spec.index;
    });
    return results;
}

std::vector<TrialResult> run_trials(const std::vector<TrialSpec>& specs, const numeric::DenseMatrix& train_rows,
                                    const numeric::DenseMatrix& test_rows,
                                    const std::optional<data::Normalization>& normalization, std::size_t workers) {
    std::vector<TrialResult> results(specs.size());
    numeric::parallel_for(specs.size(), workers, [&](std::size_t i) {
        results[i] = run_trial(specs[i], train_rows, test_rows, normalization);
    });
    return rank_trials(std::move(results));
}

std::vector<TrialResult> random_search(const SearchSpace& space, const VaeHyperparams& base, std::size_t trials,
                                       const numeric::DenseMatrix& train_rows, const numeric::DenseMatrix& test_rows,
                                       const std::optional<data::Normalization>& normalization, std::uint64_t seed,
                                       std::size_t workers) {
    return run_trials(sample_trials(space, base, trials, seed), train_rows, test_rows, normalization, workers);
}

}  // namespace iapgev::vae
