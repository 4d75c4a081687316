#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iapgev/error.hpp"
#include "iapgev/pipeline/commands.hpp"
#include "iapgev/pipeline/config.hpp"

using namespace iapgev;
using namespace iapgev::pipeline;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_data = 3;
constexpr int exit_numerical = 4;

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return exit_usage;
        case ErrorCategory::data: return exit_data;
        case ErrorCategory::numerical: return exit_numerical;
    }
    return exit_numerical;
}

// Command-line values that override the config file when given.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string corpus, checkpoint, trace, choice_sets, report, save_best;
    std::optional<std::size_t> observations, iterations, trials, count, bc_draws, seeds, instances;
    std::optional<double> train_fraction, threshold, threshold_quantile;
    std::string space;
    std::vector<std::string> families, modes;
};

void apply(const Overrides& o, PipelineConfig& c) {
    if (o.seed) c.seed = o.seed;
    if (o.workers) c.workers = *o.workers;
    if (!o.corpus.empty()) c.paths.corpus = o.corpus;
    if (!o.checkpoint.empty()) c.paths.checkpoint = o.checkpoint;
    if (!o.trace.empty()) c.paths.trace = o.trace;
    if (!o.choice_sets.empty()) c.paths.choice_sets = o.choice_sets;
    if (!o.report.empty()) c.paths.report = o.report;
    if (o.iterations) c.vae.max_iterations = *o.iterations;
    if (o.trials) c.search.trials = *o.trials;
    if (!o.space.empty()) {
        if (o.space != "desk" && o.space != "full") throw ConfigError("--space must be 'desk' or 'full'");
        c.search.desk_space = o.space == "desk";
    }
    if (o.count) c.generate.alternatives = *o.count;
    if (o.bc_draws) c.generate.bc_draws = c.experiment.bc_draws = *o.bc_draws;
    if (!o.families.empty()) {
        c.model.families.clear();
        for (const auto& f : o.families) c.model.families.push_back(estimation::parse_family(f));
    }
    if (!o.modes.empty()) {
        c.simulate.modes.clear();
        for (const auto& m : o.modes) c.simulate.modes.push_back(simulation::parse_filter_mode(m));
    }
    if (o.seeds) c.simulate.seeds = *o.seeds;
    if (o.threshold) {
        c.experiment.threshold = *o.threshold;
        c.experiment.threshold_quantile.reset();
    }
    if (o.threshold_quantile) c.experiment.threshold_quantile = o.threshold_quantile;
    if (o.instances) c.verify.instances = *o.instances;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IAP-GEV route choice modeling with VAE choice-set generation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Show help for every command");
    Overrides o;
    app.add_option("--config", o.config, "JSON pipeline config")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Master seed");
    app.add_option("--workers", o.workers, "Parallel workers; 1 gives bit-stable output");

    auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with a train/test split");
    synth->add_option("--corpus", o.corpus, "Output corpus CSV");
    synth->add_option("-n,--observations", o.observations, "Number of observations");
    synth->add_option("--train-fraction", o.train_fraction, "Training share");

    auto* train = app.add_subcommand("train", "Train the VAE and write a checkpoint");
    train->add_option("--corpus", o.corpus, "Corpus CSV");
    train->add_option("--checkpoint", o.checkpoint, "Output checkpoint");
    train->add_option("--trace", o.trace, "Output training trace");
    train->add_option("--iterations", o.iterations, "Training iterations");

    auto* search = app.add_subcommand("search", "Random hyperparameter search");
    search->add_option("--corpus", o.corpus, "Corpus CSV");
    search->add_option("--trials", o.trials, "Number of trials");
    search->add_option("--space", o.space, "desk or full");
    search->add_option("--save-best", o.save_best, "Write the best trial's checkpoint here");

    auto* generate = app.add_subcommand("generate", "Generate choice sets with ln BC and nest rows");
    generate->add_option("--corpus", o.corpus, "Corpus CSV");
    generate->add_option("--checkpoint", o.checkpoint, "Trained checkpoint");
    generate->add_option("--out", o.choice_sets, "Output choice-set CSV");
    generate->add_option("--count", o.count, "Alternatives per observation, chosen included");
    generate->add_option("--bc-draws", o.bc_draws, "Importance samples per ln BC");

    auto* estimate = app.add_subcommand("estimate", "Estimate every configured family");
    auto* evaluate = app.add_subcommand("evaluate", "Training and test log-likelihood per family");
    for (auto* sub : {estimate, evaluate}) {
        sub->add_option("--choice-sets", o.choice_sets, "Choice-set CSV");
        sub->add_option("--families", o.families, "Subset of MNL, CNL, IAP-MNL, IAP-CNL")->delimiter(',');
    }

    auto* simulate = app.add_subcommand("simulate", "Consistency experiments over filter modes");
    simulate->add_option("--checkpoint", o.checkpoint, "Trained checkpoint");
    simulate->add_option("--modes", o.modes, "Subset of low, random, high")->delimiter(',');
    simulate->add_option("--observations", o.observations, "Observations per experiment");
    simulate->add_option("--seeds", o.seeds, "Replications starting at the master seed");
    simulate->add_option("--threshold", o.threshold, "BC threshold for low/high modes");
    simulate->add_option("--threshold-quantile", o.threshold_quantile, "Threshold as a pilot BC quantile");
    simulate->add_option("--bc-draws", o.bc_draws, "Importance samples per ln BC");

    auto* verify = app.add_subcommand("verify-gev", "Check generation-function properties on random instances");
    verify->add_option("--instances", o.instances, "Number of random instances");

    for (auto* sub : {synth, train, search, generate, estimate, evaluate, simulate, verify})
        sub->add_option("--report", o.report, "Write the report here instead of standard output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        PipelineConfig config = o.config.empty() ? PipelineConfig{} : load_config(o.config);
        if (o.train_fraction) config.synth.train_fraction = *o.train_fraction;
        if (o.observations) (synth->parsed() ? config.synth.observations : config.experiment.observations) = *o.observations;
        apply(o, config);

        auto& out = std::cout;
        if (synth->parsed()) return cmd_synth(config, out);
        if (train->parsed()) return cmd_train(config, out);
        if (search->parsed()) return cmd_search(config, out, o.save_best);
        if (generate->parsed()) return cmd_generate(config, out);
        if (estimate->parsed()) return cmd_estimate(config, out);
        if (evaluate->parsed()) return cmd_evaluate(config, out);
        if (simulate->parsed()) return cmd_simulate(config, out);
        if (verify->parsed()) return cmd_verify_gev(config, out);
    } catch (const DivergenceError& e) {
        std::cerr << "error: training diverged at iteration " << e.iteration() << ": " << e.what() << '\n';
        return exit_numerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numerical;
    }
    return exit_usage;
}
