#include "iapgev/pipeline/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include "iapgev/data/corpus.hpp"
#include "iapgev/data/csv.hpp"
#include "iapgev/data/synth.hpp"
#include "iapgev/error.hpp"
#include "iapgev/estimation/choice_sets.hpp"
#include "iapgev/estimation/estimate.hpp"
#include "iapgev/gev/generation_check.hpp"
#include "iapgev/numeric/parallel.hpp"
#include "iapgev/numeric/rng.hpp"
#include "iapgev/simulation/experiment.hpp"
#include "iapgev/vae/checkpoint.hpp"
#include "iapgev/vae/inference.hpp"
#include "iapgev/vae/search.hpp"
#include "iapgev/vae/train.hpp"

namespace iapgev::pipeline {

namespace {

using data::format_real;
namespace fs = std::filesystem;

// The report file when configured, otherwise the caller's stream.
class Report {
public:
    Report(const fs::path& path, std::ostream& fallback) : out_(&fallback) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw DataError("cannot write report " + path.string());
        out_ = file_.get();
    }
    std::ostream& operator*() { return *out_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_;
};

const fs::path& need_input(const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("no ") + what + " path configured");
    if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
    return p;
}

const fs::path& need_output(const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("no ") + what + " path configured");
    return p;
}

data::Corpus split_corpus(const PipelineConfig& config) {
    auto corpus = data::load_corpus(need_input(config.paths.corpus, "corpus"));
    if (!corpus.is_split()) corpus = data::split(std::move(corpus), config.synth.train_fraction, config.master_seed());
    return corpus;
}

numeric::DenseMatrix normalized_rows(const data::Corpus& corpus, data::Partition p, const data::Normalization& n) {
    return data::normalize(corpus.rows_of(p), n);
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

void write_hyperparams_header(std::ostream& out) {
    out << "latent_dim,encoder_hidden_layers,decoder_hidden_layers,batch_norm,minibatch_size,learning_rate,"
           "mc_draws,max_iterations";
}

void write_hyperparams(std::ostream& out, const vae::VaeHyperparams& hp) {
    out << hp.latent_dim << ',' << hp.encoder_hidden_layers << ',' << hp.decoder_hidden_layers << ','
        << (hp.batch_norm ? "true" : "false") << ',' << hp.minibatch_size << ',' << format_real(hp.learning_rate)
        << ',' << hp.mc_draws << ',' << hp.max_iterations;
}

vae::VaeModel load_model_for(const PipelineConfig& config, std::size_t attributes) {
    auto model = vae::load_checkpoint(need_input(config.paths.checkpoint, "checkpoint"));
    if (model.attributes() != attributes)
        throw VersionError("checkpoint has " + std::to_string(model.attributes()) + " attributes, expected " +
                           std::to_string(attributes));
    if (!model.normalization()) throw VersionError("checkpoint carries no normalization constants");
    return model;
}

estimation::ModelSpec spec_for(const PipelineConfig& config, estimation::Family family,
                               const std::vector<std::string>& columns) {
    estimation::ModelSpec spec;
    spec.family = family;
    spec.names = config.model.attributes.empty() ? columns : config.model.attributes;
    for (const auto& name : spec.names) {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw SchemaError("choice-set file has no attribute '" + name + "'");
        spec.columns.push_back(static_cast<std::size_t>(it - columns.begin()));
    }
    spec.model_scale = config.model.model_scale;
    spec.nest_scale = config.model.nest_scale;
    spec.validate();
    return spec;
}

struct FamilyFit {
    estimation::ModelSpec spec;
    estimation::EstimationResult result;
};

std::vector<FamilyFit> fit_families(const PipelineConfig& config, const estimation::ChoiceSetTable& table) {
    const auto train = table.select(data::Partition::train);
    if (train.empty()) throw DataError("choice-set file has no training observations");
    estimation::EstimationOptions options;
    options.workers = config.workers;
    std::vector<FamilyFit> out;
    for (auto family : config.model.families) {
        auto spec = spec_for(config, family, table.attributes);
        auto result = estimation::estimate(train, spec, std::vector<double>(spec.coefficients(), 0.0), options);
        out.push_back({std::move(spec), std::move(result)});
    }
    return out;
}

void write_input_header(std::ostream& out, const char* command, const PipelineConfig& config) {
    out << "# command: " << command << '\n';
    out << "# seed: " << config.master_seed() << '\n';
}

// Random valid cross-nested instance: mu in [1, 2], nest scales mu times
// [1.2, 3] (all equal to mu for every fourth instance), one dominant nest per
// alternative, V in [-0.5, 0.5] and BC in [0.5, 1].
struct Instance {
    gev::UtilityVector v;
    gev::PerceptionVector bc;
    gev::NestStructure nests;
};

Instance random_instance(numeric::Rng& rng, std::size_t J, std::size_t M, bool equal_scales) {
    auto in = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    const double mu = in(1.0, 2.0);
    std::vector<double> scales(M);
    for (double& s : scales) s = equal_scales ? mu : mu * in(1.2, 3.0);
    numeric::DenseMatrix alpha(J, M);
    for (std::size_t j = 0; j < J; ++j) {
        const std::size_t dominant = rng.index(M);
        double total = 0.0;
        for (std::size_t m = 0; m < M; ++m) total += alpha(j, m) = m == dominant ? in(1.0, 2.0) : in(0.0, 0.5);
        for (std::size_t m = 0; m < M; ++m) alpha(j, m) /= total;
    }
    gev::UtilityVector v;
    gev::PerceptionVector bc;
    for (std::size_t j = 0; j < J; ++j) {
        v.values.push_back(in(-0.5, 0.5));
        bc.log_bc.push_back(std::log(in(0.5, 1.0)));
    }
    return {std::move(v), std::move(bc), gev::NestStructure(mu, std::move(scales), std::move(alpha))};
}

}  // namespace

int cmd_synth(const PipelineConfig& config, std::ostream& out) {
    config.validate();
    const auto& path = need_output(config.paths.corpus, "corpus");
    const std::uint64_t seed = config.master_seed();
    auto corpus = data::split(data::synth_corpus(config.synth.observations, numeric::derive_seed(seed, 0)),
                              config.synth.train_fraction, numeric::derive_seed(seed, 1));
    data::save_corpus(path, corpus);
    Report report(config.paths.report, out);
    write_input_header(*report, "synth", config);
    *report << "# observations: " << corpus.size() << '\n';
    *report << "# train: " << corpus.indices(data::Partition::train).size() << '\n';
    *report << "# test: " << corpus.indices(data::Partition::test).size() << '\n';
    *report << "# corpus: " << path.filename().string() << '\n';
    return 0;
}

int cmd_train(const PipelineConfig& config, std::ostream& out) {
    config.validate();
    const std::uint64_t seed = config.master_seed();
    const auto& checkpoint = need_output(config.paths.checkpoint, "checkpoint");
    const auto corpus = split_corpus(config);
    const auto norm = *corpus.normalization;
    const auto train_rows = normalized_rows(corpus, data::Partition::train, norm);
    const auto test_rows = normalized_rows(corpus, data::Partition::test, norm);

    numeric::Rng init(numeric::derive_seed(seed, 1));
    vae::VaeModel model(config.vae, corpus.schema.size(), init);
    model.set_normalization(norm);
    numeric::Rng train_rng(numeric::derive_seed(seed, 2));
    const auto trace = vae::train(model, train_rows, train_rng);
    vae::save_checkpoint(checkpoint, model);
    if (!config.paths.trace.empty()) vae::write_trace(config.paths.trace, trace);

    const std::size_t S = config.vae.mc_draws;
    const double train_sum =
        sum(vae::estimate_log_bc_rows(model, train_rows, S, numeric::derive_seed(seed, 3), config.workers));
    const double test_sum =
        sum(vae::estimate_log_bc_rows(model, test_rows, S, numeric::derive_seed(seed, 4), config.workers));

    Report report(config.paths.report, out);
    write_input_header(*report, "train", config);
    *report << "# model: " << vae::fingerprint(model) << '\n';
    *report << "# parameters: " << model.parameter_count() << '\n';
    *report << "# iterations: " << trace.size() << '\n';
    *report << "# final_minibatch_bound: " << format_real(trace.empty() ? 0.0 : trace.back()) << '\n';
    *report << "# bc_draws: " << S << '\n';
    *report << "partition,observations,sum_log_bc,mean_log_bc\n";
    *report << "train," << train_rows.rows() << ',' << format_real(train_sum) << ','
            << format_real(train_sum / static_cast<double>(train_rows.rows())) << '\n';
    *report << "test," << test_rows.rows() << ',' << format_real(test_sum) << ','
            << format_real(test_sum / static_cast<double>(std::max<std::size_t>(1, test_rows.rows()))) << '\n';
    return 0;
}

int cmd_search(const PipelineConfig& config, std::ostream& out, const fs::path& save_best) {
    config.validate();
    const std::uint64_t seed = config.master_seed();
    const auto corpus = split_corpus(config);
    const auto norm = *corpus.normalization;
    const auto train_rows = normalized_rows(corpus, data::Partition::train, norm);
    const auto test_rows = normalized_rows(corpus, data::Partition::test, norm);
    const auto space = config.search.desk_space ? vae::SearchSpace::desk() : vae::SearchSpace::full();
    const auto ranked =
        vae::random_search(space, config.vae, config.search.trials, train_rows, test_rows, norm, seed, config.workers);

    Report report(config.paths.report, out);
    write_input_header(*report, "search", config);
    *report << "# space: " << (config.search.desk_space ? "desk" : "full") << '\n';
    *report << "# trials: " << ranked.size() << '\n';
    const auto& best = ranked.front();
    *report << "# selected_trial: " << best.spec.index << '\n';
    *report << "rank,trial,trial_seed,";
    write_hyperparams_header(*report);
    *report << ",test_sum_log_bc,status,message\n";
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& t = ranked[r];
        *report << r + 1 << ',' << t.spec.index << ',' << t.spec.seed << ',';
        write_hyperparams(*report, t.spec.hyperparams);
        *report << ',' << format_real(t.score) << ',' << (t.ok ? "ok" : "failed") << ",\"" << t.message << "\"\n";
    }
    if (!save_best.empty()) {
        if (!best.ok) throw NumericalError("no search trial succeeded; nothing to save");
        vae::VaeModel model = vae::VaeModel::zeros(best.spec.hyperparams, train_rows.cols());
        vae::run_trial(best.spec, train_rows, test_rows, norm, &model);
        vae::save_checkpoint(save_best, model);
    }
    return 0;
}

int cmd_generate(const PipelineConfig& config, std::ostream& out) {
    config.validate();
    const std::uint64_t seed = config.master_seed();
    const auto& target = need_output(config.paths.choice_sets, "choice-set");
    const auto corpus = data::load_corpus(need_input(config.paths.corpus, "corpus"));
    const auto model = load_model_for(config, corpus.schema.size());
    const auto& norm = *model.normalization();
    const std::size_t K = config.generate.alternatives;
    const std::size_t N = corpus.size();
    const auto observed = data::normalize(corpus.rows, norm);

    estimation::ChoiceSetTable table;
    table.attributes = corpus.schema.names();
    table.observations.resize(N);
    table.partition.assign(N, data::Partition::train);
    if (corpus.is_split()) table.partition = corpus.assignment;

    const std::uint64_t stream = numeric::derive_seed(seed, 0);
    numeric::parallel_for(N, config.workers, [&](std::size_t n) {
        numeric::Rng rng(numeric::derive_seed(stream, n));
        estimation::Observation obs;
        obs.chosen = rng.index(K);
        numeric::DenseMatrix rows(K, model.attributes());
        for (std::size_t j = 0; j < K; ++j) {
            const auto row = j == obs.chosen ? std::vector<double>(observed.row_span(n).begin(), observed.row_span(n).end())
                                             : vae::generate_alternative(model, rng);
            std::copy(row.begin(), row.end(), rows.row_span(j).begin());
        }
        obs.attributes = data::denormalize(rows, norm);
        // The observed route keeps its recorded values rather than the round trip.
        std::copy(corpus.rows.row_span(n).begin(), corpus.rows.row_span(n).end(),
                  obs.attributes.row_span(obs.chosen).begin());
        gev::PerceptionVector bc;
        numeric::DenseMatrix alpha(K, model.latent_dim());
        for (std::size_t j = 0; j < K; ++j) {
            numeric::Rng bc_rng(rng.next_u64());
            bc.log_bc.push_back(vae::estimate_log_bc(model, rows.row_span(j), config.generate.bc_draws, bc_rng));
            const auto a = vae::nest_membership(model, rows.row_span(j), rng, config.generate.membership_draws);
            std::copy(a.begin(), a.end(), alpha.row_span(j).begin());
        }
        obs.perception = std::move(bc);
        obs.inclusion = std::move(alpha);
        table.observations[n] = std::move(obs);
    });
    estimation::write_choice_sets(target, table);

    double chosen_sum = 0.0, other_sum = 0.0;
    for (const auto& obs : table.observations)
        for (std::size_t j = 0; j < K; ++j) (j == obs.chosen ? chosen_sum : other_sum) += obs.perception->log_bc[j];
    Report report(config.paths.report, out);
    write_input_header(*report, "generate", config);
    *report << "# model: " << vae::fingerprint(model) << '\n';
    *report << "# observations: " << N << '\n';
    *report << "# alternatives: " << K << '\n';
    *report << "# bc_draws: " << config.generate.bc_draws << '\n';
    *report << "# membership_draws: " << config.generate.membership_draws << '\n';
    *report << "# mean_log_bc_chosen: " << format_real(chosen_sum / static_cast<double>(N)) << '\n';
    *report << "# mean_log_bc_generated: " << format_real(other_sum / static_cast<double>(N * (K - 1))) << '\n';
    *report << "# choice_sets: " << target.filename().string() << '\n';
    return 0;
}

int cmd_estimate(const PipelineConfig& config, std::ostream& out) {
    config.validate();
    const auto table = estimation::read_choice_sets(need_input(config.paths.choice_sets, "choice-set"));
    const auto fits = fit_families(config, table);

    Report report(config.paths.report, out);
    *report << "# command: estimate\n";
    *report << "# families: " << fits.size() << '\n';
    *report << "# values: beta with t against zero in brackets\n";
    *report << "attribute";
    for (const auto& f : fits) *report << ",\"" << estimation::family_name(f.spec.family) << '"';
    *report << '\n';
    const auto& names = fits.front().spec.names;
    for (std::size_t a = 0; a < names.size(); ++a) {
        *report << '"' << names[a] << '"';
        for (const auto& f : fits)
            *report << ",\"" << format_real(f.result.beta[a]) << " (" << format_real(f.result.t_zero[a]) << ")\"";
        *report << '\n';
    }
    for (const auto& f : fits) {
        *report << "\n## " << estimation::family_name(f.spec.family) << '\n';
        estimation::write_report(*report, f.result, f.spec);
    }
    return 0;
}

int cmd_evaluate(const PipelineConfig& config, std::ostream& out) {
    config.validate();
    const auto table = estimation::read_choice_sets(need_input(config.paths.choice_sets, "choice-set"));
    const auto fits = fit_families(config, table);
    const auto test = table.select(data::Partition::test);

    Report report(config.paths.report, out);
    *report << "# command: evaluate\n";
    *report << "# train_observations: " << fits.front().result.observations << '\n';
    *report << "# test_observations: " << test.size() << '\n';
    *report << "quantity";
    for (const auto& f : fits) *report << ",\"" << estimation::family_name(f.spec.family) << '"';
    *report << '\n';
    *report << "coefficients";
    for (const auto& f : fits) *report << ',' << f.spec.coefficients();
    *report << "\ntrain_ll0";
    for (const auto& f : fits) *report << ',' << format_real(f.result.ll0);
    *report << "\ntrain_llhat";
    for (const auto& f : fits) *report << ',' << format_real(f.result.ll_hat);
    *report << "\ntrain_rho2";
    for (const auto& f : fits) *report << ',' << format_real(f.result.rho_squared());
    *report << "\ntest_ll0";
    for (const auto& f : fits) {
        const std::vector<double> zero(f.spec.coefficients(), 0.0);
        *report << ',' << (test.empty() ? std::string("nan") : format_real(estimation::evaluate(test, zero, f.spec, config.workers)));
    }
    *report << "\ntest_llhat";
    for (const auto& f : fits)
        *report << ','
                << (test.empty() ? std::string("nan")
                                 : format_real(estimation::evaluate(test, f.result.beta, f.spec, config.workers)));
    *report << "\nconverged";
    for (const auto& f : fits) *report << ',' << (f.result.converged ? "true" : "false");
    *report << '\n';
    return 0;
}

int cmd_simulate(const PipelineConfig& config, std::ostream& out) {
    config.validate();
    const std::uint64_t seed = config.master_seed();
    const auto model = load_model_for(config, data::AttributeSchema::route_attributes().size());
    const auto& truth = config.experiment.truth;

    struct Tally {
        std::size_t runs = 0, consistent = 0;
        std::vector<double> bias;
    };
    std::vector<Tally> tallies(config.simulate.modes.size(), Tally{0, 0, std::vector<double>(truth.size(), 0.0)});

    Report report(config.paths.report, out);
    write_input_header(*report, "simulate", config);
    *report << "# model: " << vae::fingerprint(model) << '\n';
    *report << "# seeds: " << config.simulate.seeds << '\n';
    for (std::size_t r = 0; r < config.simulate.seeds; ++r) {
        for (std::size_t m = 0; m < config.simulate.modes.size(); ++m) {
            auto exp = config.experiment;
            exp.mode = config.simulate.modes[m];
            exp.seed = seed + r;
            exp.workers = config.workers;
            const auto result = simulation::run_consistency_experiment(model, exp);
            *report << "\n## " << simulation::filter_mode_name(exp.mode) << " seed " << exp.seed << '\n';
            simulation::write_report(*report, result);
            auto& t = tallies[m];
            ++t.runs;
            const auto& tt = result.estimate.t_target;
            if (result.estimate.std_errors_available &&
                std::all_of(tt.begin(), tt.end(), [](double v) { return std::abs(v) < 1.96; }))
                ++t.consistent;
            for (std::size_t a = 0; a < truth.size(); ++a) t.bias[a] += result.estimate.beta[a] - truth[a];
        }
    }
    *report << "\n## summary\n";
    *report << "mode,runs,all_within_1.96,share";
    for (const auto& name : config.experiment.attributes) *report << ",\"mean_bias " << name << '"';
    *report << '\n';
    for (std::size_t m = 0; m < tallies.size(); ++m) {
        const auto& t = tallies[m];
        *report << simulation::filter_mode_name(config.simulate.modes[m]) << ',' << t.runs << ',' << t.consistent
                << ',' << format_real(static_cast<double>(t.consistent) / static_cast<double>(t.runs));
        for (double b : t.bias) *report << ',' << format_real(b / static_cast<double>(t.runs));
        *report << '\n';
    }
    return 0;
}

int cmd_verify_gev(const PipelineConfig& config, std::ostream& out) {
    config.validate();
    const std::uint64_t seed = config.master_seed();
    const auto& v = config.verify;
    if (v.max_alternatives > gev::max_verified_alternatives || v.max_order > gev::max_verified_order ||
        v.max_order < 1)
        throw UnsupportedCheckError("verify-gev supports at most 5 alternatives and orders 1 to 3");

    Report report(config.paths.report, out);
    write_input_header(*report, "verify-gev", config);
    *report << "# instances: " << v.instances << '\n';
    *report << "instance,alternatives,nests,equal_scales,max_homogeneity_residual,nonnegative,divergence_ok,"
               "partials_checked,partials_ok,result\n";
    std::size_t passed = 0;
    for (std::size_t i = 0; i < v.instances; ++i) {
        numeric::Rng rng(numeric::derive_seed(seed, i));
        const std::size_t J = 1 + rng.index(v.max_alternatives);
        const std::size_t M = 1 + rng.index(v.max_nests);
        const bool equal = i % 4 == 3;
        const auto inst = random_instance(rng, J, M, equal);
        const auto r = gev::verify_generation_function(inst.nests, inst.v, inst.bc, std::min(v.max_order, J));
        double worst = 0.0;
        for (const auto& h : r.homogeneity) worst = std::max(worst, h.residual);
        *report << i << ',' << J << ',' << M << ',' << (equal ? "true" : "false") << ',' << format_real(worst) << ','
                << (r.nonnegative ? "true" : "false") << ',' << (r.divergence_ok() ? "true" : "false") << ','
                << r.partials.size() << ',' << (r.partials_ok() ? "true" : "false") << ','
                << (r.passed() ? "PASS" : "FAIL") << '\n';
        if (r.passed()) ++passed;
    }
    *report << "# passed: " << passed << " of " << v.instances << '\n';
    return passed == v.instances ? 0 : 4;
}

}  // namespace iapgev::pipeline
