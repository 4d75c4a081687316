#include "iapgev/pipeline/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "iapgev/error.hpp"

namespace iapgev::pipeline {

namespace {

using nlohmann::json;

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* k : keys) known = known || key == k;
        if (!known) throw ConfigError("config: unknown key '" + where + "." + key + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: '" + where + "." + key + "' has the wrong type");
    }
}

void read_path(const json& j, const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    read(j, key, s, "paths");
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = p.is_absolute() || base.empty() ? p : base / p;
}

void read_hyperparams(const json& j, vae::VaeHyperparams& hp) {
    only_keys(j, "vae", {"latent_dim", "encoder_hidden_layers", "decoder_hidden_layers", "batch_norm",
                         "minibatch_size", "learning_rate", "mc_draws", "max_iterations", "decoder_sigma",
                         "hidden_width"});
    read(j, "latent_dim", hp.latent_dim, "vae");
    read(j, "encoder_hidden_layers", hp.encoder_hidden_layers, "vae");
    read(j, "decoder_hidden_layers", hp.decoder_hidden_layers, "vae");
    read(j, "batch_norm", hp.batch_norm, "vae");
    read(j, "minibatch_size", hp.minibatch_size, "vae");
    read(j, "learning_rate", hp.learning_rate, "vae");
    read(j, "mc_draws", hp.mc_draws, "vae");
    read(j, "max_iterations", hp.max_iterations, "vae");
    read(j, "decoder_sigma", hp.decoder_sigma, "vae");
    read(j, "hidden_width", hp.hidden_width, "vae");
}

std::vector<estimation::Family> read_families(const json& j, const char* key, const std::string& where) {
    std::vector<std::string> names;
    read(j, key, names, where);
    std::vector<estimation::Family> out;
    for (const auto& n : names) out.push_back(estimation::parse_family(n));
    return out;
}

void read_experiment(const json& j, simulation::ExperimentConfig& e) {
    only_keys(j, "experiment", {"attributes", "truth", "observations", "alternatives", "threshold",
                                "threshold_quantile", "pilot_draws", "bc_draws", "membership_draws",
                                "rejection_cap", "simulate_family", "estimate_family", "nest_scale"});
    read(j, "attributes", e.attributes, "experiment");
    read(j, "truth", e.truth, "experiment");
    read(j, "observations", e.observations, "experiment");
    read(j, "alternatives", e.alternatives, "experiment");
    read(j, "threshold", e.threshold, "experiment");
    if (j.contains("threshold_quantile")) {
        double q = 0.0;
        read(j, "threshold_quantile", q, "experiment");
        e.threshold_quantile = q;
    }
    read(j, "pilot_draws", e.pilot_draws, "experiment");
    read(j, "bc_draws", e.bc_draws, "experiment");
    read(j, "membership_draws", e.membership_draws, "experiment");
    read(j, "rejection_cap", e.rejection_cap, "experiment");
    std::string family;
    read(j, "simulate_family", family, "experiment");
    if (!family.empty()) e.simulate_family = estimation::parse_family(family);
    family.clear();
    read(j, "estimate_family", family, "experiment");
    if (!family.empty()) e.estimate_family = estimation::parse_family(family);
    read(j, "nest_scale", e.nest_scale, "experiment");
}

}  // namespace

std::uint64_t PipelineConfig::master_seed() const {
    if (!seed) throw ConfigError("a seed is required (config 'seed' or --seed)");
    return *seed;
}

void PipelineConfig::validate() const {
    if (workers < 1) throw ConfigError("workers must be at least 1");
    vae.validate();
    if (synth.observations < 2) throw ConfigError("synth.observations must be at least 2");
    if (!(synth.train_fraction > 0.0 && synth.train_fraction < 1.0))
        throw ConfigError("synth.train_fraction must lie in (0, 1)");
    if (search.trials < 1) throw ConfigError("search.trials must be at least 1");
    if (generate.alternatives < 2) throw ConfigError("generate.alternatives must be at least 2");
    if (generate.bc_draws < 1 || generate.membership_draws < 1)
        throw ConfigError("generate draw counts must be positive");
    if (model.families.empty()) throw ConfigError("model.families must not be empty");
    if (!(model.model_scale > 0.0) || model.nest_scale < model.model_scale)
        throw ConfigError("model scales need 0 < model_scale <= nest_scale");
    if (simulate.modes.empty()) throw ConfigError("simulate.modes must not be empty");
    if (simulate.seeds < 1) throw ConfigError("simulate.seeds must be at least 1");
    if (verify.instances < 1 || verify.max_alternatives < 1 || verify.max_nests < 1)
        throw ConfigError("verify counts must be positive");
}

PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    only_keys(j, "", {"paths", "seed", "workers", "vae", "synth", "search", "generate", "model", "experiment",
                      "simulate", "verify"});
    PipelineConfig c;
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        only_keys(p, "paths", {"corpus", "checkpoint", "trace", "choice_sets", "report"});
        read_path(p, "corpus", c.paths.corpus, base_dir);
        read_path(p, "checkpoint", c.paths.checkpoint, base_dir);
        read_path(p, "trace", c.paths.trace, base_dir);
        read_path(p, "choice_sets", c.paths.choice_sets, base_dir);
        read_path(p, "report", c.paths.report, base_dir);
    }
    if (j.contains("seed")) {
        std::uint64_t s = 0;
        read(j, "seed", s, "");
        c.seed = s;
    }
    read(j, "workers", c.workers, "");
    if (j.contains("vae")) read_hyperparams(j["vae"], c.vae);
    if (j.contains("synth")) {
        only_keys(j["synth"], "synth", {"observations", "train_fraction"});
        read(j["synth"], "observations", c.synth.observations, "synth");
        read(j["synth"], "train_fraction", c.synth.train_fraction, "synth");
    }
    if (j.contains("search")) {
        only_keys(j["search"], "search", {"trials", "space"});
        read(j["search"], "trials", c.search.trials, "search");
        std::string space = "desk";
        read(j["search"], "space", space, "search");
        if (space != "desk" && space != "full") throw ConfigError("search.space must be 'desk' or 'full'");
        c.search.desk_space = space == "desk";
    }
    if (j.contains("generate")) {
        only_keys(j["generate"], "generate", {"alternatives", "bc_draws", "membership_draws"});
        read(j["generate"], "alternatives", c.generate.alternatives, "generate");
        read(j["generate"], "bc_draws", c.generate.bc_draws, "generate");
        read(j["generate"], "membership_draws", c.generate.membership_draws, "generate");
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        only_keys(m, "model", {"families", "attributes", "model_scale", "nest_scale"});
        if (m.contains("families")) c.model.families = read_families(m, "families", "model");
        read(m, "attributes", c.model.attributes, "model");
        read(m, "model_scale", c.model.model_scale, "model");
        read(m, "nest_scale", c.model.nest_scale, "model");
    }
    if (j.contains("experiment")) read_experiment(j["experiment"], c.experiment);
    if (j.contains("simulate")) {
        const auto& s = j["simulate"];
        only_keys(s, "simulate", {"modes", "seeds"});
        if (s.contains("modes")) {
            std::vector<std::string> names;
            read(s, "modes", names, "simulate");
            c.simulate.modes.clear();
            for (const auto& n : names) c.simulate.modes.push_back(simulation::parse_filter_mode(n));
        }
        read(s, "seeds", c.simulate.seeds, "simulate");
    }
    if (j.contains("verify")) {
        const auto& v = j["verify"];
        only_keys(v, "verify", {"instances", "max_alternatives", "max_nests", "max_order"});
        read(v, "instances", c.verify.instances, "verify");
        read(v, "max_alternatives", c.verify.max_alternatives, "verify");
        read(v, "max_nests", c.verify.max_nests, "verify");
        read(v, "max_order", c.verify.max_order, "verify");
    }
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

}  // namespace iapgev::pipeline
