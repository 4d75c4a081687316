#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iapgev/estimation/likelihood.hpp"
#include "iapgev/simulation/experiment.hpp"
#include "iapgev/vae/model.hpp"
#include "iapgev/vae/search.hpp"

namespace iapgev::pipeline {

struct Paths {
    std::filesystem::path corpus;
    std::filesystem::path checkpoint;
    std::filesystem::path trace;
    std::filesystem::path choice_sets;
    std::filesystem::path report;  // empty: standard output
};

struct SynthOptions {
    std::size_t observations = 2000;
    double train_fraction = 0.8;
};

struct SearchOptions {
    std::size_t trials = 10;
    bool desk_space = true;  // false: the full value lists
};

struct GenerateOptions {
    std::size_t alternatives = 20;  // chosen route plus generated ones
    std::size_t bc_draws = 100;
    std::size_t membership_draws = 100;
};

struct ModelOptions {
    std::vector<estimation::Family> families = {estimation::Family::mnl, estimation::Family::cnl,
                                                estimation::Family::iap_mnl, estimation::Family::iap_cnl};
    std::vector<std::string> attributes;  // empty: every column of the choice-set file
    double model_scale = 1.0;
    double nest_scale = 2.0;
};

struct SimulateOptions {
    std::vector<simulation::FilterMode> modes = {simulation::FilterMode::low, simulation::FilterMode::random,
                                                 simulation::FilterMode::high};
    std::size_t seeds = 1;  // replications at seed, seed + 1, ...
};

struct VerifyOptions {
    std::size_t instances = 200;
    std::size_t max_alternatives = 5;
    std::size_t max_nests = 3;
    std::size_t max_order = 3;
};

// One JSON document drives every command. Relative paths resolve against the
// directory holding the config file.
struct PipelineConfig {
    Paths paths;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    vae::VaeHyperparams vae;
    SynthOptions synth;
    SearchOptions search;
    GenerateOptions generate;
    ModelOptions model;
    simulation::ExperimentConfig experiment;
    SimulateOptions simulate;
    VerifyOptions verify;

    std::uint64_t master_seed() const;  // ConfigError when unset
    void validate() const;
};

// Throws ConfigError for malformed JSON, unknown keys or wrong types.
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace iapgev::pipeline
