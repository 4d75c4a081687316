#pragma once

#include <filesystem>
#include <ostream>

#include "iapgev/pipeline/config.hpp"

namespace iapgev::pipeline {

// Each command is a pure function of (inputs, config, seed). Reports go to
// config.paths.report, or to `out` when that is empty. Library errors
// propagate; the return value is the process exit status.

// Synthetic corpus with a train/test split and its metadata sidecar.
int cmd_synth(const PipelineConfig& config, std::ostream& out);

// Trains one model, writes checkpoint and trace, prints train/test sum of ln BC.
int cmd_train(const PipelineConfig& config, std::ostream& out);

// Random hyperparameter search ranked by test-set sum of ln BC. The best
// trial's model is written to `save_best` when that is non-empty.
int cmd_search(const PipelineConfig& config, std::ostream& out, const std::filesystem::path& save_best = {});

// One choice set per corpus observation: the observed route plus generated
// alternatives, each with ln BC and a nest-membership row.
int cmd_generate(const PipelineConfig& config, std::ostream& out);

// Every configured family on the training partition.
int cmd_estimate(const PipelineConfig& config, std::ostream& out);

// Training and test log-likelihoods per family, side by side.
int cmd_evaluate(const PipelineConfig& config, std::ostream& out);

// Consistency experiments for each configured filter mode and seed.
int cmd_simulate(const PipelineConfig& config, std::ostream& out);

// Generation-function property checks on random cross-nested instances.
// Returns 4 when any instance fails.
int cmd_verify_gev(const PipelineConfig& config, std::ostream& out);

}  // namespace iapgev::pipeline
