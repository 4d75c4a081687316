#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "iapgev/numeric/tape.hpp"
#include "iapgev/vae/model.hpp"

namespace iapgev::vae {

enum class BatchNormMode { train, eval };

// Per-layer batch statistics gathered by a training-mode forward pass.
struct BatchStats {
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> var;
};

// Places every model parameter on the tape, as variables when `trainable`.
std::vector<numeric::Var> bind_parameters(numeric::Tape& tape, const VaeModel& model, bool trainable);

struct EncoderOutput {
    numeric::Var mean;
    numeric::Var log_std;
};

EncoderOutput encoder_forward(numeric::Tape& tape, const VaeModel& model, std::span<const numeric::Var> params,
                              numeric::Var x, BatchNormMode mode, BatchStats* stats = nullptr);
numeric::Var decoder_forward(numeric::Tape& tape, const VaeModel& model, std::span<const numeric::Var> params,
                             numeric::Var z, BatchNormMode mode, BatchStats* stats = nullptr);

// Log-likelihood of each latent row: (n*S) x L -> (n*S) x 1.
using LatentLogLikelihood = std::function<numeric::Var(numeric::Tape&, numeric::Var z)>;

// Importance-weighted bound per observation (n x 1) for a diagonal Gaussian
// posterior and a standard Normal prior. Draws S reparameterized latents per
// row, z = mean + exp(log_std) * eps, with eps filled row by row from `rng`.
numeric::Var importance_weighted_bound(numeric::Tape& tape, numeric::Var post_mean, numeric::Var post_log_std,
                                       std::size_t draws, numeric::Rng& rng, const LatentLogLikelihood& loglik);

// Sum over coordinates of the Normal(mean, sigma^2) log density truncated
// to [0, inf); -inf when any coordinate is negative.
double truncnorm_logpdf(std::span<const double> x, std::span<const double> mean, double sigma);

Posterior encode(const VaeModel& model, std::span<const double> j);
std::vector<double> reparameterize(const Posterior& posterior, numeric::Rng& rng);
std::vector<double> sample_posterior(const VaeModel& model, std::span<const double> j, numeric::Rng& rng);
std::vector<double> decode_mean(const VaeModel& model, std::span<const double> z);

// Batch evaluation of the bound objective: mean over rows of the per-row
// bound, with gradients for every parameter in model order.
struct BoundEvaluation {
    double value = 0.0;
    std::vector<double> per_row;
    std::vector<numeric::DenseMatrix> gradients;
    BatchStats stats;
};
BoundEvaluation evaluate_bound(const VaeModel& model, const numeric::DenseMatrix& rows, std::size_t draws,
                               numeric::Rng& rng, BatchNormMode mode, bool with_gradient);

// Stochastic lower bound on log q(j). Recorded with gradients enabled.
double iwae_bound(const VaeModel& model, std::span<const double> j, std::size_t draws, numeric::Rng& rng);

// ln BC(j): the same estimator with weights held fixed and nothing recorded.
double estimate_log_bc(const VaeModel& model, std::span<const double> j, std::size_t draws, numeric::Rng& rng);

// Row i uses Rng(derive_seed(seed, i)); results do not depend on `workers`.
std::vector<double> estimate_log_bc_rows(const VaeModel& model, const numeric::DenseMatrix& rows, std::size_t draws,
                                         std::uint64_t seed, std::size_t workers = 1);

// z ~ N(0, I), then a truncated-Normal draw around the decoded mean.
std::vector<double> generate_alternative(const VaeModel& model, numeric::Rng& rng);

// Average of softmax(z) over posterior draws.
std::vector<double> nest_membership(const Posterior& posterior, std::size_t draws, numeric::Rng& rng);
std::vector<double> nest_membership(const VaeModel& model, std::span<const double> j, numeric::Rng& rng,
                                    std::size_t draws);

}  // namespace iapgev::vae
