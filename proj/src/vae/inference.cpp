#include "iapgev/vae/inference.hpp"

#include <cmath>
#include <limits>

#include "iapgev/error.hpp"
#include "iapgev/numeric/parallel.hpp"
#include "iapgev/numeric/special.hpp"

namespace iapgev::vae {

using numeric::DenseMatrix;
using numeric::Tape;
using numeric::Var;

namespace {

Var hidden_stack(Tape& tape, const VaeModel& model, std::span<const Var> params, std::size_t& cursor,
                 std::size_t& bn_index, Var h, std::size_t layers, BatchNormMode mode, BatchStats* stats) {
    const bool bn = model.hyperparams().batch_norm;
    for (std::size_t l = 0; l < layers; ++l) {
        h = numeric::affine(tape, h, params[cursor], params[cursor + 1]);
        cursor += 2;
        if (bn) {
            const Var gamma = params[cursor], beta = params[cursor + 1];
            cursor += 2;
            if (mode == BatchNormMode::train) {
                std::vector<double> m, v;
                h = numeric::batch_norm_train(tape, h, gamma, beta, batch_norm_epsilon, &m, &v);
                if (stats) {
                    stats->mean.push_back(std::move(m));
                    stats->var.push_back(std::move(v));
                }
            } else {
                const auto& state = model.batch_norm_states()[bn_index];
                h = numeric::batch_norm_eval(tape, h, gamma, beta, state.mean, state.var, batch_norm_epsilon);
            }
            ++bn_index;
        }
        h = numeric::tanh(tape, h);
    }
    return h;
}

void check_length(std::span<const double> v, std::size_t expected, const char* what) {
    if (v.size() != expected)
        throw ShapeError(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(expected));
}

DenseMatrix row_matrix(std::span<const double> v) { return DenseMatrix(1, v.size(), {v.begin(), v.end()}); }

std::vector<double> first_row(const DenseMatrix& m) { return {m.row_span(0).begin(), m.row_span(0).end()}; }

}  // namespace

std::vector<Var> bind_parameters(Tape& tape, const VaeModel& model, bool trainable) {
    std::vector<Var> out;
    out.reserve(model.parameters().size());
    for (const auto& p : model.parameters()) out.push_back(trainable ? tape.variable(p.value) : tape.constant(p.value));
    return out;
}

EncoderOutput encoder_forward(Tape& tape, const VaeModel& model, std::span<const Var> params, Var x,
                              BatchNormMode mode, BatchStats* stats) {
    if (tape.value(x).cols() != model.attributes()) throw ShapeError("encoder input width differs from the model");
    std::size_t cursor = 0, bn_index = 0;
    const auto& hp = model.hyperparams();
    Var h = hidden_stack(tape, model, params, cursor, bn_index, x, hp.encoder_hidden_layers, mode, stats);
    const Var mean = numeric::affine(tape, h, params[cursor], params[cursor + 1]);
    const Var log_var = numeric::clamp(tape, numeric::affine(tape, h, params[cursor + 2], params[cursor + 3]),
                                       log_variance_min, log_variance_max);
    return {mean, numeric::scale(tape, log_var, 0.5)};
}

Var decoder_forward(Tape& tape, const VaeModel& model, std::span<const Var> params, Var z, BatchNormMode mode,
                    BatchStats* stats) {
    if (tape.value(z).cols() != model.latent_dim()) throw ShapeError("decoder input width differs from the latent dimension");
    const auto& hp = model.hyperparams();
    std::size_t cursor = model.encoder_param_count();
    std::size_t bn_index = hp.batch_norm ? hp.encoder_hidden_layers : 0;
    Var h = numeric::softmax_rows(tape, z);
    h = hidden_stack(tape, model, params, cursor, bn_index, h, hp.decoder_hidden_layers, mode, stats);
    return numeric::affine(tape, h, params[cursor], params[cursor + 1]);
}

Var importance_weighted_bound(Tape& tape, Var post_mean, Var post_log_std, std::size_t draws, numeric::Rng& rng,
                              const LatentLogLikelihood& loglik) {
    if (draws < 1) throw ParameterError("number of draws S must be at least 1");
    const auto& mv = tape.value(post_mean);
    const std::size_t n = mv.rows(), latent = mv.cols();
    DenseMatrix eps(n * draws, latent);
    for (double& e : eps.entries()) e = rng.normal();
    const Var mean_rep = numeric::repeat_rows(tape, post_mean, draws);
    const Var log_std_rep = numeric::repeat_rows(tape, post_log_std, draws);
    const Var z = numeric::add(tape, mean_rep,
                               numeric::mul(tape, numeric::exp(tape, log_std_rep), tape.constant(std::move(eps))));
    const Var log_prior = numeric::std_normal_logpdf_rows(tape, z);
    const Var log_post = numeric::gaussian_logpdf_rows(tape, z, mean_rep, log_std_rep);
    const Var log_lik = loglik(tape, z);
    const Var log_w =
        numeric::add(tape, numeric::add(tape, log_prior, log_lik), numeric::scale(tape, log_post, -1.0));
    const Var per_row = numeric::log_sum_exp_rows(tape, numeric::reshape(tape, log_w, n, draws));
    return numeric::add_scalar(tape, per_row, -std::log(static_cast<double>(draws)));
}

double truncnorm_logpdf(std::span<const double> x, std::span<const double> mean, double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("truncated Normal sigma must be positive");
    if (x.size() != mean.size()) throw ShapeError("truncnorm_logpdf: length mismatch");
    double total = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        if (x[a] < 0.0) return -std::numeric_limits<double>::infinity();
        total += numeric::truncnorm_logpdf(x[a], mean[a], sigma);
    }
    return total;
}

Posterior encode(const VaeModel& model, std::span<const double> j) {
    check_length(j, model.attributes(), "alternative");
    Tape tape;
    tape.set_recording(false);
    const auto params = bind_parameters(tape, model, false);
    const auto out = encoder_forward(tape, model, params, tape.constant(row_matrix(j)), BatchNormMode::eval);
    return {first_row(tape.value(out.mean)), first_row(tape.value(out.log_std))};
}

std::vector<double> reparameterize(const Posterior& posterior, numeric::Rng& rng) {
    if (posterior.mean.size() != posterior.log_std.size()) throw ShapeError("posterior mean/log_std lengths differ");
    std::vector<double> z(posterior.mean.size());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = posterior.mean[k] + std::exp(posterior.log_std[k]) * rng.normal();
    return z;
}

std::vector<double> sample_posterior(const VaeModel& model, std::span<const double> j, numeric::Rng& rng) {
    return reparameterize(encode(model, j), rng);
}

std::vector<double> decode_mean(const VaeModel& model, std::span<const double> z) {
    check_length(z, model.latent_dim(), "latent sample");
    Tape tape;
    tape.set_recording(false);
    const auto params = bind_parameters(tape, model, false);
    return first_row(tape.value(decoder_forward(tape, model, params, tape.constant(row_matrix(z)), BatchNormMode::eval)));
}

BoundEvaluation evaluate_bound(const VaeModel& model, const DenseMatrix& rows, std::size_t draws, numeric::Rng& rng,
                               BatchNormMode mode, bool with_gradient) {
    if (rows.rows() == 0) throw DataError("bound evaluation needs at least one row");
    if (rows.cols() != model.attributes()) throw ShapeError("rows have a different attribute count than the model");
    if (draws < 1) throw ParameterError("number of draws S must be at least 1");
    Tape tape;
    tape.set_recording(with_gradient);
    const auto params = bind_parameters(tape, model, with_gradient);
    BoundEvaluation result;
    BatchStats* stats = mode == BatchNormMode::train ? &result.stats : nullptr;
    const auto enc = encoder_forward(tape, model, params, tape.constant(rows), mode, stats);

    DenseMatrix repeated(rows.rows() * draws, rows.cols());
    for (std::size_t r = 0; r < rows.rows(); ++r)
        for (std::size_t s = 0; s < draws; ++s)
            std::copy_n(rows.row_span(r).begin(), rows.cols(), repeated.row_span(r * draws + s).begin());
    const double sigma = model.hyperparams().decoder_sigma;
    const auto& lower = model.lower_bounds();
    auto loglik = [&](Tape& t, Var z) {
        return numeric::truncnorm_logpdf_rows(t, repeated, decoder_forward(t, model, params, z, mode, stats), sigma,
                                              lower);
    };
    const Var per_row = importance_weighted_bound(tape, enc.mean, enc.log_std, draws, rng, loglik);
    const Var objective = numeric::mean(tape, per_row);
    result.value = tape.scalar(objective);
    result.per_row.assign(tape.value(per_row).entries().begin(), tape.value(per_row).entries().end());
    if (with_gradient) {
        tape.backward(objective);
        for (const Var& p : params) result.gradients.push_back(tape.grad(p));
    }
    return result;
}

double iwae_bound(const VaeModel& model, std::span<const double> j, std::size_t draws, numeric::Rng& rng) {
    check_length(j, model.attributes(), "alternative");
    return evaluate_bound(model, row_matrix(j), draws, rng, BatchNormMode::eval, true).value;
}

double estimate_log_bc(const VaeModel& model, std::span<const double> j, std::size_t draws, numeric::Rng& rng) {
    check_length(j, model.attributes(), "alternative");
    return evaluate_bound(model, row_matrix(j), draws, rng, BatchNormMode::eval, false).value;
}

std::vector<double> estimate_log_bc_rows(const VaeModel& model, const DenseMatrix& rows, std::size_t draws,
                                         std::uint64_t seed, std::size_t workers) {
    std::vector<double> out(rows.rows());
    numeric::parallel_for(rows.rows(), workers, [&](std::size_t i) {
        numeric::Rng rng(numeric::derive_seed(seed, i));
        out[i] = estimate_log_bc(model, rows.row_span(i), draws, rng);
    });
    return out;
}

std::vector<double> generate_alternative(const VaeModel& model, numeric::Rng& rng) {
    std::vector<double> z(model.latent_dim());
    for (double& v : z) v = rng.normal();
    const auto mean = decode_mean(model, z);
    const double sigma = model.hyperparams().decoder_sigma;
    std::vector<double> x(mean.size());
    for (std::size_t a = 0; a < x.size(); ++a)
        x[a] = numeric::sample_truncated_normal(mean[a], sigma, model.lower_bounds()[a], rng);
    return x;
}

std::vector<double> nest_membership(const Posterior& posterior, std::size_t draws, numeric::Rng& rng) {
    if (draws < 1) throw ParameterError("nest membership needs at least one draw");
    std::vector<double> alpha(posterior.mean.size(), 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
        const auto p = numeric::softmax(reparameterize(posterior, rng));
        for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] += p[k];
    }
    for (double& a : alpha) a /= static_cast<double>(draws);
    return alpha;
}

std::vector<double> nest_membership(const VaeModel& model, std::span<const double> j, numeric::Rng& rng,
                                    std::size_t draws) {
    return nest_membership(encode(model, j), draws, rng);
}

}  // namespace iapgev::vae
