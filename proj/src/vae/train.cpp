#include "iapgev/vae/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "iapgev/data/csv.hpp"
#include "iapgev/error.hpp"
#include "iapgev/vae/inference.hpp"

namespace iapgev::vae {

using numeric::DenseMatrix;

std::vector<double> train(VaeModel& model, const DenseMatrix& data, numeric::Rng& rng) {
    if (data.rows() == 0) throw DataError("training data is empty");
    if (data.cols() != model.attributes()) throw ShapeError("training data width differs from the model");
    const auto& hp = model.hyperparams();
    const std::size_t n = data.rows();
    const std::size_t batch = std::min(hp.minibatch_size, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle = [&] {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    };
    shuffle();
    std::size_t position = 0;

    std::vector<double> trace;
    trace.reserve(hp.max_iterations);
    DenseMatrix rows(batch, data.cols());
    for (std::size_t iter = 0; iter < hp.max_iterations; ++iter) {
        if (position + batch > n) {
            shuffle();
            position = 0;
        }
        for (std::size_t r = 0; r < batch; ++r)
            std::copy_n(data.row_span(order[position + r]).begin(), data.cols(), rows.row_span(r).begin());
        position += batch;

        auto eval = evaluate_bound(model, rows, hp.mc_draws, rng, BatchNormMode::train, true);
        if (!std::isfinite(eval.value))
            throw DivergenceError(iter, "bound became non-finite at iteration " + std::to_string(iter));
        trace.push_back(eval.value);

        auto& params = model.parameters();
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto w = params[p].value.entries();
            const auto g = eval.gradients[p].entries();
            for (std::size_t k = 0; k < w.size(); ++k) {
                w[k] += hp.learning_rate * g[k];
                if (!std::isfinite(w[k]))
                    throw DivergenceError(iter, "weight " + params[p].name + " became non-finite at iteration " +
                                                    std::to_string(iter));
            }
        }
        auto& states = model.batch_norm_states();
        for (std::size_t l = 0; l < states.size(); ++l)
            for (std::size_t c = 0; c < states[l].mean.size(); ++c) {
                states[l].mean[c] += batch_norm_momentum * (eval.stats.mean[l][c] - states[l].mean[c]);
                states[l].var[c] += batch_norm_momentum * (eval.stats.var[l][c] - states[l].var[c]);
            }
    }
    return trace;
}

double mean_bound(const VaeModel& model, const DenseMatrix& rows, std::size_t draws, numeric::Rng& rng) {
    return evaluate_bound(model, rows, draws, rng, BatchNormMode::eval, false).value;
}

void write_trace(const std::filesystem::path& path, std::span<const double> trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "iteration,bound\n";
    for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << data::format_real(trace[i]) << '\n';
}

}  // namespace iapgev::vae
