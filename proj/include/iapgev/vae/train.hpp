#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "iapgev/numeric/dense_matrix.hpp"
#include "iapgev/numeric/rng.hpp"
#include "iapgev/vae/model.hpp"

namespace iapgev::vae {

// Minibatch stochastic gradient ascent on the importance-weighted bound for
// hyperparams().max_iterations steps. Minibatches walk a shuffled epoch order
// and reshuffle when fewer than a full batch remain. Returns the minibatch
// bound (mean per observation) before each update. Throws DataError on empty
// data and DivergenceError when the bound or a weight stops being finite.
std::vector<double> train(VaeModel& model, const numeric::DenseMatrix& data, numeric::Rng& rng);

// Mean bound over rows with frozen weights, batch norm in evaluation mode.
double mean_bound(const VaeModel& model, const numeric::DenseMatrix& rows, std::size_t draws, numeric::Rng& rng);

// "iteration,bound" lines.
void write_trace(const std::filesystem::path& path, std::span<const double> trace);

}  // namespace iapgev::vae
