#pragma once

#include <cmath>

#include "iapgev/numeric/rng.hpp"
#include "iapgev/numeric/special.hpp"
#include "iapgev/numeric/tape.hpp"
#include "iapgev/vae/inference.hpp"

namespace iapgev::testing {

// z ~ N(0, 1), x | z ~ N(z, s^2), so x ~ N(0, 1 + s^2). The proposal is the
// identity encoder N(x, 1), which differs from the exact posterior, so the
// bound has a real gap that closes as S grows.
struct LinearGaussian {
    double noise_sd = 0.5;

    double log_marginal(double x) const {
        const double var = 1.0 + noise_sd * noise_sd;
        return -numeric::log_sqrt_2pi - 0.5 * std::log(var) - 0.5 * x * x / var;
    }

    double bound(double x, std::size_t draws, numeric::Rng& rng, bool record = false) const {
        numeric::Tape tape;
        tape.set_recording(record);
        const auto mean = tape.constant(numeric::DenseMatrix(1, 1, x));
        const auto log_std = tape.constant(numeric::DenseMatrix(1, 1, 0.0));
        const double log_s = std::log(noise_sd);
        auto loglik = [&](numeric::Tape& t, numeric::Var z) {
            const std::size_t rows = t.value(z).rows();
            return numeric::gaussian_logpdf_rows(t, t.constant(numeric::DenseMatrix(rows, 1, x)), z,
                                                 t.constant(numeric::DenseMatrix(rows, 1, log_s)));
        };
        return tape.scalar(vae::importance_weighted_bound(tape, mean, log_std, draws, rng, loglik));
    }
};

}  // namespace iapgev::testing
