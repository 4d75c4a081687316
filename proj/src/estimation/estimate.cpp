#include "iapgev/estimation/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iapgev/data/csv.hpp"
#include "iapgev/error.hpp"

namespace iapgev::estimation {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(const std::vector<double>& g) {
    double n = 0.0;
    for (double v : g) n = std::max(n, std::abs(v));
    return n;
}

bool finite(const LikelihoodGradient& e) {
    if (!std::isfinite(e.value)) return false;
    return numeric::all_finite(e.gradient);
}

// Cholesky factorization with a relative pivot floor. Unidentified or
// collinear coefficients leave pivots at rounding level.
bool positive_definite(const numeric::DenseMatrix& a) {
    const std::size_t n = a.rows();
    double largest = 0.0;
    for (std::size_t j = 0; j < n; ++j) largest = std::max(largest, a(j, j));
    numeric::DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 1e-10 * largest)) return false;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return true;
}

}  // namespace

std::string_view stop_reason_name(StopReason r) noexcept {
    switch (r) {
        case StopReason::gradient: return "gradient";
        case StopReason::relative_change: return "relative-change";
        case StopReason::line_search: return "line-search";
        case StopReason::iteration_cap: return "iteration-cap";
    }
    return "?";
}

EstimationResult estimate(const Dataset& data, const ModelSpec& spec, std::vector<double> start,
                          const EstimationOptions& options) {
    spec.validate();
    if (data.empty()) throw DataError("cannot estimate on an empty dataset");
    const std::size_t K = spec.coefficients();
    if (start.size() != K) throw ShapeError("start vector has the wrong length");
    if (options.targets && options.targets->size() != K) throw ConfigError("one target per coefficient is required");

    EstimationResult res;
    res.names = spec.names;
    res.observations = data.size();
    const std::vector<double> zero(K, 0.0);
    res.ll0 = log_likelihood(data, zero, spec, options.workers);

    auto eval = [&](const std::vector<double>& b) { return log_likelihood_gradient(data, b, spec, options.workers); };
    std::vector<double> beta = std::move(start);
    LikelihoodGradient cur = eval(beta);
    if (!finite(cur)) throw NumericalError("log-likelihood is not finite at the starting coefficients");

    // Inverse Hessian approximation of -LL.
    numeric::DenseMatrix h_inv = numeric::DenseMatrix::identity(K);
    bool scaled = false;
    res.stop = StopReason::iteration_cap;
    std::size_t iter = 0;
    if (inf_norm(cur.gradient) < options.gradient_tolerance) {
        res.stop = StopReason::gradient;
        res.converged = true;
    }
    while (!res.converged && iter < options.max_iterations) {
        ++iter;
        // Ascent direction d = H (grad LL).
        std::vector<double> d(K, 0.0);
        for (std::size_t r = 0; r < K; ++r)
            for (std::size_t c = 0; c < K; ++c) d[r] += h_inv(r, c) * cur.gradient[c];
        double slope = dot(d, cur.gradient);
        if (!(slope > 0.0)) {
            h_inv = numeric::DenseMatrix::identity(K);
            d = cur.gradient;
            slope = dot(d, cur.gradient);
        }
        double step = 1.0;
        std::vector<double> trial(K);
        LikelihoodGradient next;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
            for (std::size_t a = 0; a < K; ++a) trial[a] = beta[a] + step * d[a];
            next = eval(trial);
            if (finite(next) && next.value >= cur.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.stop = StopReason::line_search;
            break;
        }
        std::vector<double> s(K), y(K);
        for (std::size_t a = 0; a < K; ++a) {
            s[a] = trial[a] - beta[a];
            y[a] = cur.gradient[a] - next.gradient[a];  // gradient change of -LL
        }
        const double change = std::abs(next.value - cur.value);
        const double scale = std::max(std::abs(cur.value), 1.0);
        beta = trial;
        cur = std::move(next);
        if (inf_norm(cur.gradient) < options.gradient_tolerance) {
            res.stop = StopReason::gradient;
            res.converged = true;
            break;
        }
        if (change <= options.relative_tolerance * scale) {
            res.stop = StopReason::relative_change;
            res.converged = true;
            break;
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            if (!scaled) {
                h_inv = numeric::DenseMatrix::identity(K);
                for (std::size_t a = 0; a < K; ++a) h_inv(a, a) = sy / dot(y, y);
                scaled = true;
            }
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            const double rho = 1.0 / sy;
            std::vector<double> hy(K, 0.0);
            for (std::size_t r = 0; r < K; ++r)
                for (std::size_t c = 0; c < K; ++c) hy[r] += h_inv(r, c) * y[c];
            const double yhy = dot(y, hy);
            for (std::size_t r = 0; r < K; ++r)
                for (std::size_t c = 0; c < K; ++c)
                    h_inv(r, c) += -rho * (hy[r] * s[c] + s[r] * hy[c]) + (rho * rho * yhy + rho) * s[r] * s[c];
        }
    }
    res.iterations = iter;
    res.beta = beta;
    res.gradient_norm = inf_norm(cur.gradient);
    res.ll_hat = log_likelihood(data, beta, spec, options.workers);

    // Hessian of LL by central differences of the gradient.
    numeric::DenseMatrix hess(K, K);
    for (std::size_t a = 0; a < K; ++a) {
        const double h = options.hessian_step * std::max(std::abs(beta[a]), 1.0);
        auto up = beta, down = beta;
        up[a] += h;
        down[a] -= h;
        const auto gu = eval(up).gradient, gd = eval(down).gradient;
        for (std::size_t r = 0; r < K; ++r) hess(r, a) = (gu[r] - gd[r]) / (2.0 * h);
    }
    numeric::DenseMatrix info(K, K);
    for (std::size_t r = 0; r < K; ++r)
        for (std::size_t c = 0; c < K; ++c) info(r, c) = -0.5 * (hess(r, c) + hess(c, r));
    res.std_error.assign(K, nan);
    if (positive_definite(info)) {
        res.covariance = numeric::inverse(info);
        res.std_errors_available = numeric::all_finite(res.covariance.entries());
    }
    if (res.std_errors_available)
        for (std::size_t a = 0; a < K; ++a) res.std_error[a] = std::sqrt(res.covariance(a, a));
    res.t_zero.assign(K, nan);
    for (std::size_t a = 0; a < K; ++a)
        if (res.std_errors_available) res.t_zero[a] = beta[a] / res.std_error[a];
    if (options.targets) {
        res.targets = *options.targets;
        res.t_target.assign(K, nan);
        for (std::size_t a = 0; a < K; ++a)
            if (res.std_errors_available) res.t_target[a] = (beta[a] - res.targets[a]) / res.std_error[a];
    }
    return res;
}

double evaluate(const Dataset& data, std::span<const double> beta, const ModelSpec& spec, std::size_t workers) {
    return log_likelihood(data, beta, spec, workers);
}

void write_report(std::ostream& out, const EstimationResult& r, const ModelSpec& spec) {
    using data::format_real;
    out << "# family: " << family_name(spec.family) << '\n';
    out << "# observations: " << r.observations << '\n';
    if (uses_nests(spec.family))
        out << "# scales: mu=" << format_real(spec.model_scale) << " mu_m=" << format_real(spec.nest_scale) << '\n';
    if (uses_perception(spec.family)) out << "# ll0: includes ln BC\n";
    out << "# converged: " << (r.converged ? "true" : "false") << '\n';
    out << "# stop: " << stop_reason_name(r.stop) << '\n';
    out << "# iterations: " << r.iterations << '\n';
    out << "# gradient_inf_norm: " << format_real(r.gradient_norm) << '\n';
    out << "# std_errors: " << (r.std_errors_available ? "available" : "unavailable") << '\n';
    out << "# LL0: " << format_real(r.ll0) << '\n';
    out << "# LLhat: " << format_real(r.ll_hat) << '\n';
    out << "# rho2: " << format_real(r.rho_squared()) << '\n';
    const bool targets = !r.targets.empty();
    out << "attribute,beta,std_error,t_zero";
    if (targets) out << ",target,t_target";
    out << '\n';
    for (std::size_t a = 0; a < r.beta.size(); ++a) {
        out << '"' << r.names[a] << "\"," << format_real(r.beta[a]) << ',' << format_real(r.std_error[a]) << ','
            << format_real(r.t_zero[a]);
        if (targets) out << ',' << format_real(r.targets[a]) << ',' << format_real(r.t_target[a]);
        out << '\n';
    }
}

}  // namespace iapgev::estimation
