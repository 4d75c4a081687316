#include "iapgev/numeric/tape.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "iapgev/error.hpp"
#include "iapgev/numeric/special.hpp"

namespace iapgev::numeric {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
    }
}

void require_row_vector(const DenseMatrix& v, std::size_t cols, const char* op) {
    if (v.rows() != 1 || v.cols() != cols) {
        throw ShapeError(std::string(op) + ": expected a 1x" + std::to_string(cols) + " row vector");
    }
}

template <std::size_t N>
Var record_op(Tape& tape, DenseMatrix value, const std::array<Var, N>& inputs, Tape::Backward fn) {
    return tape.record(std::move(value), std::span<const Var>(inputs), std::move(fn));
}

}  // namespace

Var Tape::constant(DenseMatrix value) {
    nodes_.push_back(Node{std::move(value), {}, {}, false});
    return Var(nodes_.size() - 1);
}

Var Tape::variable(DenseMatrix value) {
    nodes_.push_back(Node{std::move(value), {}, {}, true});
    return Var(nodes_.size() - 1);
}

Var Tape::record(DenseMatrix value, std::span<const Var> inputs, Backward backward) {
    bool needs = false;
    for (Var in : inputs) {
        if (!in.valid() || in.id() >= nodes_.size()) throw ContractError("tape: unknown input node");
        needs = needs || nodes_[in.id()].requires_grad;
    }
    Node n{std::move(value), {}, {}, needs && recording_};
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.id() >= nodes_.size()) throw ContractError("tape: unknown node");
    return nodes_[v.id()];
}

const DenseMatrix& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
    const auto& val = node(v).value;
    if (val.size() != 1) throw ContractError("tape: node is not a scalar");
    return val(0, 0);
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

const DenseMatrix& Tape::grad(Var v) const {
    auto& n = const_cast<Node&>(node(v));
    if (n.grad.empty() && !n.value.empty()) n.grad = DenseMatrix(n.value.rows(), n.value.cols());
    return n.grad;
}

DenseMatrix& Tape::grad_accumulator(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.empty()) n.grad = DenseMatrix(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::backward(Var output) {
    const auto& out = node(output);
    if (out.value.size() != 1) throw ContractError("backward: output is not a scalar");
    for (auto& n : nodes_) n.grad = DenseMatrix();
    grad_accumulator(output.id())(0, 0) = 1.0;
    for (std::size_t id = output.id() + 1; id-- > 0;) {
        auto& n = nodes_[id];
        if (n.backward && !n.grad.empty()) n.backward(*this, id);
    }
}

namespace {

// (1 - e^{-2|x|}) / (1 + e^{-2|x|}) costs one exp against std::tanh's expm1.
// Near zero the subtraction cancels, so small inputs keep std::tanh.
double fast_tanh(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-3) return std::tanh(x);
    const double e = std::exp(-2.0 * ax);
    return std::copysign((1.0 - e) / (1.0 + e), x);
}

}  // namespace

Var affine(Tape& tape, Var input, Var weight, Var bias) {
    const auto& x = tape.value(input);
    const auto& w = tape.value(weight);
    const auto& b = tape.value(bias);
    if (w.cols() != x.cols()) throw ShapeError("affine: weight columns != input width");
    require_row_vector(b, w.rows(), "affine bias");
    const std::size_t n = x.rows(), k = x.cols(), m = w.rows();
    // Output index innermost so the loop vectorizes; each output still sums
    // over c in ascending order.
    const DenseMatrix wt = w.transposed();
    DenseMatrix out(n, m);
    for (std::size_t r = 0; r < n; ++r) {
        auto xr = x.row_span(r);
        double* orow = out.row_span(r).data();
        for (std::size_t c = 0; c < k; ++c) {
            const double xc = xr[c];
            const double* wc = wt.row_span(c).data();
            for (std::size_t o = 0; o < m; ++o) orow[o] += wc[o] * xc;
        }
        for (std::size_t o = 0; o < m; ++o) orow[o] += b(0, o);
    }
    const std::size_t xi = input.id(), wi = weight.id(), bi = bias.id();
    return record_op<3>(tape, std::move(out), {input, weight, bias},
                        [xi, wi, bi, n, k, m](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& x = t.value_of(xi);
        const auto& w = t.value_of(wi);
        if (t.needs_grad(xi)) {
            auto& dx = t.grad_accumulator(xi);
            for (std::size_t r = 0; r < n; ++r) {
                double* dxr = dx.row_span(r).data();
                for (std::size_t o = 0; o < m; ++o) {
                    const double go = g(r, o);
                    const double* wr = w.row_span(o).data();
                    for (std::size_t c = 0; c < k; ++c) dxr[c] += go * wr[c];
                }
            }
        }
        if (t.needs_grad(wi)) {
            auto& dw = t.grad_accumulator(wi);
            for (std::size_t r = 0; r < n; ++r) {
                const double* xr = x.row_span(r).data();
                for (std::size_t o = 0; o < m; ++o) {
                    const double go = g(r, o);
                    double* dwr = dw.row_span(o).data();
                    for (std::size_t c = 0; c < k; ++c) dwr[c] += go * xr[c];
                }
            }
        }
        if (t.needs_grad(bi)) {
            auto& db = t.grad_accumulator(bi);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t o = 0; o < m; ++o) db(0, o) += g(r, o);
        }
    });
}

Var tanh(Tape& tape, Var x) {
    DenseMatrix out = tape.value(x);
    for (double& v : out.entries()) v = fast_tanh(v);
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi](Tape& t, std::size_t self) {
        const auto g = t.grad_of(self).entries();
        const auto y = t.value_of(self).entries();
        auto dx = t.grad_accumulator(xi).entries();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

Var exp(Tape& tape, Var x) {
    DenseMatrix out = tape.value(x);
    for (double& v : out.entries()) v = std::exp(v);
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi](Tape& t, std::size_t self) {
        const auto g = t.grad_of(self).entries();
        const auto y = t.value_of(self).entries();
        auto dx = t.grad_accumulator(xi).entries();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * y[i];
    });
}

Var add(Tape& tape, Var a, Var b) {
    require_same_shape(tape.value(a), tape.value(b), "add");
    DenseMatrix out = tape.value(a);
    const auto bv = tape.value(b).entries();
    auto o = out.entries();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
    const std::size_t ai = a.id(), bi = b.id();
    return record_op<2>(tape, std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
        const auto g = t.grad_of(self).entries();
        for (std::size_t id : {ai, bi}) {
            if (!t.needs_grad(id)) continue;
            auto d = t.grad_accumulator(id).entries();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
        }
    });
}

Var mul(Tape& tape, Var a, Var b) {
    require_same_shape(tape.value(a), tape.value(b), "mul");
    DenseMatrix out = tape.value(a);
    const auto bv = tape.value(b).entries();
    auto o = out.entries();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
    const std::size_t ai = a.id(), bi = b.id();
    return record_op<2>(tape, std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
        const auto g = t.grad_of(self).entries();
        const auto av = t.value_of(ai).entries();
        const auto bv = t.value_of(bi).entries();
        if (t.needs_grad(ai)) {
            auto d = t.grad_accumulator(ai).entries();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * bv[i];
        }
        if (t.needs_grad(bi)) {
            auto d = t.grad_accumulator(bi).entries();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * av[i];
        }
    });
}

Var scale(Tape& tape, Var x, double factor) {
    DenseMatrix out = tape.value(x);
    for (double& v : out.entries()) v *= factor;
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi, factor](Tape& t, std::size_t self) {
        const auto g = t.grad_of(self).entries();
        auto dx = t.grad_accumulator(xi).entries();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * g[i];
    });
}

Var add_scalar(Tape& tape, Var x, double shift) {
    DenseMatrix out = tape.value(x);
    for (double& v : out.entries()) v += shift;
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi](Tape& t, std::size_t self) {
        const auto g = t.grad_of(self).entries();
        auto dx = t.grad_accumulator(xi).entries();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i];
    });
}

Var clamp(Tape& tape, Var x, double lo, double hi) {
    DenseMatrix out = tape.value(x);
    for (double& v : out.entries()) v = std::clamp(v, lo, hi);
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi, lo, hi](Tape& t, std::size_t self) {
        const auto g = t.grad_of(self).entries();
        const auto xv = t.value_of(xi).entries();
        auto dx = t.grad_accumulator(xi).entries();
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (xv[i] > lo && xv[i] < hi) dx[i] += g[i];
    });
}

Var sum(Tape& tape, Var x) {
    double acc = 0.0;
    for (double v : tape.value(x).entries()) acc += v;
    const std::size_t xi = x.id();
    return record_op<1>(tape, DenseMatrix(1, 1, acc), {x}, [xi](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)(0, 0);
        for (double& d : t.grad_accumulator(xi).entries()) d += g;
    });
}

Var mean(Tape& tape, Var x) {
    const auto& xv = tape.value(x);
    if (xv.empty()) throw ShapeError("mean: empty input");
    return scale(tape, sum(tape, x), 1.0 / static_cast<double>(xv.size()));
}

Var dot(Tape& tape, Var a, Var b) { return sum(tape, mul(tape, a, b)); }

Var reshape(Tape& tape, Var x, std::size_t rows, std::size_t cols) {
    const auto& xv = tape.value(x);
    if (rows * cols != xv.size()) throw ShapeError("reshape: entry count changes");
    DenseMatrix out(rows, cols, xv.data());
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi](Tape& t, std::size_t self) {
        const auto g = t.grad_of(self).entries();
        auto dx = t.grad_accumulator(xi).entries();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i];
    });
}

Var repeat_rows(Tape& tape, Var x, std::size_t times) {
    const auto& xv = tape.value(x);
    if (times == 0) throw ShapeError("repeat_rows: zero repetitions");
    const std::size_t n = xv.rows(), k = xv.cols();
    DenseMatrix out(n * times, k);
    for (std::size_t r = 0; r < n; ++r) {
        auto src = xv.row_span(r);
        for (std::size_t s = 0; s < times; ++s) std::copy(src.begin(), src.end(), out.row_span(r * times + s).begin());
    }
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi, n, k, times](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& dx = t.grad_accumulator(xi);
        for (std::size_t r = 0; r < n; ++r) {
            auto d = dx.row_span(r);
            for (std::size_t s = 0; s < times; ++s) {
                auto gr = g.row_span(r * times + s);
                for (std::size_t c = 0; c < k; ++c) d[c] += gr[c];
            }
        }
    });
}

Var softmax_rows(Tape& tape, Var x) {
    const auto& xv = tape.value(x);
    if (xv.cols() == 0) throw ShapeError("softmax_rows: empty rows");
    DenseMatrix out(xv.rows(), xv.cols());
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        auto sm = softmax(xv.row_span(r));
        std::copy(sm.begin(), sm.end(), out.row_span(r).begin());
    }
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& y = t.value_of(self);
        auto& dx = t.grad_accumulator(xi);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            auto gr = g.row_span(r);
            auto yr = y.row_span(r);
            double inner = 0.0;
            for (std::size_t c = 0; c < yr.size(); ++c) inner += gr[c] * yr[c];
            auto d = dx.row_span(r);
            for (std::size_t c = 0; c < yr.size(); ++c) d[c] += yr[c] * (gr[c] - inner);
        }
    });
}

Var log_sum_exp_rows(Tape& tape, Var x) {
    const auto& xv = tape.value(x);
    if (xv.cols() == 0) throw ShapeError("log_sum_exp_rows: empty rows");
    DenseMatrix out(xv.rows(), 1);
    for (std::size_t r = 0; r < xv.rows(); ++r) out(r, 0) = log_sum_exp(xv.row_span(r));
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& y = t.value_of(self);
        const auto& xv = t.value_of(xi);
        auto& dx = t.grad_accumulator(xi);
        for (std::size_t r = 0; r < xv.rows(); ++r) {
            if (!std::isfinite(y(r, 0))) continue;
            auto xr = xv.row_span(r);
            auto d = dx.row_span(r);
            for (std::size_t c = 0; c < xr.size(); ++c) d[c] += g(r, 0) * std::exp(xr[c] - y(r, 0));
        }
    });
}

Var log_sum_exp(Tape& tape, Var x) {
    const auto& xv = tape.value(x);
    return log_sum_exp_rows(tape, reshape(tape, x, 1, xv.size()));
}

Var gaussian_logpdf_rows(Tape& tape, Var x, Var mean_v, Var log_std) {
    const auto& xv = tape.value(x);
    const auto& mv = tape.value(mean_v);
    const auto& lv = tape.value(log_std);
    require_same_shape(xv, mv, "gaussian_logpdf_rows");
    require_same_shape(xv, lv, "gaussian_logpdf_rows");
    DenseMatrix out(xv.rows(), 1);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < xv.cols(); ++c) {
            const double u = (xv(r, c) - mv(r, c)) * std::exp(-lv(r, c));
            acc += -log_sqrt_2pi - lv(r, c) - 0.5 * u * u;
        }
        out(r, 0) = acc;
    }
    const std::size_t xi = x.id(), mi = mean_v.id(), li = log_std.id();
    return record_op<3>(tape, std::move(out), {x, mean_v, log_std}, [xi, mi, li](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& xv = t.value_of(xi);
        const auto& mv = t.value_of(mi);
        const auto& lv = t.value_of(li);
        DenseMatrix* dx = t.needs_grad(xi) ? &t.grad_accumulator(xi) : nullptr;
        DenseMatrix* dm = t.needs_grad(mi) ? &t.grad_accumulator(mi) : nullptr;
        DenseMatrix* dl = t.needs_grad(li) ? &t.grad_accumulator(li) : nullptr;
        for (std::size_t r = 0; r < xv.rows(); ++r) {
            const double gr = g(r, 0);
            for (std::size_t c = 0; c < xv.cols(); ++c) {
                const double inv_sigma = std::exp(-lv(r, c));
                const double u = (xv(r, c) - mv(r, c)) * inv_sigma;
                if (dx) (*dx)(r, c) -= gr * u * inv_sigma;
                if (dm) (*dm)(r, c) += gr * u * inv_sigma;
                if (dl) (*dl)(r, c) += gr * (u * u - 1.0);
            }
        }
    });
}

Var std_normal_logpdf_rows(Tape& tape, Var x) {
    const auto& xv = tape.value(x);
    DenseMatrix out(xv.rows(), 1);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        double acc = 0.0;
        for (double v : xv.row_span(r)) acc += std_normal_logpdf(v);
        out(r, 0) = acc;
    }
    const std::size_t xi = x.id();
    return record_op<1>(tape, std::move(out), {x}, [xi](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& xv = t.value_of(xi);
        auto& dx = t.grad_accumulator(xi);
        for (std::size_t r = 0; r < xv.rows(); ++r)
            for (std::size_t c = 0; c < xv.cols(); ++c) dx(r, c) -= g(r, 0) * xv(r, c);
    });
}

Var truncnorm_logpdf_rows(Tape& tape, const DenseMatrix& x, Var mean_v, double sigma,
                          std::span<const double> lower) {
    if (!(sigma > 0.0)) throw ParameterError("truncnorm_logpdf_rows: sigma must be positive");
    const auto& mv = tape.value(mean_v);
    require_same_shape(x, mv, "truncnorm_logpdf_rows");
    if (!lower.empty() && lower.size() != x.cols()) throw ShapeError("truncnorm_logpdf_rows: lower bound width");
    std::vector<double> low(x.cols(), 0.0);
    if (!lower.empty()) low.assign(lower.begin(), lower.end());
    const double log_sigma = std::log(sigma);
    DenseMatrix out(x.rows(), 1);
    // d/dmean of the normalizer is the lower hazard at (mean - low) / sigma;
    // it is kept from the forward pass rather than recomputed.
    DenseMatrix hazard(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            if (x(r, c) < low[c]) {
                acc = neg_inf;
                break;
            }
            const double u = (x(r, c) - mv(r, c)) / sigma;
            const double v = (mv(r, c) - low[c]) / sigma;
            const double log_cdf = log_std_normal_cdf(v);
            hazard(r, c) = std::exp(std_normal_logpdf(v) - log_cdf);
            acc += std_normal_logpdf(u) - log_sigma - log_cdf;
        }
        out(r, 0) = acc;
    }
    const std::size_t mi = mean_v.id();
    DenseMatrix data = x;
    return record_op<1>(tape, std::move(out), {mean_v},
                        [mi, sigma, data = std::move(data), hazard = std::move(hazard)](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& y = t.value_of(self);
        const auto& mv = t.value_of(mi);
        auto& dm = t.grad_accumulator(mi);
        for (std::size_t r = 0; r < data.rows(); ++r) {
            if (!std::isfinite(y(r, 0))) continue;
            for (std::size_t c = 0; c < data.cols(); ++c) {
                const double u = (data(r, c) - mv(r, c)) / sigma;
                dm(r, c) += g(r, 0) * (u - hazard(r, c)) / sigma;
            }
        }
    });
}

Var batch_norm_train(Tape& tape, Var x, Var gamma, Var beta, double epsilon,
                     std::vector<double>* batch_mean, std::vector<double>* batch_var) {
    const auto& xv = tape.value(x);
    const std::size_t n = xv.rows(), k = xv.cols();
    if (n == 0) throw ShapeError("batch_norm_train: empty batch");
    require_row_vector(tape.value(gamma), k, "batch_norm gamma");
    require_row_vector(tape.value(beta), k, "batch_norm beta");
    std::vector<double> mu(k, 0.0), var(k, 0.0), inv(k);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) mu[c] += xv(r, c);
    for (double& m : mu) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            const double d = xv(r, c) - mu[c];
            var[c] += d * d;
        }
    for (std::size_t c = 0; c < k; ++c) {
        var[c] /= static_cast<double>(n);
        inv[c] = 1.0 / std::sqrt(var[c] + epsilon);
    }
    DenseMatrix normalized(n, k);
    DenseMatrix out(n, k);
    const auto& gv = tape.value(gamma);
    const auto& bv = tape.value(beta);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            normalized(r, c) = (xv(r, c) - mu[c]) * inv[c];
            out(r, c) = gv(0, c) * normalized(r, c) + bv(0, c);
        }
    if (batch_mean) *batch_mean = mu;
    if (batch_var) *batch_var = var;
    const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
    return record_op<3>(tape, std::move(out), {x, gamma, beta},
                        [xi, gi, bi, n, k, inv = std::move(inv), normalized = std::move(normalized)](
                            Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& gv = t.value_of(gi);
        std::vector<double> sum_g(k, 0.0), sum_gx(k, 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < k; ++c) {
                sum_g[c] += g(r, c);
                sum_gx[c] += g(r, c) * normalized(r, c);
            }
        if (t.needs_grad(gi)) {
            auto& dg = t.grad_accumulator(gi);
            for (std::size_t c = 0; c < k; ++c) dg(0, c) += sum_gx[c];
        }
        if (t.needs_grad(bi)) {
            auto& db = t.grad_accumulator(bi);
            for (std::size_t c = 0; c < k; ++c) db(0, c) += sum_g[c];
        }
        if (t.needs_grad(xi)) {
            auto& dx = t.grad_accumulator(xi);
            const double nn = static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < k; ++c) {
                    dx(r, c) += gv(0, c) * inv[c] / nn *
                                (nn * g(r, c) - sum_g[c] - normalized(r, c) * sum_gx[c]);
                }
        }
    });
}

Var batch_norm_eval(Tape& tape, Var x, Var gamma, Var beta, std::span<const double> mean_c,
                    std::span<const double> var_c, double epsilon) {
    const auto& xv = tape.value(x);
    const std::size_t n = xv.rows(), k = xv.cols();
    require_row_vector(tape.value(gamma), k, "batch_norm gamma");
    require_row_vector(tape.value(beta), k, "batch_norm beta");
    if (mean_c.size() != k || var_c.size() != k) throw ShapeError("batch_norm_eval: statistics width");
    std::vector<double> mu(mean_c.begin(), mean_c.end()), inv(k);
    for (std::size_t c = 0; c < k; ++c) inv[c] = 1.0 / std::sqrt(var_c[c] + epsilon);
    const auto& gv = tape.value(gamma);
    const auto& bv = tape.value(beta);
    DenseMatrix out(n, k);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) out(r, c) = gv(0, c) * (xv(r, c) - mu[c]) * inv[c] + bv(0, c);
    const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
    return record_op<3>(tape, std::move(out), {x, gamma, beta},
                        [xi, gi, bi, n, k, mu = std::move(mu), inv = std::move(inv)](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& xv = t.value_of(xi);
        const auto& gv = t.value_of(gi);
        DenseMatrix* dx = t.needs_grad(xi) ? &t.grad_accumulator(xi) : nullptr;
        DenseMatrix* dg = t.needs_grad(gi) ? &t.grad_accumulator(gi) : nullptr;
        DenseMatrix* db = t.needs_grad(bi) ? &t.grad_accumulator(bi) : nullptr;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < k; ++c) {
                const double xhat = (xv(r, c) - mu[c]) * inv[c];
                if (dx) (*dx)(r, c) += g(r, c) * gv(0, c) * inv[c];
                if (dg) (*dg)(0, c) += g(r, c) * xhat;
                if (db) (*db)(0, c) += g(r, c);
            }
    });
}

std::vector<double> gradient(const std::function<Var(Tape&, Var)>& f, std::span<const double> x) {
    Tape tape;
    const Var input = tape.variable(DenseMatrix::row(x));
    const Var out = f(tape, input);
    if (tape.value(out).size() != 1) throw ContractError("gradient: function output is not scalar");
    tape.backward(out);
    const auto g = tape.grad(input).entries();
    return {g.begin(), g.end()};
}

}  // namespace iapgev::numeric
