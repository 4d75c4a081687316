#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "iapgev/numeric/dense_matrix.hpp"

namespace iapgev::numeric {

// Handle to a node on a Tape.
class Var {
public:
    Var() = default;
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return id_ != npos; }

private:
    friend class Tape;
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    explicit Var(std::size_t id) : id_(id) {}
    std::size_t id_ = npos;
};

// Reverse-mode differentiation over matrix-valued nodes. Every node is
// appended after its inputs, so node ids strictly increase along any path and
// a single reverse sweep visits each node once. A tape is built fresh for each
// forward pass and is confined to one thread.
class Tape {
public:
    // Propagates the gradient of node `self` into the gradients of its inputs.
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Var constant(DenseMatrix value);
    Var variable(DenseMatrix value);

    // Appends an op result. `backward` is kept only when some input requires
    // a gradient and recording is enabled.
    Var record(DenseMatrix value, std::span<const Var> inputs, Backward backward);

    const DenseMatrix& value(Var v) const;
    double scalar(Var v) const;
    bool requires_grad(Var v) const;

    // Gradient of the last backward() output with respect to `v`. Zero when
    // `v` does not influence the output.
    const DenseMatrix& grad(Var v) const;

    // Mutable gradient accumulator, allocated on first use. For op authors.
    DenseMatrix& grad_accumulator(std::size_t id);
    const DenseMatrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
    const DenseMatrix& value_of(std::size_t id) const { return nodes_[id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    // Seeds d(output)/d(output) = 1 and sweeps backward. `output` must be 1x1.
    void backward(Var output);

    // With recording off no backward closures are stored; values are computed
    // exactly as with recording on.
    void set_recording(bool on) noexcept { recording_ = on; }
    bool recording() const noexcept { return recording_; }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        DenseMatrix value;
        DenseMatrix grad;
        Backward backward;
        bool requires_grad = false;
    };

    const Node& node(Var v) const;

    std::vector<Node> nodes_;
    bool recording_ = true;
};

// --- Primitive operations. Shapes follow the batch-of-rows convention. ---

// input n x k, weight m x k, bias 1 x m  ->  n x m  (each row: W x + b)
Var affine(Tape& tape, Var input, Var weight, Var bias);
Var tanh(Tape& tape, Var x);
Var exp(Tape& tape, Var x);
Var add(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, double factor);
Var add_scalar(Tape& tape, Var x, double shift);
Var clamp(Tape& tape, Var x, double lo, double hi);
Var sum(Tape& tape, Var x);
Var mean(Tape& tape, Var x);
Var dot(Tape& tape, Var a, Var b);
Var reshape(Tape& tape, Var x, std::size_t rows, std::size_t cols);
// Each row repeated `times` times consecutively.
Var repeat_rows(Tape& tape, Var x, std::size_t times);

Var softmax_rows(Tape& tape, Var x);
// n x k -> n x 1
Var log_sum_exp_rows(Tape& tape, Var x);
// Any shape -> 1 x 1
Var log_sum_exp(Tape& tape, Var x);

// Row sums of the diagonal Gaussian log density N(x; mean, exp(log_std)^2).
Var gaussian_logpdf_rows(Tape& tape, Var x, Var mean, Var log_std);
// Row sums of the standard Normal log density.
Var std_normal_logpdf_rows(Tape& tape, Var x);
// Row sums of the Normal(mean, sigma^2) log density truncated below at
// `lower` per column (0 when empty). `x` is data (no gradient); -inf for rows
// with a coordinate under its bound.
Var truncnorm_logpdf_rows(Tape& tape, const DenseMatrix& x, Var mean, double sigma,
                          std::span<const double> lower = {});

// Column-wise batch normalization with per-batch statistics (training mode).
// The biased batch mean and variance are written to the optional outputs.
Var batch_norm_train(Tape& tape, Var x, Var gamma, Var beta, double epsilon,
                     std::vector<double>* batch_mean = nullptr,
                     std::vector<double>* batch_var = nullptr);
// Column-wise normalization with fixed statistics (evaluation mode).
Var batch_norm_eval(Tape& tape, Var x, Var gamma, Var beta, std::span<const double> mean,
                    std::span<const double> var, double epsilon);

// Reverse-mode gradient of a scalar function of a row vector.
// Throws ContractError when f does not return a 1 x 1 node.
std::vector<double> gradient(const std::function<Var(Tape&, Var)>& f,
                             std::span<const double> x);

}  // namespace iapgev::numeric
