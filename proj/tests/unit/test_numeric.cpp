#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "iapgev/error.hpp"
#include "iapgev/numeric/dense_matrix.hpp"
#include "iapgev/numeric/finite_difference.hpp"
#include "iapgev/numeric/parallel.hpp"
#include "iapgev/numeric/rng.hpp"
#include "iapgev/numeric/special.hpp"
#include "iapgev/numeric/tape.hpp"

using namespace iapgev;
using namespace iapgev::numeric;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    DenseMatrix m(r, c);
    for (double& v : m.entries()) v = scale * rng.normal();
    return m;
}

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

// Projects a matrix-valued op onto a scalar with fixed random weights so every
// output coordinate contributes to the checked gradient.
Var project(Tape& t, Var v, std::uint64_t seed) {
    Rng rng(seed);
    const auto& val = t.value(v);
    return dot(t, v, t.constant(random_matrix(val.rows(), val.cols(), rng)));
}

// Splits a flat parameter vector into the op's input matrices.
using OpBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

double check_op(const std::vector<std::pair<std::size_t, std::size_t>>& shapes, const OpBuilder& op,
                Rng& rng, std::uint64_t projection_seed, double positive_shift = 0.0) {
    std::vector<double> flat;
    for (auto [r, c] : shapes)
        for (std::size_t i = 0; i < r * c; ++i) flat.push_back(rng.normal() + positive_shift);

    auto build = [&](Tape& t, std::span<const double> x, bool vars) {
        std::vector<Var> inputs;
        std::size_t offset = 0;
        for (auto [r, c] : shapes) {
            DenseMatrix m(r, c, std::vector<double>(x.begin() + offset, x.begin() + offset + r * c));
            offset += r * c;
            inputs.push_back(vars ? t.variable(std::move(m)) : t.constant(std::move(m)));
        }
        return std::pair{inputs, project(t, op(t, inputs), projection_seed)};
    };

    Tape tape;
    auto [inputs, out] = build(tape, flat, true);
    tape.backward(out);
    std::vector<double> analytic;
    for (Var v : inputs)
        for (double g : tape.grad(v).entries()) analytic.push_back(g);

    auto f = [&](std::span<const double> x) {
        Tape t;
        return t.scalar(build(t, x, false).second);
    };
    const auto numeric = finite_difference_gradient(f, flat, 1e-5);
    return max_relative_error(analytic, numeric, 1e-6);
}

}  // namespace

TEST_CASE("dense matrix construction validates entry count") {
    CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), ShapeError);
    const auto id = DenseMatrix::identity(3);
    CHECK(id(1, 1) == 1.0);
    CHECK(id(0, 1) == 0.0);
}

TEST_CASE("affine examples") {
    const std::vector<double> x{3.0, -1.0};
    const std::vector<double> zero_bias{0.0, 0.0};
    CHECK(affine(DenseMatrix::identity(2), zero_bias, x) == std::vector<double>{3.0, -1.0});

    const std::vector<double> bias{1.0, 2.0};
    CHECK(affine(DenseMatrix::zeros(2, 2), bias, x) == std::vector<double>{1.0, 2.0});

    CHECK_THROWS_AS(affine(DenseMatrix::zeros(2, 3), bias, x), ShapeError);
    CHECK_THROWS_AS(affine(DenseMatrix::zeros(3, 2), bias, x), ShapeError);
}

TEST_CASE("affine matches a naive triple-loop product") {
    Rng rng(11);
    const auto w = random_matrix(3, 3, rng);
    const auto b = random_vector(3, rng);
    const auto xs = random_matrix(3, 3, rng);  // three input columns

    for (std::size_t col = 0; col < 3; ++col) {
        std::vector<double> x{xs(0, col), xs(1, col), xs(2, col)};
        const auto got = affine(w, b, x);
        for (std::size_t i = 0; i < 3; ++i) {
            double expected = b[i];
            for (std::size_t k = 0; k < 3; ++k) expected += w(i, k) * x[k];
            CHECK(std::abs(got[i] - expected) < 1e-12);
        }
    }

    Tape tape;
    const auto out = affine(tape, tape.constant(xs.transposed()), tape.constant(w),
                            tape.constant(DenseMatrix::row(b)));
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t i = 0; i < 3; ++i) {
            double expected = b[i];
            for (std::size_t k = 0; k < 3; ++k) expected += w(i, k) * xs(k, r);
            CHECK(std::abs(tape.value(out)(r, i) - expected) < 1e-12);
        }
}

TEST_CASE("softmax examples") {
    const auto third = softmax(std::vector<double>{0.0, 0.0, 0.0});
    for (double p : third) CHECK(std::abs(p - 1.0 / 3.0) < 1e-15);

    const auto big = softmax(std::vector<double>{1000.0, 1000.0});
    CHECK(big[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(big[1] == doctest::Approx(0.5).epsilon(1e-15));

    const auto p = softmax(std::vector<double>{1.0, 2.0, 3.0});
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(std::abs(p[0] - std::exp(1.0) / z) < 1e-15);
    CHECK(std::abs(p[1] - std::exp(2.0) / z) < 1e-15);
    CHECK(std::abs(p[2] - std::exp(3.0) / z) < 1e-15);

    CHECK_THROWS_AS(softmax(std::vector<double>{}), ShapeError);
}

TEST_CASE("softmax sums to one and is shift invariant") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto x = random_vector(1 + rng.index(8), rng);
        for (double& v : x) v *= 10.0;
        const auto p = softmax(x);
        double total = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            total += v;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);

        const double c = 50.0 * rng.normal();
        auto shifted = x;
        for (double& v : shifted) v += c;
        const auto q = softmax(shifted);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-10);
    }
}

TEST_CASE("log_sum_exp examples and bounds") {
    CHECK(log_sum_exp(std::vector<double>{-3.25}) == -3.25);
    CHECK(std::abs(log_sum_exp(std::vector<double>{0.0, 0.0}) - std::log(2.0)) < 1e-15);

    const double tail = log_sum_exp(std::vector<double>{-1000.0, -1001.0});
    CHECK(std::isfinite(tail));
    CHECK(std::abs(tail - (-1000.0 + std::log1p(std::exp(-1.0)))) < 1e-12);

    CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), ShapeError);
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(log_sum_exp(std::vector<double>{ninf, 0.0}) == 0.0);
    CHECK(log_sum_exp(std::vector<double>{ninf, ninf}) == ninf);

    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        auto x = random_vector(1 + rng.index(10), rng);
        const double lse = log_sum_exp(x);
        double mx = x[0];
        for (double v : x) mx = std::max(mx, v);
        CHECK(lse >= mx);
        CHECK(lse <= mx + std::log(static_cast<double>(x.size())) + 1e-15);

        const double c = 100.0 * rng.normal();
        for (double& v : x) v += c;
        CHECK(std::abs(log_sum_exp(x) - (lse + c)) < 1e-10);
    }
}

TEST_CASE("normal density and distribution function") {
    CHECK(std::abs(std_normal_logpdf(0.0) + 0.5 * std::log(2.0 * std::numbers::pi)) < 1e-15);
    CHECK(std::abs(std_normal_logpdf(0.0) + 0.9189385) < 1e-7);
    CHECK(std::abs(std_normal_cdf(0.0) - 0.5) < 1e-12);

    // Composite Simpson integration of the density from -12 to 1.96.
    const int n = 20000;
    const double a = -12.0, b = 1.96, h = (b - a) / n;
    double acc = std::exp(std_normal_logpdf(a)) + std::exp(std_normal_logpdf(b));
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * std::exp(std_normal_logpdf(a + i * h));
    const double integral = acc * h / 3.0;
    CHECK(std::abs(std_normal_cdf(1.96) - integral) < 1e-9);
    CHECK(std::abs(std_normal_cdf(1.96) - 0.975) < 1e-4);

    double previous = 0.0;
    for (double x = -8.0; x <= 8.0; x += 0.01) {
        const double c = std_normal_cdf(x);
        CHECK(c >= previous);
        CHECK(c <= 1.0);
        previous = c;
    }

    // log Phi stays finite and matches the direct value where both are representable.
    CHECK(std::abs(log_std_normal_cdf(-5.0) - std::log(std_normal_cdf(-5.0))) < 1e-12);
    CHECK(std::abs(log_std_normal_cdf(-29.9) - log_std_normal_cdf(-30.1)) < 7.0);
    const double deep = log_std_normal_cdf(-40.0);
    CHECK(std::isfinite(deep));
    CHECK(std::abs(deep - (std_normal_logpdf(-40.0) - std::log(40.0))) < 1e-3);
    // Continuity across the switch to the asymptotic series.
    CHECK(std::abs(log_std_normal_cdf(-30.0 + 1e-9) - log_std_normal_cdf(-30.0 - 1e-9)) < 1e-6);
}

TEST_CASE("truncated normal helpers") {
    // Far from the boundary the truncation is negligible.
    const double x = 49.3, m = 50.0, s = 1.0;
    CHECK(std::abs(truncnorm_logpdf(x, m, s) - std_normal_logpdf(x - m)) < 1e-10);
    CHECK(truncnorm_logpdf(-0.1, 1.0, 1.0) == -std::numeric_limits<double>::infinity());
    // Centered: half-Normal doubles the density.
    CHECK(std::abs(truncnorm_logpdf(0.5, 0.0, 1.0) - (std::log(2.0) + std_normal_logpdf(0.5))) < 1e-14);
    CHECK(std::abs(truncnorm_mean(0.0, 1.0) - std::sqrt(2.0 / std::numbers::pi)) < 1e-14);
    CHECK(std::abs(truncnorm_variance(0.0, 1.0) - (1.0 - 2.0 / std::numbers::pi)) < 1e-14);
}

TEST_CASE("truncated normal sampler matches analytic moments on both paths") {
    for (double mean : {0.5, -2.5}) {  // rejection path, then tail path
        Rng rng(123);
        const int n = 100000;
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = sample_truncated_normal(mean, 1.0, 0.0, rng);
            REQUIRE(v >= 0.0);
            s1 += v;
            s2 += v * v;
        }
        const double emp_mean = s1 / n;
        const double emp_var = s2 / n - emp_mean * emp_mean;
        const double se = std::sqrt(truncnorm_variance(mean, 1.0) / n);
        CHECK(std::abs(emp_mean - truncnorm_mean(mean, 1.0)) < 4.0 * se);
        CHECK(std::abs(emp_var / truncnorm_variance(mean, 1.0) - 1.0) < 0.03);
    }
}

TEST_CASE("rng is deterministic and derived streams differ") {
    Rng a(42), b(42);
    for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
    Rng c = a.derive(1), d = a.derive(2), e = Rng(42).derive(1);
    const double cv = c.uniform();
    CHECK(cv != d.uniform());
    CHECK(cv == e.uniform());
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        CHECK(a.index(7) < 7);
    }
}

TEST_CASE("gradient examples") {
    const auto quad = gradient([](Tape& t, Var x) { return dot(t, x, x); }, std::vector<double>{1.0, 2.0});
    CHECK(quad == std::vector<double>{2.0, 4.0});

    const auto lse = gradient([](Tape& t, Var x) { return log_sum_exp(t, x); }, std::vector<double>{0.0, 0.0});
    CHECK(std::abs(lse[0] - 0.5) < 1e-15);
    CHECK(std::abs(lse[1] - 0.5) < 1e-15);

    CHECK_THROWS_AS(gradient([](Tape&, Var x) { return x; }, std::vector<double>{1.0, 2.0}), ContractError);
}

TEST_CASE("two-layer tanh MLP gradient matches finite differences") {
    Rng rng(77);
    const auto w1 = random_matrix(5, 4, rng, 0.7);
    const auto b1 = random_matrix(1, 5, rng, 0.1);
    const auto w2 = random_matrix(1, 5, rng, 0.7);
    const auto b2 = random_matrix(1, 1, rng, 0.1);
    auto mlp = [&](Tape& t, Var x) {
        auto h = tanh(t, affine(t, x, t.constant(w1), t.constant(b1)));
        auto o = affine(t, tanh(t, h), t.constant(w2), t.constant(b2));
        return sum(t, o);
    };
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = random_vector(4, rng);
        const auto g = gradient(mlp, x);
        const auto fd = finite_difference_gradient(
            [&](std::span<const double> p) {
                Tape t;
                return t.scalar(mlp(t, t.constant(DenseMatrix::row(p))));
            },
            x);
        CHECK(max_relative_error(g, fd, 1e-6) < 1e-5);
    }
}

TEST_CASE("every differentiable op matches finite differences on 100 seeded instances") {
    Rng rng(2024);
    const std::vector<double> stats_mean{0.3, -0.2, 0.1};
    const std::vector<double> stats_var{1.5, 0.7, 2.0};
    DenseMatrix trunc_data(4, 3);
    for (double& v : trunc_data.entries()) v = std::abs(rng.normal()) + 0.05;
    const std::vector<double> trunc_lower{-1.5, 0.0, -0.4};

    struct Case {
        const char* name;
        std::vector<std::pair<std::size_t, std::size_t>> shapes;
        OpBuilder op;
        double shift = 0.0;
    };
    const std::vector<Case> cases{
        {"affine", {{4, 3}, {2, 3}, {1, 2}}, [](Tape& t, const std::vector<Var>& in) { return affine(t, in[0], in[1], in[2]); }},
        {"tanh", {{3, 4}}, [](Tape& t, const std::vector<Var>& in) { return tanh(t, in[0]); }},
        {"exp", {{3, 2}}, [](Tape& t, const std::vector<Var>& in) { return exp(t, in[0]); }},
        {"mul", {{2, 3}, {2, 3}}, [](Tape& t, const std::vector<Var>& in) { return mul(t, in[0], in[1]); }},
        {"add", {{2, 3}, {2, 3}}, [](Tape& t, const std::vector<Var>& in) { return add(t, in[0], in[1]); }},
        {"softmax_rows", {{3, 4}}, [](Tape& t, const std::vector<Var>& in) { return softmax_rows(t, in[0]); }},
        {"log_sum_exp_rows", {{3, 4}}, [](Tape& t, const std::vector<Var>& in) { return log_sum_exp_rows(t, in[0]); }},
        {"log_sum_exp", {{2, 5}}, [](Tape& t, const std::vector<Var>& in) { return log_sum_exp(t, in[0]); }},
        {"repeat_rows", {{2, 3}}, [](Tape& t, const std::vector<Var>& in) { return repeat_rows(t, in[0], 3); }},
        {"gaussian_logpdf_rows", {{3, 2}, {3, 2}, {3, 2}},
         [](Tape& t, const std::vector<Var>& in) { return gaussian_logpdf_rows(t, in[0], in[1], scale(t, in[2], 0.3)); }},
        {"std_normal_logpdf_rows", {{3, 3}}, [](Tape& t, const std::vector<Var>& in) { return std_normal_logpdf_rows(t, in[0]); }},
        {"truncnorm_logpdf_rows", {{4, 3}},
         [&](Tape& t, const std::vector<Var>& in) { return truncnorm_logpdf_rows(t, trunc_data, in[0], 0.8); }},
        {"truncnorm_logpdf_rows with bounds", {{4, 3}},
         [&](Tape& t, const std::vector<Var>& in) {
             return truncnorm_logpdf_rows(t, trunc_data, in[0], 1.3, trunc_lower);
         }},
        {"batch_norm_train", {{6, 3}, {1, 3}, {1, 3}},
         [](Tape& t, const std::vector<Var>& in) { return batch_norm_train(t, in[0], in[1], in[2], 1e-5); }},
        {"batch_norm_eval", {{4, 3}, {1, 3}, {1, 3}},
         [&](Tape& t, const std::vector<Var>& in) {
             return batch_norm_eval(t, in[0], in[1], in[2], stats_mean, stats_var, 1e-5);
         }},
        {"clamp", {{3, 3}}, [](Tape& t, const std::vector<Var>& in) { return clamp(t, in[0], -10.0, 10.0); }},
    };

    for (const auto& c : cases) {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial)
            worst = std::max(worst, check_op(c.shapes, c.op, rng, 1000 + trial, c.shift));
        INFO(c.name << " worst relative error " << worst);
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("tape tanh agrees with std::tanh") {
    std::vector<double> xs;
    for (double x = -40.0; x <= 40.0; x += 0.0137) xs.push_back(x);
    for (double x : {0.0, -0.0, 1e-12, -1e-12, 9.99e-4, 1.001e-3, -1.001e-3, 1e300, -1e300}) xs.push_back(x);
    Tape t;
    const auto y = t.value(tanh(t, t.constant(DenseMatrix::row(xs))));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double ref = std::tanh(xs[i]);
        CHECK(std::abs(y(0, i) - ref) <= 5e-16);
        CHECK(std::signbit(y(0, i)) == std::signbit(ref));
    }
}

TEST_CASE("tape node ids strictly increase and shapes are checked") {
    Tape t;
    auto a = t.variable(DenseMatrix(2, 2, 1.0));
    auto b = t.constant(DenseMatrix(2, 3, 1.0));
    auto c = tanh(t, a);
    CHECK(a.id() < c.id());
    CHECK_THROWS_AS(add(t, a, b), ShapeError);
    CHECK_THROWS_AS(t.backward(c), ContractError);
    CHECK_FALSE(t.requires_grad(tanh(t, b)));
}

TEST_CASE("recording off yields bit-identical values") {
    Rng rng(3);
    const auto x = random_matrix(5, 4, rng);
    const auto w = random_matrix(3, 4, rng);
    const auto b = random_matrix(1, 3, rng);
    auto run = [&](bool record) {
        Tape t;
        t.set_recording(record);
        auto o = softmax_rows(t, tanh(t, affine(t, t.variable(x), t.variable(w), t.variable(b))));
        return t.value(o);
    };
    CHECK(run(true) == run(false));
}

TEST_CASE("solve and inverse") {
    DenseMatrix a(3, 3, std::vector<double>{4, 1, 0, 1, 3, 1, 0, 1, 2});
    const auto inv = inverse(a);
    const auto prod = multiply(a, inv);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)) < 1e-14);
    CHECK_THROWS_AS(inverse(DenseMatrix(2, 2, std::vector<double>{1, 2, 2, 4})), NumericalError);
}

TEST_CASE("parallel_for visits every index once regardless of worker count") {
    for (std::size_t workers : {1u, 2u, 5u}) {
        std::vector<int> hits(37, 0);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) CHECK(h == 1);
    }
    CHECK_THROWS_AS(parallel_for(4, 2, [](std::size_t i) {
                        if (i == 3) throw DataError("boom");
                    }),
                    DataError);
}
