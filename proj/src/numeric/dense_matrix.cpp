#include "iapgev/numeric/dense_matrix.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "iapgev/error.hpp"

namespace iapgev::numeric {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
        throw ShapeError("matrix of " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                         " given " + std::to_string(entries_.size()) + " entries");
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

DenseMatrix DenseMatrix::row(std::span<const double> values) {
    return {1, values.size(), std::vector<double>(values.begin(), values.end())};
}

DenseMatrix DenseMatrix::column(std::span<const double> values) {
    return {values.size(), 1, std::vector<double>(values.begin(), values.end())};
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("multiply: inner dimensions differ");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row_span(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            auto b_row = b.row_span(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

std::vector<double> affine(const DenseMatrix& weight, std::span<const double> bias,
                           std::span<const double> x) {
    if (weight.cols() != x.size()) throw ShapeError("affine: weight columns != input length");
    if (weight.rows() != bias.size()) throw ShapeError("affine: weight rows != bias length");
    std::vector<double> out(bias.begin(), bias.end());
    for (std::size_t r = 0; r < weight.rows(); ++r) {
        auto w = weight.row_span(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) acc += w[c] * x[c];
        out[r] += acc;
    }
    return out;
}

DenseMatrix solve(DenseMatrix a, DenseMatrix b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.rows() != n) throw ShapeError("solve: expects square A and matching B");
    double scale = 0.0;
    for (double v : a.entries()) scale = std::max(scale, std::abs(v));
    const double tiny = 1e-14 * (scale > 0.0 ? scale : 1.0);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (!(std::abs(a(pivot, col)) > tiny)) throw NumericalError("solve: matrix is singular");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
            for (std::size_t c = 0; c < b.cols(); ++c) std::swap(b(pivot, c), b(col, c));
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            for (std::size_t c = 0; c < b.cols(); ++c) b(r, c) -= f * b(col, c);
        }
    }
    for (std::size_t ri = n; ri-- > 0;) {
        for (std::size_t c = 0; c < b.cols(); ++c) {
            double acc = b(ri, c);
            for (std::size_t k = ri + 1; k < n; ++k) acc -= a(ri, k) * b(k, c);
            b(ri, c) = acc / a(ri, ri);
        }
    }
    return b;
}

DenseMatrix inverse(const DenseMatrix& a) { return solve(a, DenseMatrix::identity(a.rows())); }

bool all_finite(std::span<const double> values) noexcept {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace iapgev::numeric
