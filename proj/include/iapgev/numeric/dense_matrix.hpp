#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace iapgev::numeric {

// Row-major dense matrix of doubles. A row vector is a 1 x n matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols, 0.0}; }
    static DenseMatrix identity(std::size_t n);
    static DenseMatrix row(std::span<const double> values);
    static DenseMatrix column(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

    std::span<double> row_span(std::size_t r) { return {entries_.data() + r * cols_, cols_}; }
    std::span<const double> row_span(std::size_t r) const { return {entries_.data() + r * cols_, cols_}; }

    std::span<double> entries() noexcept { return entries_; }
    std::span<const double> entries() const noexcept { return entries_; }
    const std::vector<double>& data() const noexcept { return entries_; }

    bool same_shape(const DenseMatrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    DenseMatrix transposed() const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

// W x + b for a single vector x.
std::vector<double> affine(const DenseMatrix& weight, std::span<const double> bias,
                           std::span<const double> x);

// Solves A X = B by partial-pivot LU; throws NumericalError when A is singular.
DenseMatrix solve(DenseMatrix a, DenseMatrix b);
DenseMatrix inverse(const DenseMatrix& a);

bool all_finite(std::span<const double> values) noexcept;

}  // namespace iapgev::numeric
