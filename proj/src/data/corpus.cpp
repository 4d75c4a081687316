#include "iapgev/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "iapgev/error.hpp"
#include "iapgev/numeric/rng.hpp"

namespace iapgev::data {

using numeric::DenseMatrix;

Normalization Normalization::from_schema(const AttributeSchema& schema) {
    Normalization n;
    for (const auto& a : schema.attributes()) {
        n.mean.push_back(a.mean);
        n.std.push_back(a.std);
    }
    return n;
}

Normalization Normalization::fit(const DenseMatrix& rows) {
    if (rows.rows() == 0) throw SchemaError("cannot fit normalization on zero rows");
    Normalization n{std::vector<double>(rows.cols(), 0.0), std::vector<double>(rows.cols(), 0.0)};
    const double count = static_cast<double>(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r)
        for (std::size_t c = 0; c < rows.cols(); ++c) n.mean[c] += rows(r, c);
    for (double& m : n.mean) m /= count;
    for (std::size_t r = 0; r < rows.rows(); ++r)
        for (std::size_t c = 0; c < rows.cols(); ++c) n.std[c] += (rows(r, c) - n.mean[c]) * (rows(r, c) - n.mean[c]);
    for (double& s : n.std) s = std::sqrt(s / count);
    n.validate();
    return n;
}

void Normalization::validate() const {
    if (mean.size() != std.size()) throw SchemaError("normalization mean/std lengths differ");
    for (std::size_t c = 0; c < std.size(); ++c)
        if (!(std[c] > 0.0) || !std::isfinite(std[c]) || !std::isfinite(mean[c]))
            throw SchemaError("attribute " + std::to_string(c) + " has zero or invalid standard deviation");
}

DenseMatrix normalize(const DenseMatrix& absolute, const Normalization& n) {
    n.validate();
    if (absolute.cols() != n.size()) throw ShapeError("normalize: column count does not match constants");
    DenseMatrix out(absolute.rows(), absolute.cols());
    for (std::size_t r = 0; r < absolute.rows(); ++r)
        for (std::size_t c = 0; c < absolute.cols(); ++c) out(r, c) = (absolute(r, c) - n.mean[c]) / n.std[c];
    return out;
}

DenseMatrix denormalize(const DenseMatrix& normalized, const Normalization& n) {
    n.validate();
    if (normalized.cols() != n.size()) throw ShapeError("denormalize: column count does not match constants");
    DenseMatrix out(normalized.rows(), normalized.cols());
    for (std::size_t r = 0; r < normalized.rows(); ++r)
        for (std::size_t c = 0; c < normalized.cols(); ++c)
            out(r, c) = std::max(0.0, normalized(r, c) * n.std[c] + n.mean[c]);
    return out;
}

std::vector<std::size_t> Corpus::indices(Partition p) const {
    if (!is_split()) throw ContractError("corpus has not been split");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == p) out.push_back(i);
    return out;
}

DenseMatrix Corpus::rows_of(Partition p) const { return select_rows(rows, indices(p)); }

Normalization Corpus::effective_normalization() const {
    if (normalization) return *normalization;
    return Normalization::fit(rows);
}

DenseMatrix select_rows(const DenseMatrix& m, const std::vector<std::size_t>& rows) {
    DenseMatrix out(rows.size(), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= m.rows()) throw IndexError("row index out of range");
        std::copy_n(m.row_span(rows[r]).begin(), m.cols(), out.row_span(r).begin());
    }
    return out;
}

Corpus split(Corpus corpus, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
    const std::size_t n = corpus.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    numeric::Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    const auto train_count = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    corpus.assignment.assign(n, Partition::test);
    for (std::size_t k = 0; k < train_count; ++k) corpus.assignment[order[k]] = Partition::train;
    corpus.split_info = SplitInfo{seed, train_fraction};
    corpus.normalization = Normalization::fit(corpus.rows_of(Partition::train));
    return corpus;
}

DenseMatrix normalize(const Corpus& corpus) { return normalize(corpus.rows, corpus.effective_normalization()); }

}  // namespace iapgev::data
