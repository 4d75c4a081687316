#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "iapgev/data/schema.hpp"
#include "iapgev/numeric/dense_matrix.hpp"

namespace iapgev::data {

enum class Partition : std::uint8_t { train, test };

// Per-attribute z-score constants. std uses the population (1/n) definition,
// so fitted data maps to mean 0 and standard deviation 1 exactly.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> std;

    static Normalization from_schema(const AttributeSchema& schema);
    static Normalization fit(const numeric::DenseMatrix& rows);

    std::size_t size() const noexcept { return mean.size(); }
    void validate() const;
    bool operator==(const Normalization&) const = default;
};

numeric::DenseMatrix normalize(const numeric::DenseMatrix& absolute, const Normalization& n);
// Exact inverse of normalize, clamped at 0 from below.
numeric::DenseMatrix denormalize(const numeric::DenseMatrix& normalized, const Normalization& n);

struct SplitInfo {
    std::uint64_t seed;
    double train_fraction;
};

// Chosen-route observations in absolute attribute space.
struct Corpus {
    AttributeSchema schema = AttributeSchema::route_attributes();
    numeric::DenseMatrix rows;                 // n x schema.size()
    std::vector<Partition> assignment;         // empty until split
    std::optional<SplitInfo> split_info;
    std::optional<Normalization> normalization;  // fitted on the training rows

    std::size_t size() const noexcept { return rows.rows(); }
    bool is_split() const noexcept { return !assignment.empty(); }
    std::vector<std::size_t> indices(Partition p) const;
    numeric::DenseMatrix rows_of(Partition p) const;
    // Stored constants, or constants fitted on every row when unsplit.
    Normalization effective_normalization() const;
};

numeric::DenseMatrix select_rows(const numeric::DenseMatrix& m, const std::vector<std::size_t>& rows);

// Shuffle with the seed, then the first floor(fraction * n) rows train.
// Normalization constants are refitted on the training rows.
Corpus split(Corpus corpus, double train_fraction, std::uint64_t seed);

numeric::DenseMatrix normalize(const Corpus& corpus);

}  // namespace iapgev::data
