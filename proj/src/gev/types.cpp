#include "iapgev/gev/types.hpp"

#include <string>
#include <utility>

#include "iapgev/error.hpp"

namespace iapgev::gev {

PerceptionVector PerceptionVector::from_weights(std::span<const double> bc) {
    PerceptionVector out;
    out.log_bc.reserve(bc.size());
    for (double w : bc) {
        if (std::isnan(w) || w < 0.0) throw ParameterError("perception weights must be non-negative");
        out.log_bc.push_back(w == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(w));
    }
    return out;
}

NestStructure::NestStructure(double model_scale, std::vector<double> nest_scales, numeric::DenseMatrix inclusion)
    : model_scale_(model_scale), nest_scales_(std::move(nest_scales)), inclusion_(std::move(inclusion)) {
    if (!(model_scale_ > 0.0) || !std::isfinite(model_scale_)) throw StructureError("model scale mu must be positive");
    if (nest_scales_.empty()) throw StructureError("at least one nest is required");
    if (inclusion_.cols() != nest_scales_.size())
        throw StructureError("inclusion matrix has " + std::to_string(inclusion_.cols()) + " columns for " +
                             std::to_string(nest_scales_.size()) + " nests");
    for (std::size_t m = 0; m < nest_scales_.size(); ++m) {
        const double s = nest_scales_[m];
        if (!(s > 0.0) || !std::isfinite(s)) throw StructureError("nest scale " + std::to_string(m) + " must be positive");
        if (s < model_scale_) throw StructureError("nest scale " + std::to_string(m) + " is below the model scale");
    }
    for (std::size_t j = 0; j < inclusion_.rows(); ++j) {
        double total = 0.0;
        for (std::size_t m = 0; m < inclusion_.cols(); ++m) {
            const double a = inclusion_(j, m);
            if (!(a >= 0.0 && a <= 1.0))
                throw StructureError("inclusion alpha(" + std::to_string(j) + "," + std::to_string(m) +
                                     ") outside [0, 1]");
            total += a;
        }
        if (!(total > 0.0)) throw StructureError("alternative " + std::to_string(j) + " belongs to no nest");
    }
}

NestStructure NestStructure::single_nest(std::size_t alternatives, double model_scale) {
    return {model_scale, {model_scale}, numeric::DenseMatrix(alternatives, 1, 1.0)};
}

}  // namespace iapgev::gev
