#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "iapgev/data/corpus.hpp"

namespace iapgev::data {

inline constexpr std::size_t synth_components = 3;
inline constexpr std::array<double, synth_components> synth_weights{0.5, 0.3, 0.2};

// Attribute d of component c is Normal(a_d + b_d * offset_cd, (b_d * width_d)^2)
// truncated below at -mean_d / std_d in normalized space, which is 0 in
// absolute space. (a_d, b_d) solve for mixture mean 0 and variance 1.
struct SynthAttributeModel {
    std::array<double, synth_components> offsets;
    double width;
    double a;
    double b;
    double lower;
};

std::vector<SynthAttributeModel> synth_calibration(const AttributeSchema& schema = AttributeSchema::route_attributes());

// Mean and variance of one calibrated attribute in normalized space.
std::array<double, 2> synth_moments(const SynthAttributeModel& m);

Corpus synth_corpus(std::size_t n, std::uint64_t seed);

}  // namespace iapgev::data
