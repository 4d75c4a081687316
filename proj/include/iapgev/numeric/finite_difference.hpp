#pragma once

#include <functional>
#include <span>
#include <vector>

namespace iapgev::numeric {

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences, one coordinate at a time: (f(x + h e_i) - f(x - h e_i)) / 2h.
std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> x,
                                               double step = 1e-5);

// Largest elementwise |a - b| / max(|a|, |b|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8);

}  // namespace iapgev::numeric
