#include "iapgev/numeric/finite_difference.hpp"

#include <algorithm>
#include <cmath>

#include "iapgev/error.hpp"

namespace iapgev::numeric {

std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> x,
                                               double step) {
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = point[i];
        point[i] = saved + step;
        const double up = f(point);
        point[i] = saved - step;
        const double down = f(point);
        point[i] = saved;
        out[i] = (up - down) / (2.0 * step);
    }
    return out;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
    if (a.size() != b.size()) throw ShapeError("max_relative_error: length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace iapgev::numeric
