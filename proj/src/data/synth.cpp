#include "iapgev/data/synth.hpp"

#include <cmath>

#include "iapgev/error.hpp"
#include "iapgev/numeric/rng.hpp"
#include "iapgev/numeric/special.hpp"

namespace iapgev::data {

namespace {

struct Shape {
    std::array<double, synth_components> offsets;
    double width;
    double a0;  // Newton starting point for (a, ln b)
    double log_b0;
};

// Component offsets follow a "short and direct", "urban" and "long detour"
// pattern. The city node share needs two tight clusters near zero and one high
// cluster to reach its large coefficient of variation.
const std::array<Shape, 9> shapes{{
    {{-0.6, 0.4, 1.2}, 0.5, -0.07, 0.14},
    {{-0.7, 0.5, 1.0}, 0.5, 0.0, 0.13},
    {{-0.7, 0.5, 1.0}, 0.5, 0.0, 0.13},
    {{0.6, -0.4, -0.9}, 0.5, -0.04, 0.28},
    {{-2.0, -1.0, 2.0}, 0.2, -2.08, 0.70},
    {{-0.6, 0.3, 1.1}, 0.5, -0.01, 0.18},
    {{0.5, 0.0, -1.2}, 0.5, -0.03, 0.25},
    {{-0.5, 0.2, 1.0}, 0.5, -0.57, 0.64},
    {{-0.6, 0.4, 1.0}, 0.5, -0.02, 0.20},
}};

std::array<double, 2> residual(const SynthAttributeModel& m) {
    const auto mv = synth_moments(m);
    return {mv[0], mv[1] - 1.0};
}

}  // namespace

std::array<double, 2> synth_moments(const SynthAttributeModel& m) {
    double mean = 0.0, second = 0.0;
    for (std::size_t c = 0; c < synth_components; ++c) {
        const double loc = m.a + m.b * m.offsets[c] - m.lower;
        const double sd = m.b * m.width;
        const double cm = m.lower + numeric::truncnorm_mean(loc, sd);
        const double cv = numeric::truncnorm_variance(loc, sd);
        mean += synth_weights[c] * cm;
        second += synth_weights[c] * (cv + cm * cm);
    }
    return {mean, second - mean * mean};
}

std::vector<SynthAttributeModel> synth_calibration(const AttributeSchema& schema) {
    if (schema.size() != shapes.size()) throw SchemaError("synthetic corpus supports the route attribute schema only");
    std::vector<SynthAttributeModel> out;
    for (std::size_t d = 0; d < shapes.size(); ++d) {
        const Shape& s = shapes[d];
        const double lower = -schema[d].mean / schema[d].std;
        double a = s.a0, log_b = s.log_b0;
        auto model = [&](double aa, double lb) { return SynthAttributeModel{s.offsets, s.width, aa, std::exp(lb), lower}; };
        auto r = residual(model(a, log_b));
        for (int iter = 0; iter < 100 && std::hypot(r[0], r[1]) > 1e-14; ++iter) {
            const double h = 1e-7;
            const auto ra = residual(model(a + h, log_b));
            const auto rb = residual(model(a, log_b + h));
            const double j00 = (ra[0] - r[0]) / h, j10 = (ra[1] - r[1]) / h;
            const double j01 = (rb[0] - r[0]) / h, j11 = (rb[1] - r[1]) / h;
            const double det = j00 * j11 - j01 * j10;
            if (det == 0.0 || !std::isfinite(det)) break;
            const double da = -(j11 * r[0] - j01 * r[1]) / det;
            const double db = -(-j10 * r[0] + j00 * r[1]) / det;
            double t = 1.0;
            for (; t > 1e-6; t *= 0.5) {
                const auto trial = residual(model(a + t * da, log_b + t * db));
                if (std::hypot(trial[0], trial[1]) < std::hypot(r[0], r[1])) break;
            }
            if (t <= 1e-6) break;
            a += t * da;
            log_b += t * db;
            r = residual(model(a, log_b));
        }
        if (std::hypot(r[0], r[1]) > 1e-10)
            throw NumericalError("synthetic calibration failed for '" + schema[d].name + "'");
        out.push_back(model(a, log_b));
    }
    return out;
}

Corpus synth_corpus(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ConfigError("synthetic corpus needs at least one row");
    const AttributeSchema& schema = AttributeSchema::route_attributes();
    static const std::vector<SynthAttributeModel> models = synth_calibration(schema);
    numeric::Rng rng(seed);
    Corpus corpus;
    corpus.rows = numeric::DenseMatrix(n, schema.size());
    for (std::size_t r = 0; r < n; ++r) {
        const double u = rng.uniform();
        std::size_t c = 0;
        double acc = synth_weights[0];
        while (c + 1 < synth_components && u > acc) acc += synth_weights[++c];
        for (std::size_t d = 0; d < schema.size(); ++d) {
            const auto& m = models[d];
            const double z = numeric::sample_truncated_normal(m.a + m.b * m.offsets[c], m.b * m.width, m.lower, rng);
            corpus.rows(r, d) = std::max(0.0, schema[d].mean + schema[d].std * z);
        }
    }
    return corpus;
}

}  // namespace iapgev::data
