#include "iapgev/vae/model.hpp"

#include <cmath>
#include <limits>

#include "iapgev/error.hpp"

namespace iapgev::vae {

using numeric::DenseMatrix;

void VaeHyperparams::validate() const {
    if (latent_dim < 1) throw ParameterError("latent dimension must be at least 1");
    if (minibatch_size < 1) throw ParameterError("minibatch size must be at least 1");
    if (mc_draws < 1) throw ParameterError("number of Monte Carlo draws S must be at least 1");
    if (hidden_width < 1 && (encoder_hidden_layers > 0 || decoder_hidden_layers > 0))
        throw ParameterError("hidden width must be at least 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ParameterError("learning rate must be finite and non-negative");
    if (!(decoder_sigma > 0.0) || !std::isfinite(decoder_sigma)) throw ParameterError("decoder sigma must be positive");
}

std::vector<double> Posterior::std() const {
    std::vector<double> out;
    for (double l : log_std) out.push_back(std::exp(l));
    return out;
}

VaeModel::VaeModel(const VaeHyperparams& hp, std::size_t attributes) : hp_(hp), attributes_(attributes) {
    hp_.validate();
    if (attributes_ < 1) throw ShapeError("model needs at least one attribute");
    lower_.assign(attributes_, 0.0);
}

VaeModel::VaeModel(const VaeHyperparams& hp, std::size_t attributes, numeric::Rng& rng) : VaeModel(hp, attributes) {
    build(&rng);
}

VaeModel VaeModel::zeros(const VaeHyperparams& hp, std::size_t attributes) {
    VaeModel m(hp, attributes);
    m.build(nullptr);
    return m;
}

void VaeModel::build(numeric::Rng* rng) {
    params_.clear();
    bn_.clear();
    auto weight = [&](const std::string& name, std::size_t out, std::size_t in) {
        DenseMatrix w(out, in);
        if (rng) {
            const double scale = std::sqrt(2.0 / static_cast<double>(in));
            for (double& v : w.entries()) v = scale * rng->normal();
        }
        params_.push_back({name + ".weight", std::move(w)});
        params_.push_back({name + ".bias", DenseMatrix(1, out)});
    };
    auto hidden = [&](const std::string& prefix, std::size_t layers, std::size_t in) {
        for (std::size_t l = 0; l < layers; ++l) {
            const std::string name = prefix + ".h" + std::to_string(l);
            weight(name, hp_.hidden_width, in);
            if (hp_.batch_norm) {
                params_.push_back({name + ".gamma", DenseMatrix(1, hp_.hidden_width, 1.0)});
                params_.push_back({name + ".beta", DenseMatrix(1, hp_.hidden_width)});
                bn_.push_back({std::vector<double>(hp_.hidden_width, 0.0), std::vector<double>(hp_.hidden_width, 1.0)});
            }
            in = hp_.hidden_width;
        }
        return in;
    };
    const std::size_t enc_out = hidden("enc", hp_.encoder_hidden_layers, attributes_);
    weight("enc.mean", hp_.latent_dim, enc_out);
    weight("enc.logvar", hp_.latent_dim, enc_out);
    encoder_params_ = params_.size();
    const std::size_t dec_out = hidden("dec", hp_.decoder_hidden_layers, hp_.latent_dim);
    weight("dec.out", attributes_, dec_out);
}

DenseMatrix& VaeModel::parameter(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return p.value;
    throw ParameterError("unknown parameter '" + name + "'");
}

const DenseMatrix& VaeModel::parameter(const std::string& name) const {
    return const_cast<VaeModel*>(this)->parameter(name);
}

void VaeModel::set_lower_bounds(std::vector<double> lower) {
    if (lower.size() != attributes_) throw ShapeError("lower bounds length differs from the attribute count");
    for (double l : lower)
        if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) throw ParameterError("invalid lower bound");
    lower_ = std::move(lower);
}

void VaeModel::set_normalization(data::Normalization n) {
    n.validate();
    if (n.size() != attributes_) throw ShapeError("normalization length differs from the attribute count");
    std::vector<double> lower;
    for (std::size_t a = 0; a < n.size(); ++a) lower.push_back(-n.mean[a] / n.std[a]);
    set_lower_bounds(std::move(lower));
    normalization_ = std::move(n);
}

std::size_t VaeModel::parameter_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p.value.entries().size();
    return total;
}

bool VaeModel::operator==(const VaeModel& o) const {
    if (!(hp_ == o.hp_) || attributes_ != o.attributes_ || params_.size() != o.params_.size() || bn_ != o.bn_ ||
        lower_ != o.lower_ || normalization_ != o.normalization_)
        return false;
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name != o.params_[i].name || !(params_[i].value == o.params_[i].value)) return false;
    return true;
}

}  // namespace iapgev::vae
