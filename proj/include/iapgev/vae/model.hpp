#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iapgev/data/corpus.hpp"
#include "iapgev/numeric/dense_matrix.hpp"
#include "iapgev/numeric/rng.hpp"

namespace iapgev::vae {

struct VaeHyperparams {
    std::size_t latent_dim = 3;
    std::size_t encoder_hidden_layers = 2;
    std::size_t decoder_hidden_layers = 3;
    bool batch_norm = true;
    std::size_t minibatch_size = 100;
    double learning_rate = 1e-3;
    std::size_t mc_draws = 100;
    std::size_t max_iterations = 10000;
    double decoder_sigma = 1.0;
    std::size_t hidden_width = 16;

    void validate() const;
    bool operator==(const VaeHyperparams&) const = default;
};

inline constexpr double log_variance_min = -10.0;
inline constexpr double log_variance_max = 10.0;
inline constexpr double batch_norm_momentum = 0.1;
inline constexpr double batch_norm_epsilon = 1e-5;

struct Parameter {
    std::string name;
    numeric::DenseMatrix value;
};

// Running statistics of one batch-normalized hidden layer.
struct BatchNormState {
    std::vector<double> mean;
    std::vector<double> var;
    bool operator==(const BatchNormState&) const = default;
};

// Diagonal Gaussian posterior over the latent space.
struct Posterior {
    std::vector<double> mean;
    std::vector<double> log_std;

    std::vector<double> std() const;
};

// Encoder: D1 x [affine -> batch norm -> tanh], then a mean head and a
// log-variance head clamped to [-10, 10]. Decoder: softmax(z), then
// D2 x [affine -> batch norm -> tanh], then an affine map to the mean of a
// truncated Normal with fixed sigma. Each attribute a is truncated below at
// lower_bounds[a]; for z-scored attributes that is -mean/std, the image of 0.
class VaeModel {
public:
    // He-initialized weights, zero biases, unit batch-norm scales.
    VaeModel(const VaeHyperparams& hp, std::size_t attributes, numeric::Rng& rng);
    // Every weight and bias zero (batch-norm scales stay 1).
    static VaeModel zeros(const VaeHyperparams& hp, std::size_t attributes);

    const VaeHyperparams& hyperparams() const noexcept { return hp_; }
    std::size_t attributes() const noexcept { return attributes_; }
    std::size_t latent_dim() const noexcept { return hp_.latent_dim; }

    std::vector<Parameter>& parameters() noexcept { return params_; }
    const std::vector<Parameter>& parameters() const noexcept { return params_; }
    numeric::DenseMatrix& parameter(const std::string& name);
    const numeric::DenseMatrix& parameter(const std::string& name) const;

    std::vector<BatchNormState>& batch_norm_states() noexcept { return bn_; }
    const std::vector<BatchNormState>& batch_norm_states() const noexcept { return bn_; }

    const std::vector<double>& lower_bounds() const noexcept { return lower_; }
    void set_lower_bounds(std::vector<double> lower);

    // Constants that map absolute attributes into the model's space. Setting
    // them also sets the truncation bounds to -mean/std.
    const std::optional<data::Normalization>& normalization() const noexcept { return normalization_; }
    void set_normalization(data::Normalization n);

    std::size_t encoder_param_count() const noexcept { return encoder_params_; }
    std::size_t parameter_count() const;

    bool operator==(const VaeModel&) const;

private:
    VaeModel(const VaeHyperparams& hp, std::size_t attributes);
    void build(numeric::Rng* rng);

    VaeHyperparams hp_;
    std::size_t attributes_;
    std::vector<Parameter> params_;
    std::size_t encoder_params_ = 0;
    std::vector<BatchNormState> bn_;
    std::vector<double> lower_;
    std::optional<data::Normalization> normalization_;
};

}  // namespace iapgev::vae
