#pragma once

#include <optional>

#include "oodkit/tensor.hpp"

namespace oodkit {

// Small dense classifier and autoencoder with hand-rolled backprop.
// All math is double precision internally; tensors cross the API as f32.

enum class Head : std::uint8_t { Softmax = 0, Sigmoid = 1 };

struct ToyClassifier {
    std::vector<std::uint32_t> widths;  // input, hidden..., output
    Head head = Head::Softmax;
    double dropout_rate = 0.0;
    bool has_confidence = false;
    // Layer l maps widths[l] -> widths[l+1]; weights row-major (out x in).
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<double> conf_weight;  // from the last hidden activation
    double conf_bias = 0.0;

    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }
};

struct ToyAutoencoder {
    std::vector<std::uint32_t> widths;  // D, ..., bottleneck, ..., D
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_dim() const { return widths.front(); }
};

struct TrainConfig {
    std::uint32_t epochs = 50;
    double learning_rate = 0.05;
    std::uint32_t batch_size = 32;
    std::uint64_t seed = 1;
    // Confidence-branch extras:
    double lambda_init = 0.1;
    double budget = 0.3;
    double hint_probability = 0.5;
    double lambda_divisor_low = 0.99;   // applied when mean confidence <= budget
    double lambda_divisor_high = 1.01;  // applied when mean confidence > budget
};

struct TrainTrace {
    std::vector<double> epoch_loss;       // includes the pre-training loss at [0]
    std::vector<double> lambda;           // per batch (confidence training only)
    std::vector<double> mean_confidence;  // per batch, measured before the lambda update
};

ToyClassifier make_classifier(std::vector<std::uint32_t> widths, Head head,
                              double dropout_rate, bool with_confidence,
                              std::uint64_t seed);

ToyAutoencoder make_autoencoder(std::vector<std::uint32_t> widths, std::uint64_t seed);

struct ForwardResult {
    Tensor logits;                   // N x K
    std::vector<double> confidence;  // N, empty without a confidence head
};

/// Deterministic without a dropout seed; with one, a fixed Bernoulli mask per
/// hidden unit is applied and activations scaled by 1/(1-rate).
ForwardResult forward(const ToyClassifier& model, const Tensor& features,
                      std::optional<std::uint64_t> dropout_seed = std::nullopt);

/// Stack of M stochastic forward passes, softmaxed: M x N x K. Input to
/// dropout_variance_score.
Tensor mc_dropout_posteriors(const ToyClassifier& model, const Tensor& features,
                             std::size_t passes, std::uint64_t seed);

// Parameter access, flattened layer by layer (weights then bias, confidence
// head last). Backing for finite-difference checks and serialization.
std::vector<double> parameters(const ToyClassifier& model);
void set_parameters(ToyClassifier& model, std::span<const double> params);
std::vector<double> parameters(const ToyAutoencoder& model);
void set_parameters(ToyAutoencoder& model, std::span<const double> params);

/// Mean cross-entropy (softmax head) or mean per-class binary cross-entropy
/// against one-hot targets (sigmoid head).
double classifier_loss(const ToyClassifier& model, const Tensor& features,
                       std::span<const std::uint32_t> labels);
std::vector<double> classifier_loss_gradient(const ToyClassifier& model, const Tensor& features,
                                             std::span<const std::uint32_t> labels);

/// Hint-gated confidence loss L_p + lambda * L_c for fixed per-example gates.
double confidence_loss(const ToyClassifier& model, const Tensor& features,
                       std::span<const std::uint32_t> labels,
                       std::span<const std::uint8_t> gates, double lambda);
std::vector<double> confidence_loss_gradient(const ToyClassifier& model, const Tensor& features,
                                             std::span<const std::uint32_t> labels,
                                             std::span<const std::uint8_t> gates, double lambda);

TrainTrace train_classifier(ToyClassifier& model, const Tensor& features,
                            std::span<const std::uint32_t> labels, const TrainConfig& config);

TrainTrace train_confidence_branch(ToyClassifier& model, const Tensor& features,
                                   std::span<const std::uint32_t> labels,
                                   const TrainConfig& config);

/// 1 - predicted confidence, higher = more anomalous.
std::vector<double> confidence_score(const ToyClassifier& model, const Tensor& features);

/// Gradient of log max softmax probability with respect to the input.
Tensor input_gradient(const ToyClassifier& model, const Tensor& features);

/// Perturb the input by epsilon toward higher max-softmax confidence, then
/// score the temperature-scaled logits with MSP (or MaxLogit).
Tensor odin_score(const ToyClassifier& model, const Tensor& features, double temperature,
                  double epsilon, bool use_maxlogit = false);

double autoencoder_loss(const ToyAutoencoder& model, const Tensor& features);
std::vector<double> autoencoder_loss_gradient(const ToyAutoencoder& model,
                                              const Tensor& features);
TrainTrace train_autoencoder(ToyAutoencoder& model, const Tensor& features,
                             const TrainConfig& config);
Tensor reconstruct(const ToyAutoencoder& model, const Tensor& features);

}  // namespace oodkit
