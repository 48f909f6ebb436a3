#include "oodkit/toymodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oodkit/detectors.hpp"
#include "oodkit/rng.hpp"

namespace oodkit {

namespace {

constexpr double kLogFloor = 1e-12;

std::vector<std::vector<double>> init_layers(const std::vector<std::uint32_t>& widths,
                                             std::vector<std::vector<double>>& biases,
                                             Rng& rng) {
    std::vector<std::vector<double>> weights;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l];
        const std::size_t fan_out = widths[l + 1];
        std::vector<double> w(fan_out * fan_in);
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (auto& v : w) v = scale * rng.normal();
        weights.push_back(std::move(w));
        biases.emplace_back(fan_out, 0.0);
    }
    return weights;
}

void check_widths(const std::vector<std::uint32_t>& widths) {
    if (widths.size() < 2)
        throw InvalidInput("network needs at least input and output widths");
    for (auto w : widths)
        if (w == 0)
            throw InvalidInput("layer widths must all be >= 1");
}

/// Forward state for one batch. acts[0] is the input; acts[l+1] is layer l's
/// output after ReLU and dropout (the final layer stays linear).
struct Cache {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> dropout_mask;  // per hidden layer, per unit
    std::vector<double> conf_logit;
    std::vector<double> conf;
    std::size_t batch = 0;
};

Cache run_forward(const std::vector<std::uint32_t>& widths,
                  const std::vector<std::vector<double>>& weights,
                  const std::vector<std::vector<double>>& biases, const Tensor& features,
                  double dropout_rate, std::optional<std::uint64_t> dropout_seed,
                  const std::vector<double>* conf_weight, double conf_bias) {
    if (features.rank() != 2 || features.dim(1) != widths.front())
        throw InvalidInput("feature dimensionality does not match the network input width");
    const std::size_t n = features.dim(0);
    const std::size_t layer_count = widths.size() - 1;

    Cache cache;
    cache.batch = n;
    cache.acts.resize(layer_count + 1);
    cache.acts[0].assign(features.data().begin(), features.data().end());
    cache.dropout_mask.resize(layer_count > 0 ? layer_count - 1 : 0);

    const bool use_dropout = dropout_rate > 0.0 && dropout_seed.has_value();
    std::optional<Rng> mask_rng;
    if (use_dropout) mask_rng.emplace(substream_seed(*dropout_seed, "dropout-mask"));

    for (std::size_t l = 0; l < layer_count; ++l) {
        const std::size_t in = widths[l];
        const std::size_t out = widths[l + 1];
        const bool hidden = l + 1 < layer_count + 1 && l != layer_count - 1;
        std::vector<double>& prev = cache.acts[l];
        std::vector<double> next(n * out);
        const auto& w = weights[l];
        const auto& b = biases[l];
        for (std::size_t row = 0; row < n; ++row) {
            for (std::size_t o = 0; o < out; ++o) {
                double acc = b[o];
                const double* wrow = w.data() + o * in;
                const double* x = prev.data() + row * in;
                for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * x[i];
                next[row * out + o] = acc;
            }
        }
        if (hidden) {
            for (auto& v : next) v = std::max(v, 0.0);
            if (l < cache.dropout_mask.size()) {
                auto& mask = cache.dropout_mask[l];
                mask.assign(out, 1.0);
                if (use_dropout) {
                    const double keep = 1.0 - dropout_rate;
                    for (auto& m : mask) m = mask_rng->bernoulli(dropout_rate) ? 0.0 : 1.0 / keep;
                    for (std::size_t row = 0; row < n; ++row)
                        for (std::size_t o = 0; o < out; ++o) next[row * out + o] *= mask[o];
                }
            }
        }
        cache.acts[l + 1] = std::move(next);
    }

    if (conf_weight != nullptr) {
        const std::size_t hidden_width = widths[widths.size() - 2];
        const auto& h = cache.acts[layer_count - 1];
        cache.conf_logit.resize(n);
        cache.conf.resize(n);
        for (std::size_t row = 0; row < n; ++row) {
            double z = conf_bias;
            for (std::size_t i = 0; i < hidden_width; ++i)
                z += (*conf_weight)[i] * h[row * hidden_width + i];
            cache.conf_logit[row] = z;
            cache.conf[row] = 1.0 / (1.0 + std::exp(-z));
        }
    }
    return cache;
}

/// Backprop through the dense stack. d_logits is N x K; d_conf_logit may be
/// empty. Returns the flat parameter gradient; optionally fills d_input.
std::vector<double> run_backward(const std::vector<std::uint32_t>& widths,
                                 const std::vector<std::vector<double>>& weights,
                                 const Cache& cache, std::vector<double> d_logits,
                                 std::span<const double> d_conf_logit,
                                 const std::vector<double>* conf_weight,
                                 std::vector<double>* d_input) {
    const std::size_t n = cache.batch;
    const std::size_t layer_count = widths.size() - 1;

    std::size_t param_count = 0;
    for (std::size_t l = 0; l < layer_count; ++l)
        param_count += weights[l].size() + widths[l + 1];
    const std::size_t conf_offset = param_count;
    if (conf_weight != nullptr) param_count += conf_weight->size() + 1;
    std::vector<double> grad(param_count, 0.0);

    std::vector<double> delta = std::move(d_logits);
    for (std::size_t l = layer_count; l-- > 0;) {
        const std::size_t in = widths[l];
        const std::size_t out = widths[l + 1];
        const auto& prev = cache.acts[l];

        // Confidence head taps the last hidden activation.
        std::vector<double> d_prev(n * in, 0.0);
        std::size_t offset = 0;
        for (std::size_t j = 0; j < l; ++j) offset += weights[j].size() + widths[j + 1];
        double* dw = grad.data() + offset;
        double* db = dw + weights[l].size();
        const auto& w = weights[l];
        for (std::size_t row = 0; row < n; ++row) {
            const double* x = prev.data() + row * in;
            const double* d = delta.data() + row * out;
            double* dp = d_prev.data() + row * in;
            for (std::size_t o = 0; o < out; ++o) {
                const double g = d[o];
                if (g == 0.0) continue;
                db[o] += g;
                const double* wrow = w.data() + o * in;
                double* dwrow = dw + o * in;
                for (std::size_t i = 0; i < in; ++i) {
                    dwrow[i] += g * x[i];
                    dp[i] += g * wrow[i];
                }
            }
        }

        if (l == layer_count - 1 && conf_weight != nullptr && !d_conf_logit.empty()) {
            double* dcw = grad.data() + conf_offset;
            double& dcb = grad[conf_offset + conf_weight->size()];
            for (std::size_t row = 0; row < n; ++row) {
                const double dz = d_conf_logit[row];
                if (dz == 0.0) continue;
                dcb += dz;
                const double* x = prev.data() + row * in;
                double* dp = d_prev.data() + row * in;
                for (std::size_t i = 0; i < in; ++i) {
                    dcw[i] += dz * x[i];
                    dp[i] += dz * (*conf_weight)[i];
                }
            }
        }

        if (l > 0) {
            // Through dropout (mask folded into the activation) and ReLU.
            const std::vector<double>* mask =
                l - 1 < cache.dropout_mask.size() ? &cache.dropout_mask[l - 1] : nullptr;
            for (std::size_t row = 0; row < n; ++row) {
                for (std::size_t i = 0; i < in; ++i) {
                    const double a = prev[row * in + i];
                    double g = d_prev[row * in + i];
                    if (a <= 0.0)
                        g = 0.0;
                    else if (mask != nullptr && !mask->empty())
                        g *= (*mask)[i];
                    d_prev[row * in + i] = g;
                }
            }
        } else if (d_input != nullptr) {
            *d_input = d_prev;
        }
        delta = std::move(d_prev);
    }
    return grad;
}

std::vector<double> softmax_row(const double* logits, std::size_t k) {
    double max = logits[0];
    for (std::size_t i = 1; i < k; ++i) max = std::max(max, logits[i]);
    std::vector<double> p(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        p[i] = std::exp(logits[i] - max);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

void check_labels(std::span<const std::uint32_t> labels, std::size_t n, std::size_t k) {
    if (labels.size() != n)
        throw InvalidInput("label count does not match feature count");
    for (auto l : labels)
        if (l >= k)
            throw InvalidInput("class label " + std::to_string(l) + " out of range");
}

Tensor take_rows(const Tensor& features, std::span<const std::size_t> rows) {
    const std::size_t d = features.dim(1);
    std::vector<float> data(rows.size() * d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(features.data().data() + rows[i] * d, d, data.data() + i * d);
    return Tensor({static_cast<std::uint32_t>(rows.size()), static_cast<std::uint32_t>(d)},
                  std::move(data));
}

}  // namespace

ToyClassifier make_classifier(std::vector<std::uint32_t> widths, Head head,
                              double dropout_rate, bool with_confidence,
                              std::uint64_t seed) {
    check_widths(widths);
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw InvalidInput("dropout rate must be in [0, 1)");
    if (with_confidence && widths.size() < 3)
        throw InvalidInput("a confidence head requires at least one hidden layer");
    ToyClassifier model;
    model.widths = std::move(widths);
    model.head = head;
    model.dropout_rate = dropout_rate;
    model.has_confidence = with_confidence;
    Rng rng(substream_seed(seed, "init"));
    model.weights = init_layers(model.widths, model.biases, rng);
    if (with_confidence) {
        const std::size_t hidden = model.widths[model.widths.size() - 2];
        model.conf_weight.resize(hidden);
        const double scale = std::sqrt(2.0 / static_cast<double>(hidden));
        for (auto& v : model.conf_weight) v = scale * rng.normal();
        model.conf_bias = 0.0;
    }
    return model;
}

ToyAutoencoder make_autoencoder(std::vector<std::uint32_t> widths, std::uint64_t seed) {
    check_widths(widths);
    if (widths.front() != widths.back())
        throw InvalidInput("autoencoder input and output widths must match");
    const auto bottleneck = *std::min_element(widths.begin(), widths.end());
    if (bottleneck >= widths.front())
        throw InvalidInput("bottleneck must be strictly smaller than the input width");
    ToyAutoencoder model;
    model.widths = std::move(widths);
    Rng rng(substream_seed(seed, "ae-init"));
    model.weights = init_layers(model.widths, model.biases, rng);
    return model;
}

ForwardResult forward(const ToyClassifier& model, const Tensor& features,
                      std::optional<std::uint64_t> dropout_seed) {
    const Cache cache =
        run_forward(model.widths, model.weights, model.biases, features, model.dropout_rate,
                    dropout_seed, model.has_confidence ? &model.conf_weight : nullptr,
                    model.conf_bias);
    const std::size_t n = cache.batch;
    const std::size_t k = model.output_dim();
    const auto& logits = cache.acts.back();
    std::vector<float> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(logits[i]);
    return ForwardResult{
        Tensor({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(k)}, std::move(out)),
        cache.conf};
}

Tensor mc_dropout_posteriors(const ToyClassifier& model, const Tensor& features,
                             std::size_t passes, std::uint64_t seed) {
    if (passes < 2)
        throw InvalidInput("MC dropout needs at least 2 passes");
    const std::size_t n = features.dim(0);
    const std::size_t k = model.output_dim();
    std::vector<float> stack(passes * n * k);
    for (std::size_t m = 0; m < passes; ++m) {
        const auto result = forward(model, features, substream_seed(seed, "mc-dropout", m));
        for (std::size_t row = 0; row < n; ++row) {
            const auto p = softmax(result.logits.row(row));
            std::copy(p.begin(), p.end(), stack.begin() + (m * n + row) * k);
        }
    }
    return Tensor({static_cast<std::uint32_t>(passes), static_cast<std::uint32_t>(n),
                   static_cast<std::uint32_t>(k)},
                  std::move(stack));
}

std::vector<double> parameters(const ToyClassifier& model) {
    std::vector<double> out;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        out.insert(out.end(), model.weights[l].begin(), model.weights[l].end());
        out.insert(out.end(), model.biases[l].begin(), model.biases[l].end());
    }
    if (model.has_confidence) {
        out.insert(out.end(), model.conf_weight.begin(), model.conf_weight.end());
        out.push_back(model.conf_bias);
    }
    return out;
}

void set_parameters(ToyClassifier& model, std::span<const double> params) {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        std::copy_n(params.begin() + pos, model.weights[l].size(), model.weights[l].begin());
        pos += model.weights[l].size();
        std::copy_n(params.begin() + pos, model.biases[l].size(), model.biases[l].begin());
        pos += model.biases[l].size();
    }
    if (model.has_confidence) {
        std::copy_n(params.begin() + pos, model.conf_weight.size(), model.conf_weight.begin());
        pos += model.conf_weight.size();
        model.conf_bias = params[pos++];
    }
    if (pos != params.size())
        throw InvalidInput("parameter vector length does not match the model");
}

std::vector<double> parameters(const ToyAutoencoder& model) {
    std::vector<double> out;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        out.insert(out.end(), model.weights[l].begin(), model.weights[l].end());
        out.insert(out.end(), model.biases[l].begin(), model.biases[l].end());
    }
    return out;
}

void set_parameters(ToyAutoencoder& model, std::span<const double> params) {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        std::copy_n(params.begin() + pos, model.weights[l].size(), model.weights[l].begin());
        pos += model.weights[l].size();
        std::copy_n(params.begin() + pos, model.biases[l].size(), model.biases[l].begin());
        pos += model.biases[l].size();
    }
    if (pos != params.size())
        throw InvalidInput("parameter vector length does not match the model");
}

namespace {

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
    double mean_confidence = 0.0;
};

LossGrad classifier_loss_impl(const ToyClassifier& model, const Tensor& features,
                              std::span<const std::uint32_t> labels, bool want_grad) {
    const Cache cache = run_forward(model.widths, model.weights, model.biases, features,
                                    0.0, std::nullopt,
                                    model.has_confidence ? &model.conf_weight : nullptr,
                                    model.conf_bias);
    const std::size_t n = cache.batch;
    const std::size_t k = model.output_dim();
    check_labels(labels, n, k);
    const auto& logits = cache.acts.back();

    LossGrad result;
    std::vector<double> d_logits(want_grad ? n * k : 0, 0.0);
    if (model.head == Head::Softmax) {
        for (std::size_t row = 0; row < n; ++row) {
            const auto p = softmax_row(logits.data() + row * k, k);
            result.loss += -std::log(std::max(p[labels[row]], kLogFloor));
            if (want_grad)
                for (std::size_t j = 0; j < k; ++j)
                    d_logits[row * k + j] =
                        (p[j] - (j == labels[row] ? 1.0 : 0.0)) / static_cast<double>(n);
        }
        result.loss /= static_cast<double>(n);
    } else {
        // One-hot targets, binary cross-entropy averaged over classes.
        for (std::size_t row = 0; row < n; ++row) {
            for (std::size_t j = 0; j < k; ++j) {
                const double s = 1.0 / (1.0 + std::exp(-logits[row * k + j]));
                const double y = j == labels[row] ? 1.0 : 0.0;
                result.loss += -(y * std::log(std::max(s, kLogFloor)) +
                                 (1.0 - y) * std::log(std::max(1.0 - s, kLogFloor)));
                if (want_grad)
                    d_logits[row * k + j] = (s - y) / static_cast<double>(n * k);
            }
        }
        result.loss /= static_cast<double>(n * k);
    }
    if (want_grad)
        result.grad = run_backward(model.widths, model.weights, cache, std::move(d_logits), {},
                                   model.has_confidence ? &model.conf_weight : nullptr, nullptr);
    return result;
}

LossGrad confidence_loss_impl(const ToyClassifier& model, const Tensor& features,
                              std::span<const std::uint32_t> labels,
                              std::span<const std::uint8_t> gates, double lambda,
                              bool want_grad) {
    if (!model.has_confidence)
        throw InvalidInput("model has no confidence head");
    if (model.head != Head::Softmax)
        throw InvalidInput("confidence training requires a softmax head");
    const Cache cache = run_forward(model.widths, model.weights, model.biases, features, 0.0,
                                    std::nullopt, &model.conf_weight, model.conf_bias);
    const std::size_t n = cache.batch;
    const std::size_t k = model.output_dim();
    check_labels(labels, n, k);
    if (gates.size() != n)
        throw InvalidInput("gate count does not match feature count");
    const auto& logits = cache.acts.back();

    LossGrad result;
    std::vector<double> d_logits(want_grad ? n * k : 0, 0.0);
    std::vector<double> d_conf(want_grad ? n : 0, 0.0);
    double lp = 0.0, lc = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
        const auto p = softmax_row(logits.data() + row * k, k);
        const double chat = cache.conf[row];
        result.mean_confidence += chat;
        const double c = gates[row] ? chat : 1.0;
        const double pt = p[labels[row]];
        const double pt_adj = pt * c + (1.0 - c);  // interpolate toward the one-hot label
        lp += -std::log(std::max(pt_adj, kLogFloor));
        lc += -std::log(std::max(chat, kLogFloor));
        if (want_grad) {
            const double d_pt_adj = -1.0 / std::max(pt_adj, kLogFloor) / static_cast<double>(n);
            const double d_pt = d_pt_adj * c;
            for (std::size_t j = 0; j < k; ++j)
                d_logits[row * k + j] =
                    d_pt * pt * ((j == labels[row] ? 1.0 : 0.0) - p[j]);
            double dz = lambda * (chat - 1.0) / static_cast<double>(n);  // from L_c
            if (gates[row]) {
                const double d_c = d_pt_adj * (pt - 1.0);
                dz += d_c * chat * (1.0 - chat);
            }
            d_conf[row] = dz;
        }
    }
    result.loss = lp / static_cast<double>(n) + lambda * lc / static_cast<double>(n);
    result.mean_confidence /= static_cast<double>(n);
    if (want_grad)
        result.grad = run_backward(model.widths, model.weights, cache, std::move(d_logits),
                                   d_conf, &model.conf_weight, nullptr);
    return result;
}

void apply_step(std::vector<double>& params, std::span<const double> grad, double lr) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
}

void check_config(const TrainConfig& config) {
    if (config.epochs == 0 || config.batch_size == 0 || !(config.learning_rate > 0.0))
        throw InvalidInput("epochs, batch size, and learning rate must be positive");
}

}  // namespace

double classifier_loss(const ToyClassifier& model, const Tensor& features,
                       std::span<const std::uint32_t> labels) {
    return classifier_loss_impl(model, features, labels, false).loss;
}

std::vector<double> classifier_loss_gradient(const ToyClassifier& model, const Tensor& features,
                                             std::span<const std::uint32_t> labels) {
    return classifier_loss_impl(model, features, labels, true).grad;
}

double confidence_loss(const ToyClassifier& model, const Tensor& features,
                       std::span<const std::uint32_t> labels,
                       std::span<const std::uint8_t> gates, double lambda) {
    return confidence_loss_impl(model, features, labels, gates, lambda, false).loss;
}

std::vector<double> confidence_loss_gradient(const ToyClassifier& model, const Tensor& features,
                                             std::span<const std::uint32_t> labels,
                                             std::span<const std::uint8_t> gates,
                                             double lambda) {
    return confidence_loss_impl(model, features, labels, gates, lambda, true).grad;
}

TrainTrace train_classifier(ToyClassifier& model, const Tensor& features,
                            std::span<const std::uint32_t> labels, const TrainConfig& config) {
    check_config(config);
    const std::size_t n = features.dim(0);
    check_labels(labels, n, model.output_dim());

    TrainTrace trace;
    trace.epoch_loss.push_back(classifier_loss(model, features, labels));
    std::vector<double> params = parameters(model);
    Rng shuffle_rng(substream_seed(config.seed, "shuffle"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_below(i)]);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min<std::size_t>(start + config.batch_size, n);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            const Tensor batch = take_rows(features, rows);
            std::vector<std::uint32_t> batch_labels(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) batch_labels[i] = labels[rows[i]];
            const auto grad = classifier_loss_gradient(model, batch, batch_labels);
            apply_step(params, grad, config.learning_rate);
            set_parameters(model, params);
        }
        const double loss = classifier_loss(model, features, labels);
        if (!std::isfinite(loss))
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1),
                                  epoch + 1);
        trace.epoch_loss.push_back(loss);
    }
    return trace;
}

TrainTrace train_confidence_branch(ToyClassifier& model, const Tensor& features,
                                   std::span<const std::uint32_t> labels,
                                   const TrainConfig& config) {
    check_config(config);
    if (!model.has_confidence)
        throw InvalidInput("model has no confidence head");
    const std::size_t n = features.dim(0);
    check_labels(labels, n, model.output_dim());

    TrainTrace trace;
    const std::vector<std::uint8_t> all_on(n, 1);
    double lambda = config.lambda_init;
    trace.epoch_loss.push_back(confidence_loss(model, features, labels, all_on, lambda));

    std::vector<double> params = parameters(model);
    Rng shuffle_rng(substream_seed(config.seed, "shuffle"));
    Rng gate_rng(substream_seed(config.seed, "hint-gate"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_below(i)]);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min<std::size_t>(start + config.batch_size, n);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            const Tensor batch = take_rows(features, rows);
            std::vector<std::uint32_t> batch_labels(rows.size());
            std::vector<std::uint8_t> gates(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                batch_labels[i] = labels[rows[i]];
                gates[i] = gate_rng.bernoulli(config.hint_probability) ? 1 : 0;
            }
            const auto lg =
                confidence_loss_impl(model, batch, batch_labels, gates, lambda, true);
            apply_step(params, lg.grad, config.learning_rate);
            set_parameters(model, params);
            // Budget rule on the batch mean confidence, measured pre-update.
            lambda = lg.mean_confidence <= config.budget ? lambda / config.lambda_divisor_low
                                                         : lambda / config.lambda_divisor_high;
            trace.lambda.push_back(lambda);
            trace.mean_confidence.push_back(lg.mean_confidence);
        }
        const double loss = confidence_loss(model, features, labels, all_on, lambda);
        if (!std::isfinite(loss))
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1),
                                  epoch + 1);
        trace.epoch_loss.push_back(loss);
    }
    return trace;
}

std::vector<double> confidence_score(const ToyClassifier& model, const Tensor& features) {
    if (!model.has_confidence)
        throw InvalidInput("model has no confidence head");
    const auto result = forward(model, features);
    std::vector<double> scores(result.confidence.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = 1.0 - result.confidence[i];
    return scores;
}

Tensor input_gradient(const ToyClassifier& model, const Tensor& features) {
    const Cache cache = run_forward(model.widths, model.weights, model.biases, features, 0.0,
                                    std::nullopt, nullptr, 0.0);
    const std::size_t n = cache.batch;
    const std::size_t k = model.output_dim();
    const std::size_t d = model.input_dim();
    const auto& logits = cache.acts.back();
    // d/dl_j of log p_{k*} = delta_{j,k*} - p_j.
    std::vector<double> d_logits(n * k);
    for (std::size_t row = 0; row < n; ++row) {
        const auto p = softmax_row(logits.data() + row * k, k);
        const std::size_t top =
            static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        for (std::size_t j = 0; j < k; ++j)
            d_logits[row * k + j] = (j == top ? 1.0 : 0.0) - p[j];
    }
    std::vector<double> d_input;
    run_backward(model.widths, model.weights, cache, std::move(d_logits), {}, nullptr, &d_input);
    std::vector<float> out(n * d);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(d_input[i]))
            throw InvalidInput("non-finite input gradient");
        out[i] = static_cast<float>(d_input[i]);
    }
    return Tensor({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(d)},
                  std::move(out));
}

Tensor odin_score(const ToyClassifier& model, const Tensor& features, double temperature,
                  double epsilon, bool use_maxlogit) {
    if (!(temperature > 0.0))
        throw InvalidInput("temperature must be > 0");
    if (epsilon < 0.0)
        throw InvalidInput("epsilon must be >= 0");
    Tensor perturbed = features;
    if (epsilon > 0.0) {
        const Tensor grad = input_gradient(model, features);
        for (std::size_t i = 0; i < perturbed.size(); ++i) {
            const float g = grad[i];
            const float sign = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
            perturbed[i] += static_cast<float>(epsilon) * sign;
        }
    }
    const auto result = forward(model, perturbed);
    const Tensor scaled = temperature_scale(result.logits, temperature);
    return use_maxlogit ? maxlogit_score(scaled) : msp_score(scaled);
}

double autoencoder_loss(const ToyAutoencoder& model, const Tensor& features) {
    const Cache cache = run_forward(model.widths, model.weights, model.biases, features, 0.0,
                                    std::nullopt, nullptr, 0.0);
    const std::size_t n = cache.batch;
    const std::size_t d = model.input_dim();
    const auto& out = cache.acts.back();
    double loss = 0.0;
    for (std::size_t i = 0; i < n * d; ++i) {
        const double diff = out[i] - cache.acts[0][i];
        loss += diff * diff;
    }
    return loss / static_cast<double>(n * d);
}

std::vector<double> autoencoder_loss_gradient(const ToyAutoencoder& model,
                                              const Tensor& features) {
    const Cache cache = run_forward(model.widths, model.weights, model.biases, features, 0.0,
                                    std::nullopt, nullptr, 0.0);
    const std::size_t n = cache.batch;
    const std::size_t d = model.input_dim();
    const auto& out = cache.acts.back();
    std::vector<double> d_out(n * d);
    for (std::size_t i = 0; i < n * d; ++i)
        d_out[i] = 2.0 * (out[i] - cache.acts[0][i]) / static_cast<double>(n * d);
    return run_backward(model.widths, model.weights, cache, std::move(d_out), {}, nullptr,
                        nullptr);
}

TrainTrace train_autoencoder(ToyAutoencoder& model, const Tensor& features,
                             const TrainConfig& config) {
    check_config(config);
    const std::size_t n = features.dim(0);

    TrainTrace trace;
    trace.epoch_loss.push_back(autoencoder_loss(model, features));
    std::vector<double> params = parameters(model);
    Rng shuffle_rng(substream_seed(config.seed, "ae-shuffle"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_below(i)]);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min<std::size_t>(start + config.batch_size, n);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            const Tensor batch = take_rows(features, rows);
            const auto grad = autoencoder_loss_gradient(model, batch);
            apply_step(params, grad, config.learning_rate);
            set_parameters(model, params);
        }
        const double loss = autoencoder_loss(model, features);
        if (!std::isfinite(loss))
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1),
                                  epoch + 1);
        trace.epoch_loss.push_back(loss);
    }
    return trace;
}

Tensor reconstruct(const ToyAutoencoder& model, const Tensor& features) {
    const Cache cache = run_forward(model.widths, model.weights, model.biases, features, 0.0,
                                    std::nullopt, nullptr, 0.0);
    const auto& out = cache.acts.back();
    std::vector<float> data(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) data[i] = static_cast<float>(out[i]);
    return Tensor(features.shape(), std::move(data));
}

}  // namespace oodkit
