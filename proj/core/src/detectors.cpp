#include "oodkit/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace oodkit {

namespace {

constexpr double kTemplateFloor = 1e-12;

void require_finite(const Tensor& t, const char* what) {
    for (float v : t.data())
        if (!std::isfinite(v))
            throw InvalidInput(std::string(what) + " contains a non-finite value");
}

std::size_t class_dim(const Tensor& t) { return t.dim(t.rank() - 1); }

std::vector<std::uint32_t> drop_last_dim(const Tensor& t) {
    if (t.rank() == 1) return {1};
    return {t.shape().begin(), t.shape().end() - 1};
}

}  // namespace

std::vector<float> softmax(std::span<const float> logits) {
    if (logits.empty())
        throw InvalidInput("softmax requires at least one logit");
    float max = logits[0];
    for (float v : logits) {
        if (!std::isfinite(v))
            throw InvalidInput("softmax input contains a non-finite value");
        max = std::max(max, v);
    }
    std::vector<float> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double e = std::exp(static_cast<double>(logits[i]) - max);
        out[i] = static_cast<float>(e);
        sum += e;
    }
    for (auto& v : out) v = static_cast<float>(v / sum);
    return out;
}

Tensor msp_score(const Tensor& logits) {
    if (logits.rank() != 2 || logits.dim(1) < 2)
        throw InvalidInput("msp_score requires an N x K tensor with K >= 2");
    require_finite(logits, "msp_score input");
    const std::size_t n = logits.dim(0);
    std::vector<float> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = softmax(logits.row(i));
        scores[i] = -*std::max_element(p.begin(), p.end());
    }
    return Tensor({static_cast<std::uint32_t>(n)}, std::move(scores));
}

Tensor maxlogit_score(const Tensor& logits) {
    if (logits.rank() != 2)
        throw InvalidInput("maxlogit_score requires an N x K tensor");
    require_finite(logits, "maxlogit_score input");
    const std::size_t n = logits.dim(0);
    std::vector<float> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.row(i);
        scores[i] = -*std::max_element(row.begin(), row.end());
    }
    return Tensor({static_cast<std::uint32_t>(n)}, std::move(scores));
}

Tensor logit_avg_score(const Tensor& logits) {
    if (logits.rank() != 2)
        throw InvalidInput("logit_avg_score requires an N x K tensor");
    require_finite(logits, "logit_avg_score input");
    const std::size_t n = logits.dim(0);
    const std::size_t k = logits.dim(1);
    std::vector<float> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (float v : logits.row(i)) sum += v;
        scores[i] = static_cast<float>(-sum / static_cast<double>(k));
    }
    return Tensor({static_cast<std::uint32_t>(n)}, std::move(scores));
}

PosteriorTemplateSet fit_kl_templates(const Tensor& val_logits) {
    if (val_logits.rank() != 2 || val_logits.dim(0) < 1)
        throw InvalidInput("fit_kl_templates requires a non-empty N x K tensor");
    require_finite(val_logits, "fit_kl_templates input");
    const std::size_t n = val_logits.dim(0);
    const std::size_t k = val_logits.dim(1);
    std::vector<double> sums(k * k, 0.0);
    std::vector<std::uint32_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = softmax(val_logits.row(i));
        const std::size_t pred =
            static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        for (std::size_t j = 0; j < k; ++j) sums[pred * k + j] += p[j];
        ++counts[pred];
    }
    std::vector<float> templates(k * k, 0.0f);
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t j = 0; j < k; ++j)
            templates[c * k + j] = static_cast<float>(sums[c * k + j] / counts[c]);
    }
    return PosteriorTemplateSet{
        Tensor({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k)},
               std::move(templates)),
        std::move(counts)};
}

Tensor kl_matching_score(const Tensor& logits, const PosteriorTemplateSet& templates) {
    if (logits.rank() != 2)
        throw InvalidInput("kl_matching_score requires an N x K tensor");
    require_finite(logits, "kl_matching_score input");
    const std::size_t k = logits.dim(1);
    if (templates.num_classes() != k)
        throw InvalidInput("template class count does not match logit width");
    bool any = false;
    for (auto c : templates.counts) any = any || c > 0;
    if (!any)
        throw InvalidInput("no populated template class; cannot score");
    const std::size_t n = logits.dim(0);
    std::vector<float> scores(n);
    const auto tdata = templates.templates.data();
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = softmax(logits.row(i));
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (templates.counts[c] == 0) continue;
            double kl = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                const double pj = p[j];
                if (pj <= 0.0) continue;  // 0 * log 0 = 0
                const double dj = std::max(static_cast<double>(tdata[c * k + j]), kTemplateFloor);
                kl += pj * std::log(pj / dj);
            }
            best = std::min(best, kl);
        }
        scores[i] = static_cast<float>(best);
    }
    return Tensor({static_cast<std::uint32_t>(n)}, std::move(scores));
}

Tensor background_score(const Tensor& posteriors, std::size_t background_index) {
    const std::size_t k = class_dim(posteriors);
    if (background_index >= k)
        throw InvalidInput("background index " + std::to_string(background_index) +
                           " out of range for " + std::to_string(k) + " classes");
    const std::size_t n = posteriors.outer_size();
    std::vector<float> scores(n);
    for (std::size_t i = 0; i < n; ++i)
        scores[i] = posteriors[i * k + background_index];
    return Tensor(drop_last_dim(posteriors), std::move(scores));
}

Tensor dropout_variance_score(const Tensor& posterior_stack) {
    if (posterior_stack.rank() < 2)
        throw InvalidInput("dropout_variance_score requires rank >= 2 (passes x ... x classes)");
    const std::size_t m = posterior_stack.dim(0);
    if (m < 2)
        throw InvalidInput("dropout_variance_score requires at least 2 passes");
    const std::size_t k = class_dim(posterior_stack);
    const std::size_t inner = posterior_stack.size() / m;       // positions x classes
    const std::size_t positions = inner / k;
    std::vector<float> scores(positions == 0 ? 1 : positions);
    const auto data = posterior_stack.data();
    for (std::size_t pos = 0; pos < positions; ++pos) {
        double acc = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double mean = 0.0;
            for (std::size_t pass = 0; pass < m; ++pass)
                mean += data[pass * inner + pos * k + c];
            mean /= static_cast<double>(m);
            double var = 0.0;  // population variance, divide by M
            for (std::size_t pass = 0; pass < m; ++pass) {
                const double d = data[pass * inner + pos * k + c] - mean;
                var += d * d;
            }
            acc += var / static_cast<double>(m);
        }
        scores[pos] = static_cast<float>(acc / static_cast<double>(k));
    }
    std::vector<std::uint32_t> shape(posterior_stack.shape().begin() + 1,
                                     posterior_stack.shape().end() - 1);
    if (shape.empty()) shape = {1};
    return Tensor(std::move(shape), std::move(scores));
}

Tensor reconstruction_score(const Tensor& input, const Tensor& reconstruction) {
    if (input.shape() != reconstruction.shape())
        throw InvalidInput("input and reconstruction shapes differ");
    const std::size_t c = class_dim(input);
    const std::size_t n = input.outer_size();
    std::vector<float> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = static_cast<double>(input[i * c + j]) - reconstruction[i * c + j];
            sum += d * d;
        }
        scores[i] = static_cast<float>(sum / static_cast<double>(c));
    }
    return Tensor(drop_last_dim(input), std::move(scores));
}

Tensor temperature_scale(const Tensor& logits, double temperature) {
    if (!(temperature > 0.0))
        throw InvalidInput("temperature must be > 0");
    std::vector<float> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        out[i] = static_cast<float>(logits[i] / temperature);
    return Tensor(logits.shape(), std::move(out));
}

Tensor sigmoid_posteriors(const Tensor& logits) {
    require_finite(logits, "sigmoid_posteriors input");
    std::vector<float> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        out[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(logits[i]))));
    return Tensor(logits.shape(), std::move(out));
}

}  // namespace oodkit
