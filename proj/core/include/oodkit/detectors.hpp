#pragma once

#include "oodkit/tensor.hpp"

namespace oodkit {

// Closed-form anomaly scorers over logit / posterior tensors.
// Convention everywhere: higher score = more anomalous.

/// Per-class mean posterior templates, one per predicted class.
struct PosteriorTemplateSet {
    Tensor templates;                   // K x K, row k = template for class k
    std::vector<std::uint32_t> counts;  // validation examples behind each row

    std::size_t num_classes() const { return counts.size(); }
};

/// Numerically stable softmax of a single logit vector.
std::vector<float> softmax(std::span<const float> logits);

/// -max_k p(y=k|x) per row of an N x K logit tensor.
Tensor msp_score(const Tensor& logits);

/// -max_k l_k per row.
Tensor maxlogit_score(const Tensor& logits);

/// -mean_k l_k per row.
Tensor logit_avg_score(const Tensor& logits);

/// Group validation posteriors by argmax class and average each group.
PosteriorTemplateSet fit_kl_templates(const Tensor& val_logits);

/// min over populated classes k of KL[softmax(logits_i) || template_k].
Tensor kl_matching_score(const Tensor& logits, const PosteriorTemplateSet& templates);

/// Posterior probability of the background class, per example or per pixel.
/// Last dim of `posteriors` is the class axis.
Tensor background_score(const Tensor& posteriors, std::size_t background_index);

/// Per-position posterior variance over M stochastic forward passes, averaged
/// over classes. First dim of the stack is the pass axis, last is the class axis.
Tensor dropout_variance_score(const Tensor& posterior_stack);

/// Per-pixel mean squared error between input and reconstruction; last dim is
/// the channel axis.
Tensor reconstruction_score(const Tensor& input, const Tensor& reconstruction);

/// logits / T.
Tensor temperature_scale(const Tensor& logits, double temperature);

/// Elementwise logistic sigmoid.
Tensor sigmoid_posteriors(const Tensor& logits);

}  // namespace oodkit
