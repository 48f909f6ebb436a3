#pragma once

#include <string>

#include "oodkit/metrics.hpp"
#include "oodkit/synthetic.hpp"
#include "oodkit/toymodel.hpp"

namespace oodkit {

// End-to-end mixture benchmark: generate class-structured data with
// fine-grained near-duplicate class pairs, train the toy classifier, score
// held-out in-distribution and anomaly samples with every applicable
// detector, and evaluate.

struct BenchmarkConfig {
    std::uint32_t classes = 20;
    std::uint32_t feature_dim = 16;
    std::uint32_t fine_pairs = 5;
    double class_sigma = 1.0;
    double fine_separation = 1.0;  // = class_sigma: paired classes overlap
    double base_separation = 4.0;
    std::size_t train_per_class = 200;
    std::size_t val_per_class = 25;
    std::size_t test_per_class = 50;
    std::size_t ood_count = 1000;
    // Features are passed through tanh(x / feature_squash_scale) before the
    // classifier. This bounds inputs the way pixel data is bounded; without it
    // the piecewise-linear network extrapolates far-away anomalies to huge
    // logits and logit-based detectors invert.
    double feature_squash_scale = 4.0;
    Head head = Head::Softmax;
    bool with_confidence = true;
    std::vector<std::uint32_t> hidden = {64};
    TrainConfig train;
    std::size_t lof_k = 20;
    std::uint32_t iforest_trees = 100;
    std::uint32_t iforest_subsample = 256;
};

struct DetectorResult {
    std::string detector;
    EvalReport report;
};

struct BenchmarkRun {
    std::vector<DetectorResult> results;
    // Raw scores (test-in followed by OOD) and labels, per detector, for
    // artifact export.
    std::vector<std::pair<std::string, std::vector<float>>> scores;
    std::vector<std::uint8_t> labels;
    double train_accuracy = 0.0;
};

BenchmarkRun run_mixture_benchmark(const BenchmarkConfig& config, std::uint64_t seed);

const EvalReport* find_result(const BenchmarkRun& run, const std::string& detector);

}  // namespace oodkit
