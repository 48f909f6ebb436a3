#include "oodkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oodkit/density.hpp"
#include "oodkit/detectors.hpp"
#include "oodkit/rng.hpp"

namespace oodkit {

namespace {

std::vector<float> concat(const Tensor& a, const Tensor& b) {
    std::vector<float> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.data().begin(), a.data().end());
    out.insert(out.end(), b.data().begin(), b.data().end());
    return out;
}

std::vector<float> concat_d(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<float> out;
    out.reserve(a.size() + b.size());
    for (double v : a) out.push_back(static_cast<float>(v));
    for (double v : b) out.push_back(static_cast<float>(v));
    return out;
}

Tensor squash_features(const Tensor& x, double scale) {
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = static_cast<float>(std::tanh(x[i] / scale));
    return Tensor(x.shape(), std::move(out));
}

}  // namespace

BenchmarkRun run_mixture_benchmark(const BenchmarkConfig& config, std::uint64_t seed) {
    if (!(config.feature_squash_scale > 0.0))
        throw std::invalid_argument("feature_squash_scale must be > 0");
    const MixtureSpec spec = make_mixture_spec(
        config.classes, config.feature_dim, config.class_sigma, config.fine_pairs,
        config.fine_separation, config.base_separation, substream_seed(seed, "spec"));

    const LabeledDataset train_set =
        gen_mixture_dataset(spec, config.train_per_class, substream_seed(seed, "train"));
    const LabeledDataset val_set =
        gen_mixture_dataset(spec, config.val_per_class, substream_seed(seed, "val"));
    const LabeledDataset test_set =
        gen_mixture_dataset(spec, config.test_per_class, substream_seed(seed, "test"));
    const Tensor ood_raw =
        gen_ood_mixture(spec, config.ood_count, substream_seed(seed, "ood"));

    const Tensor train_x = squash_features(train_set.features, config.feature_squash_scale);
    const Tensor val_x = squash_features(val_set.features, config.feature_squash_scale);
    const Tensor test_x = squash_features(test_set.features, config.feature_squash_scale);
    const Tensor ood = squash_features(ood_raw, config.feature_squash_scale);

    std::vector<std::uint32_t> widths;
    widths.push_back(config.feature_dim);
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(config.classes);
    const bool confidence = config.with_confidence && config.head == Head::Softmax;
    ToyClassifier model = make_classifier(widths, config.head, 0.0, confidence,
                                          substream_seed(seed, "model"));
    TrainConfig train_config = config.train;
    train_config.seed = substream_seed(seed, "train-loop");
    if (confidence)
        train_confidence_branch(model, train_x, train_set.labels, train_config);
    else
        train_classifier(model, train_x, train_set.labels, train_config);

    const Tensor train_logits = forward(model, train_x).logits;
    const Tensor test_logits = forward(model, test_x).logits;
    const Tensor ood_logits = forward(model, ood).logits;
    const Tensor val_logits = forward(model, val_x).logits;

    std::size_t correct = 0;
    for (std::size_t i = 0; i < train_logits.dim(0); ++i) {
        const auto row = train_logits.row(i);
        const auto arg = std::max_element(row.begin(), row.end()) - row.begin();
        if (static_cast<std::uint32_t>(arg) == train_set.labels[i]) ++correct;
    }

    BenchmarkRun run;
    run.train_accuracy = static_cast<double>(correct) / train_logits.dim(0);
    run.labels.assign(test_logits.dim(0), 0);
    run.labels.insert(run.labels.end(), ood_logits.dim(0), 1);

    run.scores.emplace_back("maxlogit", concat(maxlogit_score(test_logits),
                                               maxlogit_score(ood_logits)));
    run.scores.emplace_back("logitavg", concat(logit_avg_score(test_logits),
                                               logit_avg_score(ood_logits)));
    if (config.head == Head::Softmax) {
        run.scores.emplace_back("msp",
                                concat(msp_score(test_logits), msp_score(ood_logits)));
        const PosteriorTemplateSet templates = fit_kl_templates(val_logits);
        run.scores.emplace_back("klmatch", concat(kl_matching_score(test_logits, templates),
                                                  kl_matching_score(ood_logits, templates)));
    }
    {
        const LofModel lof = lof_fit(train_logits, config.lof_k);
        run.scores.emplace_back("lof", concat_d(lof_score(lof, test_logits),
                                                lof_score(lof, ood_logits)));
        const IsolationForestModel iforest =
            iforest_fit(train_logits, config.iforest_trees, config.iforest_subsample,
                        substream_seed(seed, "iforest"));
        run.scores.emplace_back("iforest", concat_d(iforest_score(iforest, test_logits),
                                                    iforest_score(iforest, ood_logits)));
    }
    if (confidence)
        run.scores.emplace_back("branch", concat_d(confidence_score(model, test_x),
                                                   confidence_score(model, ood)));

    for (const auto& [name, scores] : run.scores)
        run.results.push_back(DetectorResult{name, evaluate(scores, run.labels)});
    return run;
}

const EvalReport* find_result(const BenchmarkRun& run, const std::string& detector) {
    for (const auto& r : run.results)
        if (r.detector == detector) return &r.report;
    return nullptr;
}

}  // namespace oodkit
