#include "oodkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace oodkit {

namespace {

struct Counts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

Counts count_labels(std::span<const std::uint8_t> labels) {
    Counts c;
    for (auto v : labels) (v ? c.pos : c.neg)++;
    return c;
}

void check_lengths(std::span<const float> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw InvalidInput("scores and labels have different lengths");
    if (scores.empty())
        throw InvalidInput("empty scores");
    for (float s : scores)
        if (std::isnan(s))
            throw InvalidInput("NaN score");
}

/// Indices sorted by score descending, plus tie-group boundaries.
struct SweepGroup {
    double threshold;
    std::size_t tp;  // positives at exactly this score
    std::size_t fp;
};

std::vector<SweepGroup> threshold_groups(std::span<const float> scores,
                                         std::span<const std::uint8_t> labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<SweepGroup> groups;
    std::size_t i = 0;
    while (i < order.size()) {
        const float s = scores[order[i]];
        SweepGroup g{static_cast<double>(s), 0, 0};
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? g.tp : g.fp)++;
            ++i;
        }
        groups.push_back(g);
    }
    return groups;
}

}  // namespace

double auroc(std::span<const float> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores, labels);
    const Counts c = count_labels(labels);
    if (c.pos == 0 || c.neg == 0)
        throw UndefinedMetric("AUROC undefined: labels contain a single class");
    // Pairwise count via tie groups: walk scores descending, each group of
    // positives beats every negative in later groups and ties within its own.
    const auto groups = threshold_groups(scores, labels);
    double wins = 0.0;
    std::size_t neg_seen = 0;
    for (const auto& g : groups) {
        wins += static_cast<double>(g.tp) *
                (static_cast<double>(c.neg - neg_seen - g.fp) + 0.5 * static_cast<double>(g.fp));
        neg_seen += g.fp;
    }
    return wins / (static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double aupr(std::span<const float> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores, labels);
    const Counts c = count_labels(labels);
    if (c.pos == 0)
        throw UndefinedMetric("AUPR undefined: no positive labels");
    const auto groups = threshold_groups(scores, labels);
    std::size_t tp = 0, fp = 0;
    double ap = 0.0;
    for (const auto& g : groups) {
        tp += g.tp;
        fp += g.fp;
        if (g.tp > 0)
            ap += static_cast<double>(g.tp) * static_cast<double>(tp) /
                  static_cast<double>(tp + fp);
    }
    return ap / static_cast<double>(c.pos);
}

double fpr_at_tpr(std::span<const float> scores, std::span<const std::uint8_t> labels,
                  double level) {
    check_lengths(scores, labels);
    if (!(level > 0.0 && level <= 1.0))
        throw InvalidInput("recall level must be in (0, 1]");
    const Counts c = count_labels(labels);
    if (c.pos == 0 || c.neg == 0)
        throw UndefinedMetric("FPR-at-TPR undefined: labels contain a single class");
    const auto groups = threshold_groups(scores, labels);
    std::size_t tp = 0, fp = 0;
    for (const auto& g : groups) {
        tp += g.tp;
        fp += g.fp;
        const double tpr = static_cast<double>(tp) / static_cast<double>(c.pos);
        if (tpr >= level)
            return static_cast<double>(fp) / static_cast<double>(c.neg);
    }
    return 1.0;  // unreachable: tpr hits 1.0 at the last group
}

EvalReport evaluate(std::span<const float> scores, std::span<const std::uint8_t> labels,
                    double level) {
    EvalReport r;
    r.auroc = auroc(scores, labels);
    r.aupr = aupr(scores, labels);
    r.fpr_at_recall = fpr_at_tpr(scores, labels, level);
    r.recall_level = level;
    const Counts c = count_labels(labels);
    r.positives = c.pos;
    r.negatives = c.neg;
    return r;
}

EvalReport evaluate_segmentation(const std::vector<Tensor>& score_maps,
                                 const std::vector<LabelVector>& masks,
                                 double level) {
    if (score_maps.size() != masks.size())
        throw InvalidInput("score map and mask counts differ");
    if (score_maps.empty())
        throw InvalidInput("no images to evaluate");
    EvalReport total;
    total.recall_level = level;
    std::size_t used = 0;
    for (std::size_t i = 0; i < score_maps.size(); ++i) {
        const auto scores = score_maps[i].data();
        const auto labels = masks[i].values();
        if (scores.size() != labels.size())
            throw InvalidInput("score map and mask shapes differ for image " + std::to_string(i));
        const Counts c = count_labels(labels);
        if (c.pos == 0 || c.neg == 0) {
            ++total.skipped_images;
            continue;
        }
        const EvalReport r = evaluate(scores, labels, level);
        total.auroc += r.auroc;
        total.aupr += r.aupr;
        total.fpr_at_recall += r.fpr_at_recall;
        total.positives += r.positives;
        total.negatives += r.negatives;
        ++used;
    }
    if (used == 0)
        throw UndefinedMetric("all images have single-class masks");
    total.auroc /= static_cast<double>(used);
    total.aupr /= static_cast<double>(used);
    total.fpr_at_recall /= static_cast<double>(used);
    return total;
}

CurvePoints roc_curve(std::span<const float> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores, labels);
    const Counts c = count_labels(labels);
    if (c.pos == 0 || c.neg == 0)
        throw UndefinedMetric("ROC curve undefined: labels contain a single class");
    CurvePoints curve;
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    curve.x.push_back(0.0);
    curve.y.push_back(0.0);
    std::size_t tp = 0, fp = 0;
    for (const auto& g : threshold_groups(scores, labels)) {
        tp += g.tp;
        fp += g.fp;
        curve.thresholds.push_back(g.threshold);
        curve.x.push_back(static_cast<double>(fp) / static_cast<double>(c.neg));
        curve.y.push_back(static_cast<double>(tp) / static_cast<double>(c.pos));
    }
    return curve;
}

CurvePoints pr_curve(std::span<const float> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores, labels);
    const Counts c = count_labels(labels);
    if (c.pos == 0 || c.neg == 0)
        throw UndefinedMetric("PR curve undefined: labels contain a single class");
    CurvePoints curve;
    std::size_t tp = 0, fp = 0;
    for (const auto& g : threshold_groups(scores, labels)) {
        tp += g.tp;
        fp += g.fp;
        curve.thresholds.push_back(g.threshold);
        curve.x.push_back(static_cast<double>(tp) / static_cast<double>(c.pos));
        curve.y.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    return curve;
}

void write_curve_csv(const CurvePoints& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw FormatError("cannot open file for writing: " + path.string());
    out.precision(12);
    out << "threshold,x,y\n";
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
        out << curve.thresholds[i] << ',' << curve.x[i] << ',' << curve.y[i] << '\n';
}

}  // namespace oodkit
