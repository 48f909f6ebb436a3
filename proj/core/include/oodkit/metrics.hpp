#pragma once

#include <filesystem>

#include "oodkit/tensor.hpp"

namespace oodkit {

// Detection metrics. Labels: 1 = anomalous = positive class.

struct EvalReport {
    double auroc = 0.0;
    double aupr = 0.0;
    double fpr_at_recall = 0.0;
    double recall_level = 0.95;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t skipped_images = 0;  // segmentation only: single-class masks
};

/// One point per distinct threshold, thresholds descending.
struct CurvePoints {
    std::vector<double> thresholds;
    std::vector<double> x;  // FPR (ROC) or recall (PR)
    std::vector<double> y;  // TPR (ROC) or precision (PR)
};

/// Mann-Whitney AUROC: P(anomaly score > normal score) + 0.5 P(tie).
double auroc(std::span<const float> scores, std::span<const std::uint8_t> labels);

/// Average precision, equal scores processed as one threshold group.
double aupr(std::span<const float> scores, std::span<const std::uint8_t> labels);

/// FPR at the largest threshold whose TPR reaches `level`.
double fpr_at_tpr(std::span<const float> scores, std::span<const std::uint8_t> labels,
                  double level = 0.95);

EvalReport evaluate(std::span<const float> scores, std::span<const std::uint8_t> labels,
                    double level = 0.95);

/// Per-image metrics over pixels, averaged over images. Images with a
/// single-class mask are skipped and counted in the report.
EvalReport evaluate_segmentation(const std::vector<Tensor>& score_maps,
                                 const std::vector<LabelVector>& masks,
                                 double level = 0.95);

CurvePoints roc_curve(std::span<const float> scores, std::span<const std::uint8_t> labels);
CurvePoints pr_curve(std::span<const float> scores, std::span<const std::uint8_t> labels);

/// CSV: "threshold,x,y" per line.
void write_curve_csv(const CurvePoints& curve, const std::filesystem::path& path);

}  // namespace oodkit
