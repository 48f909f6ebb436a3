#pragma once

#include "oodkit/tensor.hpp"

namespace oodkit {

// Classical outlier detectors fit on in-distribution logit vectors.
// Both score with higher = more anomalous.

struct LofModel {
    std::size_t k = 20;
    std::size_t dim = 0;
    std::vector<float> points;  // N x dim, row-major
    // Per training point, cached from fitting:
    std::vector<double> k_distance;
    std::vector<std::vector<std::uint32_t>> neighbors;  // ties at k-distance included
    std::vector<double> lrd;

    std::size_t count() const { return k_distance.size(); }
};

struct IsoNode {
    std::int32_t feature = -1;  // -1: external node
    float threshold = 0.0f;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t size = 0;  // external node size
};

struct IsolationForestModel {
    std::vector<std::vector<IsoNode>> trees;
    std::uint32_t subsample_size = 256;
    std::uint64_t seed = 0;
    std::size_t dim = 0;
};

/// Caps the local reachability density when duplicate points make the mean
/// reachability distance zero.
constexpr double kLrdCap = 1e12;

LofModel lof_fit(const Tensor& train, std::size_t k = 20);

/// mean(lrd of the query's k training neighbors) / lrd(query).
std::vector<double> lof_score(const LofModel& model, const Tensor& queries);

IsolationForestModel iforest_fit(const Tensor& train, std::uint32_t tree_count = 100,
                                 std::uint32_t subsample_size = 256, std::uint64_t seed = 0);

/// 2^(-E[h(x)] / c(psi)), in (0, 1).
std::vector<double> iforest_score(const IsolationForestModel& model, const Tensor& queries);

/// Average path length of an unsuccessful BST search: c(1) = 0, c(2) = 1,
/// c(n) = 2 H(n-1) - 2 (n-1)/n with H(m) ~ ln m + Euler-Mascheroni.
double average_path_length(std::size_t n);

}  // namespace oodkit
