#pragma once

// Shared test helpers: random fixtures and independent brute-force oracles.
// Oracles here deliberately use the plainest possible formulation (double
// loops, exhaustive scans) and never share code with the library paths they
// check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "oodkit/rng.hpp"
#include "oodkit/tensor.hpp"

namespace testutil {

inline oodkit::Tensor random_tensor(oodkit::Rng& rng, std::vector<std::uint32_t> shape,
                                    double scale = 1.0) {
    std::vector<float> data(oodkit::shape_product(shape));
    for (auto& v : data) v = static_cast<float>(scale * (2.0 * rng.next_double() - 1.0));
    return oodkit::Tensor(std::move(shape), std::move(data));
}

/// Pairwise AUROC oracle: (#anomaly>normal + 0.5 #ties) / (P*N).
inline double auroc_pairwise(std::span<const float> scores,
                             std::span<const std::uint8_t> labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

/// Average-precision oracle via an exhaustive sweep over distinct score
/// values in descending order, ties as one group.
inline double aupr_sweep(std::span<const float> scores, std::span<const std::uint8_t> labels) {
    std::vector<float> thresholds(scores.begin(), scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::size_t total_pos = 0;
    for (auto l : labels) total_pos += l;
    double ap = 0.0;
    std::size_t prev_tp = 0;
    for (float t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) (labels[i] ? tp : fp)++;
        }
        ap += static_cast<double>(tp - prev_tp) * static_cast<double>(tp) /
              static_cast<double>(tp + fp);
        prev_tp = tp;
    }
    return ap / static_cast<double>(total_pos);
}

/// FPR at the largest threshold reaching the recall level, exhaustive scan.
inline double fpr_at_tpr_sweep(std::span<const float> scores,
                               std::span<const std::uint8_t> labels, double level) {
    std::vector<float> thresholds(scores.begin(), scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::size_t total_pos = 0, total_neg = 0;
    for (auto l : labels) (l ? total_pos : total_neg)++;
    for (float t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= t) (labels[i] ? tp : fp)++;
        if (static_cast<double>(tp) / static_cast<double>(total_pos) >= level)
            return static_cast<double>(fp) / static_cast<double>(total_neg);
    }
    return 1.0;
}

/// O(N^2 M) LOF reference: textbook formulation, recomputed from scratch.
struct BruteLof {
    std::vector<std::vector<double>> train;
    std::size_t k;

    static double dist(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    }

    // k-distance and neighbor set among training points, excluding `self`.
    void neighborhood(const std::vector<double>& p, std::ptrdiff_t self, double& kdist,
                      std::vector<std::size_t>& nbrs) const {
        std::vector<std::pair<double, std::size_t>> ds;
        for (std::size_t j = 0; j < train.size(); ++j) {
            if (static_cast<std::ptrdiff_t>(j) == self) continue;
            ds.emplace_back(dist(p, train[j]), j);
        }
        std::sort(ds.begin(), ds.end());
        kdist = ds[k - 1].first;
        nbrs.clear();
        for (const auto& [d, j] : ds)
            if (d <= kdist) nbrs.push_back(j);
    }

    double lrd_of(const std::vector<double>& p, std::ptrdiff_t self,
                  const std::vector<double>& train_kdist) const {
        double kdist;
        std::vector<std::size_t> nbrs;
        neighborhood(p, self, kdist, nbrs);
        double sum = 0.0;
        for (auto j : nbrs) sum += std::max(dist(p, train[j]), train_kdist[j]);
        const double mean = sum / static_cast<double>(nbrs.size());
        if (mean <= 0.0) return 1e12;
        return std::min(1.0 / mean, 1e12);
    }

    std::vector<double> train_kdist() const {
        std::vector<double> out(train.size());
        std::vector<std::size_t> nbrs;
        for (std::size_t i = 0; i < train.size(); ++i)
            neighborhood(train[i], static_cast<std::ptrdiff_t>(i), out[i], nbrs);
        return out;
    }

    std::vector<double> score(const std::vector<std::vector<double>>& queries) const {
        const auto kdist = train_kdist();
        std::vector<double> train_lrd(train.size());
        for (std::size_t i = 0; i < train.size(); ++i)
            train_lrd[i] = lrd_of(train[i], static_cast<std::ptrdiff_t>(i), kdist);
        std::vector<double> out;
        for (const auto& q : queries) {
            double qkdist;
            std::vector<std::size_t> nbrs;
            neighborhood(q, -1, qkdist, nbrs);
            const double qlrd = lrd_of(q, -1, kdist);
            double mean = 0.0;
            for (auto j : nbrs) mean += train_lrd[j];
            mean /= static_cast<double>(nbrs.size());
            out.push_back(mean / qlrd);
        }
        return out;
    }
};

inline std::vector<std::vector<double>> to_rows(const oodkit::Tensor& t) {
    std::vector<std::vector<double>> rows(t.dim(0), std::vector<double>(t.dim(1)));
    for (std::size_t i = 0; i < t.dim(0); ++i)
        for (std::size_t j = 0; j < t.dim(1); ++j) rows[i][j] = t[i * t.dim(1) + j];
    return rows;
}

/// Central finite differences of f at x.
template <typename F>
std::vector<double> finite_difference(F&& f, std::vector<double> x, double h = 1e-5) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

/// Max relative error between two gradients, with an absolute floor for
/// near-zero entries.
inline double max_relative_error(std::span<const double> a, std::span<const double> b,
                                 double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace testutil
