#include "oodkit/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oodkit/rng.hpp"

namespace oodkit {

namespace {

double sq_dist(const float* a, const float* b, std::size_t d) {
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = static_cast<double>(a[i]) - b[i];
        sum += diff * diff;
    }
    return sum;
}

/// k-distance and neighbor set (ties at the k-distance included) of `point`
/// among the model's training points, excluding index `self` when >= 0.
struct NeighborInfo {
    double k_distance;
    std::vector<std::uint32_t> neighbors;
};

NeighborInfo k_neighbors(const float* point, const std::vector<float>& points, std::size_t n,
                         std::size_t dim, std::size_t k, std::ptrdiff_t self) {
    std::vector<std::pair<double, std::uint32_t>> dists;
    dists.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (static_cast<std::ptrdiff_t>(j) == self) continue;
        dists.emplace_back(std::sqrt(sq_dist(point, points.data() + j * dim, dim)),
                           static_cast<std::uint32_t>(j));
    }
    std::sort(dists.begin(), dists.end());
    NeighborInfo info;
    info.k_distance = dists[k - 1].first;
    for (const auto& [d, j] : dists) {
        if (d > info.k_distance) break;
        info.neighbors.push_back(j);
    }
    return info;
}

double local_reachability_density(const float* point, const NeighborInfo& info,
                                  const std::vector<float>& points,
                                  const std::vector<double>& k_distance, std::size_t dim) {
    double sum = 0.0;
    for (auto j : info.neighbors) {
        const double d = std::sqrt(sq_dist(point, points.data() + j * dim, dim));
        sum += std::max(d, k_distance[j]);  // reachability distance
    }
    const double mean = sum / static_cast<double>(info.neighbors.size());
    if (mean <= 0.0) return kLrdCap;
    return std::min(1.0 / mean, kLrdCap);
}

}  // namespace

LofModel lof_fit(const Tensor& train, std::size_t k) {
    if (train.rank() != 2)
        throw InvalidInput("lof_fit requires an N x D tensor");
    const std::size_t n = train.dim(0);
    const std::size_t dim = train.dim(1);
    if (k < 1)
        throw InvalidInput("k must be >= 1");
    if (n <= k)
        throw InvalidInput("need more than k=" + std::to_string(k) + " training points, got " +
                           std::to_string(n));
    LofModel model;
    model.k = k;
    model.dim = dim;
    model.points.assign(train.data().begin(), train.data().end());
    model.k_distance.resize(n);
    model.neighbors.resize(n);
    model.lrd.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto info = k_neighbors(model.points.data() + i * dim, model.points, n, dim, k,
                                static_cast<std::ptrdiff_t>(i));
        model.k_distance[i] = info.k_distance;
        model.neighbors[i] = std::move(info.neighbors);
    }
    for (std::size_t i = 0; i < n; ++i) {
        NeighborInfo info{model.k_distance[i], model.neighbors[i]};
        model.lrd[i] = local_reachability_density(model.points.data() + i * dim, info,
                                                  model.points, model.k_distance, dim);
    }
    return model;
}

std::vector<double> lof_score(const LofModel& model, const Tensor& queries) {
    if (queries.rank() != 2 || queries.dim(1) != model.dim)
        throw InvalidInput("query dimensionality does not match the fitted model");
    const std::size_t m = queries.dim(0);
    const std::size_t n = model.count();
    std::vector<double> scores(m);
    for (std::size_t q = 0; q < m; ++q) {
        const float* point = queries.data().data() + q * model.dim;
        const auto info = k_neighbors(point, model.points, n, model.dim, model.k, -1);
        const double query_lrd = local_reachability_density(point, info, model.points,
                                                            model.k_distance, model.dim);
        double neighbor_lrd = 0.0;
        for (auto j : info.neighbors) neighbor_lrd += model.lrd[j];
        neighbor_lrd /= static_cast<double>(info.neighbors.size());
        scores[q] = neighbor_lrd / query_lrd;
    }
    return scores;
}

double average_path_length(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    constexpr double kEulerMascheroni = 0.5772156649;
    const double h = std::log(static_cast<double>(n - 1)) + kEulerMascheroni;
    return 2.0 * h - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

namespace {

struct TreeBuilder {
    const std::vector<float>& points;
    std::size_t dim;
    std::size_t depth_cap;
    Rng& rng;
    std::vector<IsoNode> nodes;

    std::int32_t build(std::vector<std::uint32_t>& sample, std::size_t begin, std::size_t end,
                       std::size_t depth) {
        const std::size_t count = end - begin;
        const std::int32_t id = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        if (count <= 1 || depth >= depth_cap) {
            nodes[id].size = static_cast<std::uint32_t>(count);
            return id;
        }
        // Dimensions with spread; a node whose points coincide everywhere
        // becomes external.
        std::vector<std::uint32_t> usable;
        std::vector<float> lo(dim), hi(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            float mn = points[sample[begin] * dim + d];
            float mx = mn;
            for (std::size_t i = begin + 1; i < end; ++i) {
                const float v = points[sample[i] * dim + d];
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            lo[d] = mn;
            hi[d] = mx;
            if (mx > mn) usable.push_back(static_cast<std::uint32_t>(d));
        }
        if (usable.empty()) {
            nodes[id].size = static_cast<std::uint32_t>(count);
            return id;
        }
        const std::uint32_t d = usable[rng.uniform_below(usable.size())];
        float threshold;
        do {
            const double u = rng.next_double();
            threshold = static_cast<float>(lo[d] + u * (static_cast<double>(hi[d]) - lo[d]));
        } while (!(threshold > lo[d] && threshold < hi[d]));
        const auto mid_it = std::partition(
            sample.begin() + static_cast<std::ptrdiff_t>(begin),
            sample.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::uint32_t idx) { return points[idx * dim + d] < threshold; });
        const std::size_t mid = static_cast<std::size_t>(mid_it - sample.begin());
        nodes[id].feature = static_cast<std::int32_t>(d);
        nodes[id].threshold = threshold;
        const std::int32_t left = build(sample, begin, mid, depth + 1);
        const std::int32_t right = build(sample, mid, end, depth + 1);
        nodes[id].left = left;
        nodes[id].right = right;
        return id;
    }
};

}  // namespace

IsolationForestModel iforest_fit(const Tensor& train, std::uint32_t tree_count,
                                 std::uint32_t subsample_size, std::uint64_t seed) {
    if (train.rank() != 2)
        throw InvalidInput("iforest_fit requires an N x D tensor");
    const std::size_t n = train.dim(0);
    const std::size_t dim = train.dim(1);
    if (n < 2)
        throw InvalidInput("need at least 2 training points");
    if (tree_count < 1)
        throw InvalidInput("tree_count must be >= 1");
    const std::uint32_t psi = std::min<std::uint32_t>(subsample_size,
                                                      static_cast<std::uint32_t>(n));
    const std::size_t depth_cap =
        static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi))));

    IsolationForestModel model;
    model.subsample_size = psi;
    model.seed = seed;
    model.dim = dim;
    model.trees.resize(tree_count);

    const std::vector<float> points(train.data().begin(), train.data().end());
    for (std::uint32_t t = 0; t < tree_count; ++t) {
        Rng rng(substream_seed(seed, "iforest-tree", t));
        // Partial Fisher-Yates: first psi entries become the subsample.
        std::vector<std::uint32_t> sample(n);
        std::iota(sample.begin(), sample.end(), 0);
        for (std::uint32_t i = 0; i < psi; ++i) {
            const std::size_t j = i + rng.uniform_below(n - i);
            std::swap(sample[i], sample[j]);
        }
        sample.resize(psi);
        TreeBuilder builder{points, dim, depth_cap, rng, {}};
        builder.build(sample, 0, psi, 0);
        model.trees[t] = std::move(builder.nodes);
    }
    return model;
}

std::vector<double> iforest_score(const IsolationForestModel& model, const Tensor& queries) {
    if (queries.rank() != 2 || queries.dim(1) != model.dim)
        throw InvalidInput("query dimensionality does not match the fitted model");
    const std::size_t m = queries.dim(0);
    const double norm = average_path_length(model.subsample_size);
    std::vector<double> scores(m);
    for (std::size_t q = 0; q < m; ++q) {
        const float* point = queries.data().data() + q * model.dim;
        double total = 0.0;
        for (const auto& tree : model.trees) {
            double depth = 0.0;
            std::int32_t node = 0;
            while (tree[node].feature >= 0) {
                node = point[tree[node].feature] < tree[node].threshold ? tree[node].left
                                                                        : tree[node].right;
                depth += 1.0;
            }
            total += depth + average_path_length(tree[node].size);
        }
        const double mean_path = total / static_cast<double>(model.trees.size());
        scores[q] = std::pow(2.0, -mean_path / norm);
    }
    return scores;
}

}  // namespace oodkit
