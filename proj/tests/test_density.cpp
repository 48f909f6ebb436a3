#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oodkit/density.hpp"
#include "test_util.hpp"

using namespace oodkit;

namespace {

Tensor cluster_with_outlier(Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<float> data;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t d = 0; d < dim; ++d)
            data.push_back(static_cast<float>(rng.normal() * 0.5));
    for (std::size_t d = 0; d < dim; ++d) data.push_back(20.0f);  // far outlier
    return Tensor({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(dim)},
                  std::move(data));
}

}  // namespace

TEST_CASE("lof matches the brute-force reference") {
    Rng rng(201);
    for (std::size_t k : {1, 2, 5, 20}) {
        CAPTURE(k);
        const std::size_t n = 40;
        const Tensor train = testutil::random_tensor(rng, {n, 3}, 5.0);
        const Tensor queries = testutil::random_tensor(rng, {15, 3}, 6.0);
        const LofModel model = lof_fit(train, k);
        const auto got = lof_score(model, queries);
        const testutil::BruteLof brute{testutil::to_rows(train), k};
        const auto want = brute.score(testutil::to_rows(queries));
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(std::abs(got[i] - want[i]) < 1e-6);
    }
}

TEST_CASE("lof with duplicated training points hits the lrd cap without NaN") {
    std::vector<float> data;
    for (int i = 0; i < 10; ++i) {
        data.push_back(1.0f);
        data.push_back(2.0f);
    }
    const Tensor train({10, 2}, std::move(data));
    const LofModel model = lof_fit(train, 3);
    const auto scores =
        lof_score(model, Tensor({2, 2}, {1.0f, 2.0f, 50.0f, 50.0f}));
    CHECK(std::isfinite(scores[0]));
    CHECK(std::isfinite(scores[1]));
    CHECK(scores[1] > scores[0]);
}

TEST_CASE("lof flags an obvious outlier") {
    Rng rng(203);
    const Tensor train = cluster_with_outlier(rng, 101, 4);
    // Fit on the dense cluster only (first 100 points).
    std::vector<float> cluster(train.data().begin(), train.data().begin() + 400);
    const LofModel model = lof_fit(Tensor({100, 4}, std::move(cluster)), 20);
    const auto scores = lof_score(model, Tensor({2, 4}, {0.0f, 0.0f, 0.0f, 0.0f,  //
                                                         20.0f, 20.0f, 20.0f, 20.0f}));
    CHECK(scores[0] < 2.0);
    CHECK(scores[1] > 10.0);
}

TEST_CASE("lof ties at the k-distance enlarge the neighbor set") {
    // Four train points at distance 1 from origin plus one far away; with k=2
    // the query at the origin has four tied neighbors at its 2-distance.
    const Tensor train({5, 2}, {1, 0, -1, 0, 0, 1, 0, -1, 10, 10});
    const LofModel model = lof_fit(train, 2);
    const auto got = lof_score(model, Tensor({1, 2}, {0.0f, 0.0f}));
    const testutil::BruteLof brute{testutil::to_rows(train), 2};
    const auto want = brute.score({{0.0, 0.0}});
    CHECK(std::abs(got[0] - want[0]) < 1e-9);
}

TEST_CASE("lof input validation") {
    CHECK_THROWS_AS(lof_fit(Tensor::zeros({3, 2}), 3), InvalidInput);  // k >= n
    CHECK_THROWS_AS(lof_fit(Tensor::zeros({5}), 2), InvalidInput);     // rank != 2
    const LofModel model = lof_fit(Tensor({4, 2}, {0, 0, 1, 0, 0, 1, 1, 1}), 2);
    CHECK_THROWS_AS(lof_score(model, Tensor::zeros({2, 3})), InvalidInput);  // dim mismatch
}

TEST_CASE("average_path_length matches the published constants") {
    CHECK(average_path_length(0) == doctest::Approx(0.0));
    CHECK(average_path_length(1) == doctest::Approx(0.0));
    CHECK(average_path_length(2) == doctest::Approx(1.0));
    CHECK(average_path_length(3) == doctest::Approx(1.2074).epsilon(1e-4));
    CHECK(average_path_length(256) == doctest::Approx(10.244).epsilon(1e-3));
}

TEST_CASE("iforest determinism") {
    Rng rng(207);
    const Tensor train = testutil::random_tensor(rng, {300, 4}, 2.0);
    const Tensor queries = testutil::random_tensor(rng, {20, 4}, 3.0);
    const IsolationForestModel a = iforest_fit(train, 50, 128, 99);
    const IsolationForestModel b = iforest_fit(train, 50, 128, 99);
    CHECK(a.trees.size() == 50);
    CHECK(iforest_score(a, queries) == iforest_score(b, queries));

    SUBCASE("different seeds give different forests") {
        const IsolationForestModel c = iforest_fit(train, 50, 128, 100);
        CHECK(iforest_score(a, queries) != iforest_score(c, queries));
    }
}

TEST_CASE("iforest scores lie in (0, 1) and rank an outlier above the cluster") {
    Rng rng(211);
    std::vector<float> data;
    for (int i = 0; i < 400; ++i)
        for (int d = 0; d < 3; ++d) data.push_back(static_cast<float>(rng.normal()));
    const Tensor train({400, 3}, std::move(data));
    const IsolationForestModel model = iforest_fit(train, 100, 256, 7);
    const auto scores = iforest_score(
        model, Tensor({2, 3}, {0.0f, 0.0f, 0.0f, 15.0f, -15.0f, 15.0f}));
    for (double s : scores) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    CHECK(scores[1] > scores[0]);
    CHECK(scores[1] > 0.6);   // isolated quickly
    CHECK(scores[0] < 0.55);  // near the mode: path near average
}

TEST_CASE("iforest tree structure invariants") {
    Rng rng(213);
    const Tensor train = testutil::random_tensor(rng, {500, 3}, 1.0);
    const std::uint32_t psi = 256;
    const IsolationForestModel model = iforest_fit(train, 20, psi, 3);
    const std::uint32_t depth_cap =
        static_cast<std::uint32_t>(std::ceil(std::log2(static_cast<double>(psi))));

    for (const auto& tree : model.trees) {
        REQUIRE(!tree.empty());
        // Walk from the root, checking sizes and the depth cap.
        std::vector<std::pair<std::int32_t, std::uint32_t>> stack{{0, 0}};
        std::uint64_t external_total = 0;
        while (!stack.empty()) {
            const auto [idx, depth] = stack.back();
            stack.pop_back();
            const IsoNode& node = tree[static_cast<std::size_t>(idx)];
            if (node.feature < 0) {
                CHECK(node.size >= 1);
                external_total += node.size;
            } else {
                CHECK(depth < depth_cap);
                CHECK(node.feature < 3);
                stack.emplace_back(node.left, depth + 1);
                stack.emplace_back(node.right, depth + 1);
            }
        }
        CHECK(external_total == psi);  // subsample fully partitioned
    }
}

TEST_CASE("iforest subsample clamps to the training size") {
    Rng rng(217);
    const Tensor train = testutil::random_tensor(rng, {30, 2}, 1.0);
    const IsolationForestModel model = iforest_fit(train, 10, 256, 1);
    for (const auto& tree : model.trees) {
        std::uint64_t total = 0;
        for (const auto& node : tree)
            if (node.feature < 0) total += node.size;
        CHECK(total == 30);
    }
}

TEST_CASE("iforest constant training data is fully degenerate") {
    const Tensor train({10, 2}, std::vector<float>(20, 3.0f));
    const IsolationForestModel model = iforest_fit(train, 5, 256, 2);
    for (const auto& tree : model.trees) {
        REQUIRE(tree.size() == 1);  // no dimension has spread: root is external
        CHECK(tree[0].feature == -1);
        CHECK(tree[0].size == 10);
    }
    // Every query lands on the root with path length c(10): score exactly 0.5
    // relative to itself... E[h] = 0 + c(10), so score = 2^(-c(10)/c(10)) = 0.5.
    const auto scores = iforest_score(model, Tensor({1, 2}, {3.0f, 3.0f}));
    CHECK(scores[0] == doctest::Approx(0.5));
}

TEST_CASE("iforest input validation") {
    CHECK_THROWS_AS(iforest_fit(Tensor::zeros({5}), 10, 256, 0), InvalidInput);
    CHECK_THROWS_AS(iforest_fit(Tensor::zeros({5, 2}), 0, 256, 0), InvalidInput);
    const IsolationForestModel model = iforest_fit(Tensor::zeros({5, 2}), 3, 256, 0);
    CHECK_THROWS_AS(iforest_score(model, Tensor::zeros({1, 3})), InvalidInput);
}
