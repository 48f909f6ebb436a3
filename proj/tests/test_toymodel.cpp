#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oodkit/detectors.hpp"
#include "oodkit/toymodel.hpp"
#include "test_util.hpp"

using namespace oodkit;

namespace {

std::vector<std::uint32_t> random_labels(Rng& rng, std::size_t n, std::uint32_t k) {
    std::vector<std::uint32_t> out(n);
    for (auto& v : out) v = static_cast<std::uint32_t>(rng.uniform_below(k));
    return out;
}

/// Two well-separated 2-D clusters for quick end-to-end training checks.
struct TwoClusters {
    Tensor features;
    std::vector<std::uint32_t> labels;
};

TwoClusters two_clusters(Rng& rng, std::size_t per_class) {
    std::vector<float> data;
    std::vector<std::uint32_t> labels;
    for (std::size_t c = 0; c < 2; ++c) {
        const double cx = c == 0 ? -2.0 : 2.0;
        for (std::size_t i = 0; i < per_class; ++i) {
            data.push_back(static_cast<float>(cx + 0.4 * rng.normal()));
            data.push_back(static_cast<float>(0.4 * rng.normal()));
            labels.push_back(static_cast<std::uint32_t>(c));
        }
    }
    return {Tensor({static_cast<std::uint32_t>(2 * per_class), 2}, std::move(data)),
            std::move(labels)};
}

}  // namespace

TEST_CASE("constructor validation") {
    CHECK_THROWS_AS(make_classifier({4}, Head::Softmax, 0.0, false, 1), InvalidInput);
    CHECK_THROWS_AS(make_classifier({4, 3}, Head::Softmax, 1.0, false, 1), InvalidInput);
    CHECK_THROWS_AS(make_classifier({4, 3}, Head::Softmax, 0.0, true, 1), InvalidInput);
    CHECK_THROWS_AS(make_autoencoder({4, 2, 5}, 1), InvalidInput);  // in != out
    CHECK_THROWS_AS(make_autoencoder({4, 4, 4}, 1), InvalidInput);  // no bottleneck
}

TEST_CASE("initialization is seed-deterministic") {
    const auto a = make_classifier({3, 8, 4}, Head::Softmax, 0.0, true, 5);
    const auto b = make_classifier({3, 8, 4}, Head::Softmax, 0.0, true, 5);
    const auto c = make_classifier({3, 8, 4}, Head::Softmax, 0.0, true, 6);
    CHECK(parameters(a) == parameters(b));
    CHECK(parameters(a) != parameters(c));
}

TEST_CASE("parameters round-trip through set_parameters") {
    Rng rng(301);
    auto model = make_classifier({3, 6, 5, 4}, Head::Sigmoid, 0.0, true, 7);
    auto params = parameters(model);
    for (auto& v : params) v = rng.next_double() - 0.5;
    set_parameters(model, params);
    CHECK(parameters(model) == params);

    auto ae = make_autoencoder({5, 2, 5}, 7);
    auto ae_params = parameters(ae);
    for (auto& v : ae_params) v = rng.next_double() - 0.5;
    set_parameters(ae, ae_params);
    CHECK(parameters(ae) == ae_params);
}

TEST_CASE("forward pass") {
    Rng rng(303);
    const auto model = make_classifier({4, 6, 3}, Head::Softmax, 0.5, true, 11);
    const Tensor x = testutil::random_tensor(rng, {5, 4});

    SUBCASE("deterministic without dropout") {
        const auto a = forward(model, x);
        const auto b = forward(model, x);
        CHECK(a.logits == b.logits);
        CHECK(a.confidence == b.confidence);
        REQUIRE(a.confidence.size() == 5);
        for (double c : a.confidence) {
            CHECK(c > 0.0);
            CHECK(c < 1.0);
        }
    }

    SUBCASE("dropout is a function of the seed") {
        const auto a = forward(model, x, 42);
        const auto b = forward(model, x, 42);
        const auto c = forward(model, x, 43);
        CHECK(a.logits == b.logits);
        CHECK(a.logits != c.logits);
    }

    SUBCASE("inverted dropout is unbiased on the output layer") {
        // With one hidden layer the logits are linear in the masked hidden
        // activations, so averaging over many masks recovers the
        // deterministic logits.
        const auto clean = forward(model, x);
        std::vector<double> mean(5 * 3, 0.0);
        const std::size_t trials = 20000;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto noisy = forward(model, x, 1000 + t);
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += noisy.logits[i];
        }
        for (std::size_t i = 0; i < mean.size(); ++i)
            CHECK(mean[i] / trials == doctest::Approx(clean.logits[i]).epsilon(0.05).scale(1.0));
    }

    SUBCASE("input dimension mismatch") {
        CHECK_THROWS_AS(forward(model, Tensor::zeros({2, 3})), InvalidInput);
    }
}

TEST_CASE("classifier gradient matches finite differences") {
    Rng rng(307);
    const Tensor x = testutil::random_tensor(rng, {6, 3});

    for (Head head : {Head::Softmax, Head::Sigmoid}) {
        CAPTURE(static_cast<int>(head));
        auto model = make_classifier({3, 5, 4}, head, 0.0, false, 13);  // 44 params
        const auto labels = random_labels(rng, 6, 4);
        const auto analytic = classifier_loss_gradient(model, x, labels);
        const auto numeric = testutil::finite_difference(
            [&](const std::vector<double>& p) {
                auto m = model;
                set_parameters(m, p);
                return classifier_loss(m, x, labels);
            },
            parameters(model));
        CHECK(testutil::max_relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("confidence gradient matches finite differences") {
    Rng rng(311);
    const Tensor x = testutil::random_tensor(rng, {6, 3});
    auto model = make_classifier({3, 5, 4}, Head::Softmax, 0.0, true, 17);  // 50 params
    const auto labels = random_labels(rng, 6, 4);
    const std::vector<std::uint8_t> gates{1, 0, 1, 1, 0, 1};
    const double lambda = 0.7;
    const auto analytic = confidence_loss_gradient(model, x, labels, gates, lambda);
    const auto numeric = testutil::finite_difference(
        [&](const std::vector<double>& p) {
            auto m = model;
            set_parameters(m, p);
            return confidence_loss(m, x, labels, gates, lambda);
        },
        parameters(model));
    CHECK(testutil::max_relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("confidence loss reduces to plain cross-entropy with closed gates") {
    Rng rng(313);
    const Tensor x = testutil::random_tensor(rng, {5, 3});
    const auto model = make_classifier({3, 5, 4}, Head::Softmax, 0.0, true, 19);
    const auto labels = random_labels(rng, 5, 4);
    const std::vector<std::uint8_t> off(5, 0);
    CHECK(confidence_loss(model, x, labels, off, 0.0) ==
          doctest::Approx(classifier_loss(model, x, labels)).epsilon(1e-12));
}

TEST_CASE("autoencoder gradient matches finite differences") {
    Rng rng(317);
    const Tensor x = testutil::random_tensor(rng, {6, 4});
    auto model = make_autoencoder({4, 3, 4}, 23);  // 31 params
    const auto analytic = autoencoder_loss_gradient(model, x);
    const auto numeric = testutil::finite_difference(
        [&](const std::vector<double>& p) {
            auto m = model;
            set_parameters(m, p);
            return autoencoder_loss(m, x);
        },
        parameters(model));
    CHECK(testutil::max_relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("training the classifier separates two clusters") {
    Rng rng(331);
    const auto data = two_clusters(rng, 100);
    for (Head head : {Head::Softmax, Head::Sigmoid}) {
        CAPTURE(static_cast<int>(head));
        auto model = make_classifier({2, 16, 2}, head, 0.0, false, 29);
        TrainConfig config;
        config.epochs = 30;
        config.seed = 31;
        const TrainTrace trace = train_classifier(model, data.features, data.labels, config);
        REQUIRE(trace.epoch_loss.size() == 31);
        CHECK(trace.epoch_loss.back() < trace.epoch_loss.front());
        const auto result = forward(model, data.features);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < data.labels.size(); ++i) {
            const auto row = result.logits.row(i);
            correct += (row[1] > row[0] ? 1u : 0u) == data.labels[i];
        }
        CHECK(static_cast<double>(correct) / static_cast<double>(data.labels.size()) > 0.95);
    }

    SUBCASE("training is deterministic") {
        auto a = make_classifier({2, 8, 2}, Head::Softmax, 0.0, false, 37);
        auto b = make_classifier({2, 8, 2}, Head::Softmax, 0.0, false, 37);
        TrainConfig config;
        config.epochs = 5;
        train_classifier(a, data.features, data.labels, config);
        train_classifier(b, data.features, data.labels, config);
        CHECK(parameters(a) == parameters(b));
    }
}

TEST_CASE("divergence raises DivergenceError with the epoch") {
    Rng rng(347);
    const auto data = two_clusters(rng, 30);
    auto model = make_classifier({2, 8, 2}, Head::Softmax, 0.0, false, 41);
    TrainConfig config;
    // Large enough to overflow the parameters in one step; the clamped
    // cross-entropy otherwise stays finite under mere saturation.
    config.learning_rate = 1e300;
    config.epochs = 3;
    try {
        train_classifier(model, data.features, data.labels, config);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch >= 1);
    }
}

TEST_CASE("confidence branch training follows the budget rule exactly") {
    Rng rng(349);
    const auto data = two_clusters(rng, 60);
    auto model = make_classifier({2, 8, 2}, Head::Softmax, 0.0, true, 43);
    TrainConfig config;
    config.epochs = 4;
    config.batch_size = 16;
    config.seed = 47;
    const TrainTrace trace =
        train_confidence_branch(model, data.features, data.labels, config);

    REQUIRE(trace.lambda.size() == trace.mean_confidence.size());
    REQUIRE(!trace.lambda.empty());
    // Replay: lambda after batch t is the previous lambda divided by 0.99
    // when the pre-update batch mean confidence was at or under the budget,
    // by 1.01 otherwise.
    double lambda = config.lambda_init;
    for (std::size_t t = 0; t < trace.lambda.size(); ++t) {
        CHECK(trace.mean_confidence[t] >= 0.0);
        CHECK(trace.mean_confidence[t] <= 1.0);
        lambda /= trace.mean_confidence[t] <= config.budget ? config.lambda_divisor_low
                                                            : config.lambda_divisor_high;
        CHECK(trace.lambda[t] == lambda);
    }

    SUBCASE("confidence scores agree with the forward pass") {
        const auto scores = confidence_score(model, data.features);
        const auto result = forward(model, data.features);
        REQUIRE(scores.size() == result.confidence.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            CHECK(scores[i] == doctest::Approx(1.0 - result.confidence[i]).epsilon(1e-12));
    }
}

TEST_CASE("mc dropout posteriors") {
    Rng rng(353);
    const Tensor x = testutil::random_tensor(rng, {4, 3});

    SUBCASE("shape, determinism, and rows summing to one") {
        const auto model = make_classifier({3, 10, 5}, Head::Softmax, 0.3, false, 53);
        const Tensor stack = mc_dropout_posteriors(model, x, 8, 59);
        CHECK(stack.shape() == std::vector<std::uint32_t>{8, 4, 5});
        CHECK(stack == mc_dropout_posteriors(model, x, 8, 59));
        for (std::size_t r = 0; r < 32; ++r) {
            double sum = 0.0;
            for (std::size_t j = 0; j < 5; ++j) sum += stack[r * 5 + j];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
        }
        // Different passes must actually differ under dropout.
        CHECK(dropout_variance_score(stack)[0] > 0.0);
    }

    SUBCASE("zero dropout collapses the variance") {
        const auto model = make_classifier({3, 10, 5}, Head::Softmax, 0.0, false, 53);
        const Tensor stack = mc_dropout_posteriors(model, x, 8, 59);
        const Tensor var = dropout_variance_score(stack);
        for (std::size_t i = 0; i < var.size(); ++i) CHECK(var[i] == doctest::Approx(0.0));
    }

    SUBCASE("fewer than two passes rejected") {
        const auto model = make_classifier({3, 10, 5}, Head::Softmax, 0.3, false, 53);
        CHECK_THROWS_AS(mc_dropout_posteriors(model, x, 1, 59), InvalidInput);
    }
}

TEST_CASE("input gradient matches finite differences on the inputs") {
    Rng rng(359);
    const auto model = make_classifier({3, 6, 4}, Head::Softmax, 0.0, false, 61);
    const Tensor x = testutil::random_tensor(rng, {3, 3});
    const Tensor grad = input_gradient(model, x);

    auto log_max_prob = [&](const Tensor& features, std::size_t row) {
        const auto result = forward(model, features);
        const auto p = softmax(result.logits.row(row));
        return std::log(static_cast<double>(*std::max_element(p.begin(), p.end())));
    };

    for (std::size_t row = 0; row < 3; ++row) {
        for (std::size_t j = 0; j < 3; ++j) {
            const double h = 1e-3;  // f32 features limit the usable step
            Tensor plus = x, minus = x;
            plus[row * 3 + j] += static_cast<float>(h);
            minus[row * 3 + j] -= static_cast<float>(h);
            const double numeric =
                (log_max_prob(plus, row) - log_max_prob(minus, row)) / (2.0 * h);
            CHECK(grad[row * 3 + j] == doctest::Approx(numeric).epsilon(1e-3).scale(1.0));
        }
    }
}

TEST_CASE("odin score") {
    Rng rng(367);
    const auto model = make_classifier({4, 8, 3}, Head::Softmax, 0.0, false, 67);
    const Tensor x = testutil::random_tensor(rng, {10, 4});

    SUBCASE("epsilon 0, T 1 is plain MSP") {
        const Tensor odin = odin_score(model, x, 1.0, 0.0);
        const Tensor msp = msp_score(forward(model, x).logits);
        for (std::size_t i = 0; i < 10; ++i) CHECK(odin[i] == msp[i]);
    }

    SUBCASE("maxlogit variant") {
        const Tensor odin = odin_score(model, x, 2.0, 0.0, true);
        const Tensor ml = maxlogit_score(temperature_scale(forward(model, x).logits, 2.0));
        for (std::size_t i = 0; i < 10; ++i) CHECK(odin[i] == ml[i]);
    }

    SUBCASE("the perturbation raises confidence on average") {
        const Tensor base = odin_score(model, x, 1.0, 0.0);
        const Tensor nudged = odin_score(model, x, 1.0, 0.05);
        double base_mean = 0.0, nudged_mean = 0.0;
        for (std::size_t i = 0; i < 10; ++i) {
            base_mean += base[i];
            nudged_mean += nudged[i];
        }
        CHECK(nudged_mean < base_mean);  // scores drop as confidence rises
    }

    SUBCASE("validation") {
        CHECK_THROWS_AS(odin_score(model, x, 0.0, 0.0), InvalidInput);
        CHECK_THROWS_AS(odin_score(model, x, 1.0, -0.1), InvalidInput);
    }
}

TEST_CASE("autoencoder training and reconstruction") {
    Rng rng(373);
    // Data on a 1-D line embedded in 4-D: compressible through a width-2
    // bottleneck.
    std::vector<float> data;
    for (int i = 0; i < 200; ++i) {
        const double t = rng.normal();
        data.push_back(static_cast<float>(t));
        data.push_back(static_cast<float>(0.5 * t));
        data.push_back(static_cast<float>(-t));
        data.push_back(static_cast<float>(0.25 * t));
    }
    const Tensor x({200, 4}, std::move(data));
    auto model = make_autoencoder({4, 2, 4}, 71);
    TrainConfig config;
    config.epochs = 400;
    config.learning_rate = 0.03;
    config.seed = 73;
    const TrainTrace trace = train_autoencoder(model, x, config);
    REQUIRE(trace.epoch_loss.size() == 401);
    CHECK(trace.epoch_loss.back() < 0.2 * trace.epoch_loss.front());

    SUBCASE("reconstruct agrees with the loss") {
        const Tensor recon = reconstruct(model, x);
        CHECK(recon.shape() == x.shape());
        double mse = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double diff = static_cast<double>(recon[i]) - x[i];
            mse += diff * diff;
        }
        mse /= static_cast<double>(x.size());
        CHECK(mse == doctest::Approx(autoencoder_loss(model, x)).epsilon(1e-4));
    }

    SUBCASE("reconstruction error flags off-manifold points") {
        const Tensor scores = reconstruction_score(x, reconstruct(model, x));
        const Tensor off({1, 4}, {3.0f, -3.0f, 3.0f, -3.0f});  // violates the line
        const Tensor off_score = reconstruction_score(off, reconstruct(model, off));
        double mean = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) mean += scores[i];
        mean /= static_cast<double>(scores.size());
        CHECK(off_score[0] > 10.0 * mean);
    }
}
