#include "oodkit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oodkit/rng.hpp"

namespace oodkit {

namespace {

std::vector<std::uint32_t> with_count(std::size_t count, std::span<const std::uint32_t> shape) {
    std::vector<std::uint32_t> full;
    full.push_back(static_cast<std::uint32_t>(count));
    full.insert(full.end(), shape.begin(), shape.end());
    return full;
}

void check_gen_args(std::size_t count, std::span<const std::uint32_t> shape) {
    if (count < 1)
        throw InvalidInput("count must be >= 1");
    if (shape.empty())
        throw InvalidInput("per-example shape must have rank >= 1");
    for (auto d : shape)
        if (d == 0)
            throw InvalidInput("shape dimensions must all be >= 1");
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const auto size = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= size) {
        if (i < 0) i = -i - 1;
        if (i >= size) i = 2 * size - i - 1;
    }
    return static_cast<std::size_t>(i);
}

/// 1-D Gaussian blur along one axis of an H x W plane, reflect padding.
void blur_axis(std::vector<double>& img, std::size_t h, std::size_t w,
               const std::vector<double>& kernel, bool rows) {
    const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    std::vector<double> out(img.size());
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                std::size_t yy = y, xx = x;
                if (rows)
                    xx = reflect_index(static_cast<std::ptrdiff_t>(x) + t, w);
                else
                    yy = reflect_index(static_cast<std::ptrdiff_t>(y) + t, h);
                acc += kernel[static_cast<std::size_t>(t + radius)] * img[yy * w + xx];
            }
            out[y * w + x] = acc;
        }
    }
    img = std::move(out);
}

}  // namespace

Tensor gen_gaussian_ood(std::size_t count, std::vector<std::uint32_t> shape,
                        std::uint64_t seed, double sigma) {
    check_gen_args(count, shape);
    const std::size_t per_image = shape_product(shape);
    std::vector<float> data(count * per_image);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(substream_seed(seed, "gaussian", i));
        for (std::size_t j = 0; j < per_image; ++j) {
            const double v = sigma * rng.normal();
            data[i * per_image + j] = static_cast<float>(std::clamp(v, -1.0, 1.0));
        }
    }
    return Tensor(with_count(count, shape), std::move(data));
}

Tensor gen_rademacher_ood(std::size_t count, std::vector<std::uint32_t> shape,
                          std::uint64_t seed) {
    check_gen_args(count, shape);
    const std::size_t per_image = shape_product(shape);
    std::vector<float> data(count * per_image);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(substream_seed(seed, "rademacher", i));
        for (std::size_t j = 0; j < per_image; ++j)
            data[i * per_image + j] = rng.bernoulli(0.5) ? 1.0f : -1.0f;
    }
    return Tensor(with_count(count, shape), std::move(data));
}

Tensor gen_blobs_ood(std::size_t count, std::vector<std::uint32_t> shape,
                     std::uint64_t seed, double blur_sigma) {
    check_gen_args(count, shape);
    if (shape.size() != 2 && shape.size() != 3)
        throw InvalidInput("blobs require an H x W or H x W x C shape");
    if (!(blur_sigma > 0.0))
        throw InvalidInput("blur_sigma must be > 0");
    const std::size_t h = shape[0];
    const std::size_t w = shape[1];
    const std::size_t channels = shape.size() == 3 ? shape[2] : 1;

    const auto radius = static_cast<std::size_t>(std::lround(3.0 * blur_sigma));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        const double t = static_cast<double>(i) - static_cast<double>(radius);
        kernel[i] = std::exp(-t * t / (2.0 * blur_sigma * blur_sigma));
        ksum += kernel[i];
    }
    for (auto& v : kernel) v /= ksum;

    const std::size_t per_image = h * w * channels;
    std::vector<float> data(count * per_image);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(substream_seed(seed, "blobs", i));
        for (std::size_t c = 0; c < channels; ++c) {
            std::vector<double> plane(h * w);
            for (auto& v : plane) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
            blur_axis(plane, h, w, kernel, /*rows=*/true);
            blur_axis(plane, h, w, kernel, /*rows=*/false);
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    data[i * per_image + (y * w + x) * channels + c] =
                        plane[y * w + x] >= 0.0 ? 1.0f : -1.0f;
        }
    }
    return Tensor(with_count(count, shape), std::move(data));
}

MixtureSpec make_mixture_spec(std::uint32_t class_count, std::uint32_t feature_dim,
                              double class_sigma, std::uint32_t fine_grained_pairs,
                              double fine_separation, double base_separation,
                              std::uint64_t seed) {
    if (class_count < 2)
        throw InvalidInput("need at least 2 classes");
    if (2 * fine_grained_pairs > class_count)
        throw InvalidInput("more fine-grained pair members than classes");
    const std::uint32_t locations = class_count - fine_grained_pairs;
    if (locations > feature_dim)
        throw InvalidInput("need feature_dim >= " + std::to_string(locations) +
                           " to place " + std::to_string(locations) + " base locations");
    // Base locations sit on scaled coordinate axes; the minimum pairwise
    // distance is base_separation * sqrt(2).
    const double min_location_dist = base_separation * std::sqrt(2.0);
    if (!(fine_separation < min_location_dist))
        throw InvalidInput("fine_separation must be below the base location separation");

    MixtureSpec spec;
    spec.class_count = class_count;
    spec.feature_dim = feature_dim;
    spec.class_sigma = class_sigma;
    spec.fine_grained_pairs = fine_grained_pairs;
    spec.fine_separation = fine_separation;
    spec.base_separation = base_separation;

    std::vector<float> means(static_cast<std::size_t>(class_count) * feature_dim, 0.0f);
    auto set_mean = [&](std::uint32_t k, std::uint32_t axis, std::span<const double> offset) {
        float* row = means.data() + static_cast<std::size_t>(k) * feature_dim;
        row[axis] += static_cast<float>(base_separation);
        for (std::uint32_t d = 0; d < feature_dim; ++d)
            row[d] += static_cast<float>(offset.empty() ? 0.0 : offset[d]);
    };

    for (std::uint32_t p = 0; p < fine_grained_pairs; ++p) {
        // Random unit direction splitting the pair around its shared location.
        Rng rng(substream_seed(seed, "mixture-pair-dir", p));
        std::vector<double> dir(feature_dim);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& v : dir) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
        } while (norm < 1e-9);
        std::vector<double> plus(feature_dim), minus(feature_dim);
        for (std::uint32_t d = 0; d < feature_dim; ++d) {
            plus[d] = 0.5 * fine_separation * dir[d] / norm;
            minus[d] = -plus[d];
        }
        set_mean(2 * p, p, plus);
        set_mean(2 * p + 1, p, minus);
    }
    for (std::uint32_t k = 2 * fine_grained_pairs; k < class_count; ++k)
        set_mean(k, fine_grained_pairs + (k - 2 * fine_grained_pairs), {});

    spec.means = Tensor({class_count, feature_dim}, std::move(means));
    return spec;
}

double mixture_base_separation_distance(const MixtureSpec& spec) {
    return spec.base_separation * std::sqrt(2.0);
}

LabeledDataset gen_mixture_dataset(const MixtureSpec& spec, std::size_t per_class,
                                   std::uint64_t seed) {
    if (per_class < 1)
        throw InvalidInput("per_class must be >= 1");
    if (spec.means.size() == 0)
        throw InvalidInput("mixture spec has no means; use make_mixture_spec");
    const std::size_t k = spec.class_count;
    const std::size_t d = spec.feature_dim;
    const std::size_t n = k * per_class;
    std::vector<float> features(n * d);
    std::vector<std::uint32_t> labels(n);
    for (std::size_t c = 0; c < k; ++c) {
        Rng rng(substream_seed(seed, "mixture-class", c));
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t row = c * per_class + i;
            for (std::size_t j = 0; j < d; ++j)
                features[row * d + j] = static_cast<float>(
                    spec.means[c * d + j] + spec.class_sigma * rng.normal());
            labels[row] = static_cast<std::uint32_t>(c);
        }
    }
    return LabeledDataset{
        Tensor({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(d)},
               std::move(features)),
        std::move(labels)};
}

Tensor gen_ood_mixture(const MixtureSpec& spec, std::size_t count, std::uint64_t seed) {
    if (count < 1)
        throw InvalidInput("count must be >= 1");
    if (spec.means.size() == 0)
        throw InvalidInput("mixture spec has no means; use make_mixture_spec");
    const std::size_t d = spec.feature_dim;
    // Anomaly means on negative axes, far enough out that every one is at
    // least 3x the base location separation from every training mean.
    const double offset = 3.0 * mixture_base_separation_distance(spec) +
                          spec.fine_separation + spec.base_separation;
    const std::size_t mean_count = std::min<std::size_t>(4, d);
    std::vector<std::vector<double>> ood_means(mean_count, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < mean_count; ++j) ood_means[j][j] = -offset;

    std::vector<float> features(count * d);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(substream_seed(seed, "mixture-ood", i));
        const auto& mean = ood_means[i % mean_count];
        for (std::size_t j = 0; j < d; ++j)
            features[i * d + j] =
                static_cast<float>(mean[j] + spec.class_sigma * rng.normal());
    }
    return Tensor({static_cast<std::uint32_t>(count), static_cast<std::uint32_t>(d)},
                  std::move(features));
}

}  // namespace oodkit
