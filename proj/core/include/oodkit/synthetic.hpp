#pragma once

#include "oodkit/tensor.hpp"

namespace oodkit {

// Seeded synthetic data sources. All generators are pure functions of
// (parameters, seed) with a fixed PRNG, so outputs are identical across
// runs and platforms.

/// Zero-mean normal noise with standard deviation `sigma`, clipped to [-1, 1].
Tensor gen_gaussian_ood(std::size_t count, std::vector<std::uint32_t> shape,
                        std::uint64_t seed, double sigma = 0.5);

/// Each entry is +1 or -1 with equal probability.
Tensor gen_rademacher_ood(std::size_t count, std::vector<std::uint32_t> shape,
                          std::uint64_t seed);

/// Rademacher noise blurred with a truncated Gaussian kernel (radius
/// 3 * blur_sigma, reflect padding) and re-thresholded at 0 to {-1, +1}:
/// connected same-sign regions.
Tensor gen_blobs_ood(std::size_t count, std::vector<std::uint32_t> shape,
                     std::uint64_t seed, double blur_sigma = 2.0);

/// Class-structured spherical Gaussian mixture. Fine-grained pairs share a
/// base location with their means `fine_separation` apart, modelling class
/// pairs a classifier cannot fully separate.
struct MixtureSpec {
    std::uint32_t class_count = 2;
    std::uint32_t feature_dim = 2;
    double class_sigma = 1.0;
    std::uint32_t fine_grained_pairs = 0;
    double fine_separation = 1.0;   // delta between paired means
    double base_separation = 10.0;  // scale of the base location simplex
    Tensor means;                   // K x D, filled by make_mixture_spec
};

MixtureSpec make_mixture_spec(std::uint32_t class_count, std::uint32_t feature_dim,
                              double class_sigma, std::uint32_t fine_grained_pairs,
                              double fine_separation, double base_separation,
                              std::uint64_t seed);

struct LabeledDataset {
    Tensor features;                   // N x D
    std::vector<std::uint32_t> labels; // class ids
};

LabeledDataset gen_mixture_dataset(const MixtureSpec& spec, std::size_t per_class,
                                   std::uint64_t seed);

/// Samples from anomaly means disjoint from every training mean (minimum
/// distance at least 3x the base inter-location separation).
Tensor gen_ood_mixture(const MixtureSpec& spec, std::size_t count, std::uint64_t seed);

/// Minimum pairwise distance between base locations of the spec's means.
double mixture_base_separation_distance(const MixtureSpec& spec);

}  // namespace oodkit
