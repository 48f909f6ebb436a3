#pragma once

#include <filesystem>

#include "oodkit/density.hpp"
#include "oodkit/detectors.hpp"
#include "oodkit/toymodel.hpp"

namespace oodkit {

// OODM model sidecar, little-endian:
//   "OODM" (4) | version u8 = 1 | kind u8 | payload.
// Lets fit and score run as separate CLI invocations.

enum class ModelKind : std::uint8_t {
    Classifier = 0,
    Autoencoder = 1,
    Lof = 2,
    IsolationForest = 3,
    KlTemplates = 4,
};

ModelKind peek_model_kind(const std::filesystem::path& path);

void save_classifier(const ToyClassifier& model, const std::filesystem::path& path);
ToyClassifier load_classifier(const std::filesystem::path& path);

void save_autoencoder(const ToyAutoencoder& model, const std::filesystem::path& path);
ToyAutoencoder load_autoencoder(const std::filesystem::path& path);

void save_lof(const LofModel& model, const std::filesystem::path& path);
LofModel load_lof(const std::filesystem::path& path);

void save_iforest(const IsolationForestModel& model, const std::filesystem::path& path);
IsolationForestModel load_iforest(const std::filesystem::path& path);

void save_kl_templates(const PosteriorTemplateSet& templates,
                       const std::filesystem::path& path);
PosteriorTemplateSet load_kl_templates(const std::filesystem::path& path);

}  // namespace oodkit
