#pragma once

#include <filesystem>

#include "oodkit/tensor.hpp"

namespace oodkit {

// OODT container, little-endian:
//   "OODT" (4 bytes) | version u8 = 1 | dtype u8 (0 = f32, 1 = u8) |
//   rank u8 | reserved u8 = 0 | rank x u32 dims | row-major payload.

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

LabelVector read_labels(const std::filesystem::path& path);
void write_labels(const LabelVector& v, const std::filesystem::path& path);

// CSV, rank-1 and rank-2 only: one row per line, ',' separator, '.' decimal.
Tensor read_tensor_csv(const std::filesystem::path& path);
void write_tensor_csv(const Tensor& t, const std::filesystem::path& path);

}  // namespace oodkit
