#pragma once

#include <array>
#include <cstddef>
#include <string>

namespace repairgraph::memory {

inline constexpr std::size_t kDimension = 256;

using EmbeddingVector = std::array<double, kDimension>;

// Deterministic signed feature hashing over lowercase words and character
// trigrams. Unit L2 norm, except the all-zero vector for token-free text.
EmbeddingVector embed(const std::string& text);

// Zero-safe: either argument all-zero yields 0.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

double l2_norm(const EmbeddingVector& v);

}  // namespace repairgraph::memory
