#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace ctxengine {

inline constexpr std::size_t kEmbeddingDim = 256;

using Embedding = std::array<float, kEmbeddingDim>;

/// Feature-hashed embedding: every lower-cased word contributes its whole
/// form plus the character trigrams of "^word$"; punctuation contributes one
/// feature per character. Features are placed by a 64-bit FNV-1a hash with a
/// hash-derived sign, then the vector is L2-normalised. Text without any
/// token maps to the zero vector, the only non-unit output.
[[nodiscard]] Embedding embed(std::string_view text);

[[nodiscard]] bool is_zero(const Embedding& v) noexcept;

[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

}  // namespace ctxengine
