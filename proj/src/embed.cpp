#include "ctxengine/embed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ctxengine/text.hpp"

namespace ctxengine {

namespace {

constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::uint64_t kWordSeed = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kTrigramSeed = 0xc2b2ae3d27d4eb4fULL;
constexpr std::uint64_t kPunctSeed = 0x165667b19e3779f9ULL;

// Whole-word matches weigh as much as a few shared trigrams.
constexpr double kWordWeight = 2.0;
constexpr double kTrigramWeight = 1.0;
constexpr double kPunctWeight = 0.25;

void add_feature(std::array<double, kEmbeddingDim>& acc, std::uint64_t h, double weight) {
    const auto bucket = static_cast<std::size_t>(h % kEmbeddingDim);
    const double sign = ((h >> 40) & 1ULL) != 0 ? -1.0 : 1.0;
    acc[bucket] += sign * weight;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    // final avalanche so that nearby trigrams land in unrelated buckets
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

Embedding embed(std::string_view text) {
    std::array<double, kEmbeddingDim> acc{};
    std::string padded;
    for_each_token(text, [&](std::string_view tok, bool word) {
        if (!word) {
            add_feature(acc, fnv1a64(tok, kPunctSeed), kPunctWeight);
            return;
        }
        padded.clear();
        padded.push_back('^');
        for (const char c : tok) padded.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
        padded.push_back('$');
        add_feature(acc, fnv1a64(std::string_view(padded).substr(1, padded.size() - 2), kWordSeed), kWordWeight);
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            add_feature(acc, fnv1a64(std::string_view(padded).substr(i, 3), kTrigramSeed), kTrigramWeight);
        }
    });
    double norm2 = 0.0;
    for (const double v : acc) norm2 += v * v;
    Embedding out{};
    if (norm2 == 0.0) return out;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) out[i] = static_cast<float>(acc[i] * inv);
    return out;
}

bool is_zero(const Embedding& v) noexcept {
    return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0F; });
}

}  // namespace ctxengine
