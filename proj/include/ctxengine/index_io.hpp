#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ctxengine/corpus.hpp"

namespace ctxengine {

/// Binary index format: "CTXEIDX\0" magic, u32 format version, then
/// length-prefixed little-endian sections. Identical indexes serialize to
/// identical bytes.
inline constexpr std::uint32_t kIndexFormatVersion = 1;

[[nodiscard]] std::string serialize_index(const CorpusIndex& index);
/// Throws InputError on a malformed or version-mismatched buffer.
[[nodiscard]] CorpusIndex deserialize_index(std::string_view bytes);

/// Atomic write (temp file + rename). Throws IoError.
void save_index(const CorpusIndex& index, const std::filesystem::path& path);
/// Throws IoError when the file cannot be read, InputError when malformed.
[[nodiscard]] CorpusIndex load_index(const std::filesystem::path& path);

}  // namespace ctxengine
