#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "etest/types.hpp"

namespace etest {

using EmbeddingMap = std::map<std::string, UnitEmbedding>;

/// Relative norm deviation accepted on read; vectors inside the band are
/// renormalized, vectors outside it are rejected.
inline constexpr double kEmbeddingReadTolerance = 1e-3;

// EMB1: {"format":"EMB1","dim":d,"items":[{"id":..., "v":[...]}, ...]}
// Extra keys on items (e.g. "kind", "text") are treated as metadata and ignored.
EmbeddingMap parse_embeddings(const std::string& json_text);
std::string format_embeddings(const EmbeddingMap& items);

EmbeddingMap read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingMap& items);

const UnitEmbedding& lookup(const EmbeddingMap& items, const std::string& id);

}  // namespace etest
