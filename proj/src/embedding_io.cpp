#include "etest/embedding_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace etest {

using nlohmann::json;

EmbeddingMap parse_embeddings(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, e.what());
  }
  require(doc.is_object(), ErrorCode::ParseError, "embedding file must be a JSON object");
  require(doc.value("format", std::string{}) == "EMB1", ErrorCode::ParseError,
          "missing or wrong \"format\" (expected EMB1)");
  require(doc.contains("dim") && doc["dim"].is_number_unsigned(), ErrorCode::ParseError,
          "missing \"dim\"");
  require(doc.contains("items") && doc["items"].is_array(), ErrorCode::ParseError,
          "missing \"items\" array");
  const auto dim = doc["dim"].get<std::size_t>();

  EmbeddingMap out;
  for (const auto& item : doc["items"]) {
    require(item.is_object() && item.contains("id") && item["id"].is_string() &&
                item.contains("v") && item["v"].is_array(),
            ErrorCode::ParseError, "each item needs a string \"id\" and an array \"v\"");
    const auto id = item["id"].get<std::string>();
    const auto& values = item["v"];
    require(values.size() == dim, ErrorCode::DimensionMismatch,
            "item '" + id + "' has " + std::to_string(values.size()) + " entries, expected " +
                std::to_string(dim));
    Vector v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      require(values[i].is_number(), ErrorCode::ParseError, "non-numeric entry in '" + id + "'");
      v[static_cast<Eigen::Index>(i)] = values[i].get<double>();
    }
    const double norm = v.norm();
    require(std::fabs(norm - 1.0) <= kEmbeddingReadTolerance, ErrorCode::NormOutOfTolerance,
            "item '" + id + "' has norm " + std::to_string(norm));
    // Vectors that already are unit norm to working precision keep their exact bits.
    if (std::fabs(norm - 1.0) > 1e-12) v /= norm;
    require(!out.contains(id), ErrorCode::DuplicateId, "duplicate id '" + id + "'");
    out.emplace(id, UnitEmbedding(std::move(v)));
  }
  return out;
}

std::string format_embeddings(const EmbeddingMap& items) {
  json doc;
  doc["format"] = "EMB1";
  const std::size_t dim = items.empty() ? 0 : items.begin()->second.dim();
  doc["dim"] = dim;
  doc["items"] = json::array();
  for (const auto& [id, e] : items) {
    require(e.dim() == dim, ErrorCode::DimensionMismatch, "embeddings have mixed dimensions");
    const auto& v = e.vector();
    doc["items"].push_back({{"id", id}, {"v", std::vector<double>(v.data(), v.data() + v.size())}});
  }
  // nlohmann prints doubles with the shortest round-tripping representation.
  return doc.dump(1) + "\n";
}

EmbeddingMap read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_embeddings(ss.str());
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMap& items) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot open " + path.string());
  out << format_embeddings(items);
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed for " + path.string());
}

const UnitEmbedding& lookup(const EmbeddingMap& items, const std::string& id) {
  const auto it = items.find(id);
  require(it != items.end(), ErrorCode::UnknownId, "no embedding with id '" + id + "'");
  return it->second;
}

}  // namespace etest
