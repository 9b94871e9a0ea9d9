#include "ownet/schema.hpp"

#include <fmt/format.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace ownet {

namespace {

// SAIC plus the 31 provincial-level divisions.
const std::vector<std::string> kRegions = {
    "SAIC",      "Beijing",   "Tianjin",  "Hebei",    "Shanxi",         "Inner Mongolia",
    "Liaoning",  "Jilin",     "Heilongjiang", "Shanghai", "Jiangsu",    "Zhejiang",
    "Anhui",     "Fujian",    "Jiangxi",  "Shandong", "Henan",          "Hubei",
    "Hunan",     "Guangdong", "Guangxi",  "Hainan",   "Chongqing",      "Sichuan",
    "Guizhou",   "Yunnan",    "Tibet",    "Shaanxi",  "Gansu",          "Qinghai",
    "Ningxia",   "Xinjiang"};

}  // namespace

FeatureSchema::FeatureSchema(std::array<std::vector<std::string>, kCategoricalAttributeCount> vocabularies)
    : vocabularies_(std::move(vocabularies)) {
  std::size_t offset = 1;
  for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
    if (vocabularies_[a].empty()) {
      throw Error(fmt::format("schema: vocabulary for '{}' is empty", kCategoricalAttributes[a]));
    }
    offsets_[a] = offset;
    for (std::size_t k = 0; k < vocabularies_[a].size(); ++k) {
      const auto& v = vocabularies_[a][k];
      if (v.empty()) throw Error(fmt::format("schema: empty value in '{}'", kCategoricalAttributes[a]));
      if (!lookup_[a].emplace(v, k).second) {
        throw Error(fmt::format("schema: duplicate value '{}' in '{}'", v, kCategoricalAttributes[a]));
      }
    }
    offset += vocabularies_[a].size();
  }
  dimension_ = offset;
}

FeatureSchema FeatureSchema::standard() {
  std::vector<std::string> types;
  for (int i = 1; i <= 158; ++i) types.push_back(fmt::format("type_{:03}", i));
  std::vector<std::string> sizes = {"large", "medium", "small", "micro", "unidentified"};
  std::vector<std::string> industries;
  for (char c = 'A'; c <= 'S'; ++c) industries.emplace_back(1, c);
  return FeatureSchema({std::move(types), std::move(sizes), kRegions, std::move(industries)});
}

FeatureSchema FeatureSchema::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("schema: invalid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw Error("schema: top level must be an object");
  std::array<std::vector<std::string>, kCategoricalAttributeCount> vocab;
  for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
    const std::string key(kCategoricalAttributes[a]);
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_array()) {
      throw Error(fmt::format("schema: missing array '{}'", key));
    }
    for (const auto& v : *it) {
      if (!v.is_string()) throw Error(fmt::format("schema: non-string value in '{}'", key));
      vocab[a].push_back(v.get<std::string>());
    }
  }
  return FeatureSchema(std::move(vocab));
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string FeatureSchema::to_json() const {
  nlohmann::ordered_json doc;
  for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
    doc[std::string(kCategoricalAttributes[a])] = vocabularies_[a];
  }
  return doc.dump(2) + "\n";
}

std::optional<std::size_t> FeatureSchema::index_of(std::size_t attribute, std::string_view value) const {
  const auto& map = lookup_[attribute];
  auto it = map.find(std::string(value));
  if (it == map.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> FeatureSchema::individual_feature_names() const {
  std::vector<std::string> names{std::string(kCapitalFeature)};
  for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
    for (const auto& v : vocabularies_[a]) names.push_back(fmt::format("{}={}", kCategoricalAttributes[a], v));
  }
  return names;
}

}  // namespace ownet
