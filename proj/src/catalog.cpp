#include "nofm/catalog.hpp"

#include <fstream>

#include "nofm/errors.hpp"

namespace nofm {

const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::numeric: return "numeric";
    case FeatureKind::categorical: return "categorical";
    case FeatureKind::binary: return "binary";
  }
  return "?";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "numeric") return FeatureKind::numeric;
  if (s == "categorical") return FeatureKind::categorical;
  if (s == "binary") return FeatureKind::binary;
  throw ConfigError("unknown feature kind: " + s);
}

void FeatureCatalog::add(FeatureInfo info) {
  if (index_.count(info.name))
    throw ConfigError("duplicate feature name: " + info.name);
  index_[info.name] = features_.size();
  features_.push_back(std::move(info));
}

const FeatureInfo* FeatureCatalog::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &features_[it->second];
}

int FeatureCatalog::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : static_cast<int>(it->second);
}

std::vector<std::string> FeatureCatalog::names_of_kind(FeatureKind k) const {
  std::vector<std::string> out;
  for (const auto& f : features_)
    if (f.kind == k) out.push_back(f.name);
  return out;
}

nlohmann::json FeatureCatalog::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json j{{"name", f.name}, {"kind", to_string(f.kind)}};
    if (!f.unit.empty()) j["unit"] = f.unit;
    if (!f.description.empty()) j["description"] = f.description;
    arr.push_back(std::move(j));
  }
  return arr;
}

FeatureCatalog FeatureCatalog::from_json(const nlohmann::json& j) {
  FeatureCatalog cat;
  for (const auto& e : j) {
    FeatureInfo info;
    info.name = e.at("name").get<std::string>();
    info.kind = feature_kind_from_string(e.at("kind").get<std::string>());
    if (e.contains("unit")) info.unit = e["unit"].get<std::string>();
    if (e.contains("description"))
      info.description = e["description"].get<std::string>();
    cat.add(std::move(info));
  }
  return cat;
}

nlohmann::json TableSchema::to_json() const {
  return nlohmann::json{{"features", catalog.to_json()},
                        {"label_column", label_column},
                        {"group_column", group_column},
                        {"missing_values", missing_values}};
}

TableSchema TableSchema::from_json(const nlohmann::json& j) {
  TableSchema s;
  s.catalog = FeatureCatalog::from_json(j.at("features"));
  s.label_column = j.value("label_column", std::string("label"));
  s.group_column = j.value("group_column", std::string("group_id"));
  if (j.contains("missing_values"))
    s.missing_values = j["missing_values"].get<std::vector<std::string>>();
  return s;
}

TableSchema TableSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorCode::file_unreadable, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad schema file " + path + ": " + e.what());
  }
  return from_json(j);
}

void TableSchema::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_json().dump(2) << "\n";
}

}  // namespace nofm
