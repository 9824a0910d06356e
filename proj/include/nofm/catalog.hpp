#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace nofm {

enum class FeatureKind { numeric, categorical, binary };

const char* to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);

struct FeatureInfo {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::string unit;
  std::string description;
};

// Names are unique and kinds fixed for the life of a run.
class FeatureCatalog {
 public:
  void add(FeatureInfo info);

  const FeatureInfo* find(const std::string& name) const;
  // Index of a feature, or -1.
  int index_of(const std::string& name) const;

  std::size_t size() const { return features_.size(); }
  const FeatureInfo& at(std::size_t i) const { return features_[i]; }
  const std::vector<FeatureInfo>& features() const { return features_; }

  std::vector<std::string> names_of_kind(FeatureKind k) const;

  nlohmann::json to_json() const;
  static FeatureCatalog from_json(const nlohmann::json& j);

 private:
  std::vector<FeatureInfo> features_;
  std::map<std::string, std::size_t> index_;
};

// Per-run schema: feature catalog plus the label / group-id column names and
// the missing-value sentinels used when reading CSV files.
struct TableSchema {
  FeatureCatalog catalog;
  std::string label_column = "label";
  std::string group_column = "group_id";
  std::vector<std::string> missing_values = {"", "NA"};

  nlohmann::json to_json() const;
  static TableSchema from_json(const nlohmann::json& j);
  static TableSchema load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace nofm
