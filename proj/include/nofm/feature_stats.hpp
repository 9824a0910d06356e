#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nofm/dataset.hpp"

namespace nofm {

// Frozen per-feature statistics, fit on the construction split only.
// Quantiles interpolate linearly between order statistics; the standard
// deviation uses the sample (n-1) convention.

struct NumericStats {
  std::vector<double> sorted_values;  // non-missing cells, ascending
  double mean = 0;
  double stddev = 0;
  double missing_rate = 1.0;
  bool usable = false;  // false when every cell is missing

  double quantile(double q) const;
  std::vector<double> grid_quantiles(const std::vector<double>& grid) const;
};

struct CategoricalStats {
  std::vector<std::pair<std::string, std::uint64_t>> category_counts;
  double missing_rate = 1.0;
};

struct BinaryStats {
  double positive_rate = 0;
  double missing_rate = 1.0;
};

class FeatureStats {
 public:
  static FeatureStats fit(const Dataset& construction_split);

  const NumericStats& numeric(const std::string& feature) const;
  const CategoricalStats& categorical(const std::string& feature) const;
  const BinaryStats& binary(const std::string& feature) const;

  // Features whose cells were all missing on the construction split; these
  // are unusable for quantile and z-score rules.
  const std::vector<std::string>& all_missing() const { return all_missing_; }

  SplitTag source_split() const { return source_split_; }

  // Aggregate digest for the tool boundary: quantile grid, mean/std,
  // missingness and category frequencies. Never row-level values.
  nlohmann::json digest(const FeatureCatalog& catalog) const;

  static const std::vector<double>& digest_grid();

 private:
  std::vector<std::optional<NumericStats>> numeric_;
  std::vector<std::optional<CategoricalStats>> categorical_;
  std::vector<std::optional<BinaryStats>> binary_;
  std::vector<Dataset::ColRef> column_of_;
  FeatureCatalog catalog_;
  std::vector<std::string> all_missing_;
  SplitTag source_split_ = SplitTag::full;
};

}  // namespace nofm
