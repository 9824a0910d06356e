#include "nofm/feature_stats.hpp"

#include <algorithm>
#include <cmath>

namespace nofm {

double NumericStats::quantile(double q) const {
  // Linear interpolation between order statistics: h = (n-1)q.
  const std::size_t n = sorted_values.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  if (n == 1) return sorted_values[0];
  const double h = (static_cast<double>(n) - 1.0) * q;
  const double fl = std::floor(h);
  std::size_t lo = static_cast<std::size_t>(std::max(0.0, fl));
  if (lo >= n - 1) return sorted_values[n - 1];
  const double frac = h - fl;
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::vector<double> NumericStats::grid_quantiles(
    const std::vector<double>& grid) const {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double q : grid) out.push_back(quantile(q));
  return out;
}

const std::vector<double>& FeatureStats::digest_grid() {
  static const std::vector<double> grid = {0.05, 0.1, 0.25, 0.5,
                                           0.75, 0.9, 0.95};
  return grid;
}

FeatureStats FeatureStats::fit(const Dataset& d) {
  if (d.n_rows == 0)
    throw DataError(DataErrorCode::schema_mismatch,
                    "cannot fit stats on an empty split");
  FeatureStats s;
  s.catalog_ = d.catalog;
  s.column_of_ = d.column_of;
  s.source_split_ = d.split;
  s.numeric_.resize(d.numeric.size());
  s.categorical_.resize(d.categorical.size());
  s.binary_.resize(d.binary.size());

  const double n = static_cast<double>(d.n_rows);
  for (std::size_t f = 0; f < d.catalog.size(); ++f) {
    const auto& ref = d.column_of[f];
    const std::string& name = d.catalog.at(f).name;
    switch (ref.kind) {
      case FeatureKind::numeric: {
        const NumericColumn& col = d.numeric[ref.slot];
        NumericStats st;
        for (std::size_t i = 0; i < d.n_rows; ++i)
          if (col.present.test(i)) st.sorted_values.push_back(col.values[i]);
        std::sort(st.sorted_values.begin(), st.sorted_values.end());
        const std::size_t m = st.sorted_values.size();
        st.missing_rate = 1.0 - static_cast<double>(m) / n;
        if (m == 0) {
          s.all_missing_.push_back(name);
        } else {
          st.usable = true;
          double sum = 0;
          for (double v : st.sorted_values) sum += v;
          st.mean = sum / static_cast<double>(m);
          if (m > 1) {
            double ss = 0;
            for (double v : st.sorted_values) {
              const double dlt = v - st.mean;
              ss += dlt * dlt;
            }
            st.stddev = std::sqrt(ss / static_cast<double>(m - 1));
          }
        }
        s.numeric_[ref.slot] = std::move(st);
        break;
      }
      case FeatureKind::categorical: {
        const CategoricalColumn& col = d.categorical[ref.slot];
        CategoricalStats st;
        std::vector<std::uint64_t> counts(col.dict.size(), 0);
        std::uint64_t present = 0;
        for (std::size_t i = 0; i < d.n_rows; ++i)
          if (col.present.test(i)) {
            ++present;
            ++counts[col.codes[i]];
          }
        st.missing_rate = 1.0 - static_cast<double>(present) / n;
        for (std::size_t c = 0; c < col.dict.size(); ++c)
          if (counts[c] > 0) st.category_counts.emplace_back(col.dict[c], counts[c]);
        if (present == 0) s.all_missing_.push_back(name);
        s.categorical_[ref.slot] = std::move(st);
        break;
      }
      case FeatureKind::binary: {
        const BinaryColumn& col = d.binary[ref.slot];
        BinaryStats st;
        const std::uint64_t present = col.present.count();
        st.missing_rate = 1.0 - static_cast<double>(present) / n;
        if (present > 0)
          st.positive_rate =
              static_cast<double>(BitVec::and_count(col.values, col.present)) /
              static_cast<double>(present);
        else
          s.all_missing_.push_back(name);
        s.binary_[ref.slot] = std::move(st);
        break;
      }
    }
  }
  return s;
}

namespace {

[[noreturn]] void no_stats(const std::string& name) {
  throw EvalError(EvalErrorCode::unknown_feature, "no stats for " + name);
}

}  // namespace

const NumericStats& FeatureStats::numeric(const std::string& feature) const {
  const int idx = catalog_.index_of(feature);
  if (idx < 0 || column_of_[idx].kind != FeatureKind::numeric ||
      !numeric_[column_of_[idx].slot])
    no_stats(feature);
  return *numeric_[column_of_[idx].slot];
}

const CategoricalStats& FeatureStats::categorical(
    const std::string& feature) const {
  const int idx = catalog_.index_of(feature);
  if (idx < 0 || column_of_[idx].kind != FeatureKind::categorical ||
      !categorical_[column_of_[idx].slot])
    no_stats(feature);
  return *categorical_[column_of_[idx].slot];
}

const BinaryStats& FeatureStats::binary(const std::string& feature) const {
  const int idx = catalog_.index_of(feature);
  if (idx < 0 || column_of_[idx].kind != FeatureKind::binary ||
      !binary_[column_of_[idx].slot])
    no_stats(feature);
  return *binary_[column_of_[idx].slot];
}

nlohmann::json FeatureStats::digest(const FeatureCatalog& catalog) const {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f = 0; f < catalog.size(); ++f) {
    const FeatureInfo& info = catalog.at(f);
    nlohmann::json e{{"name", info.name}, {"kind", to_string(info.kind)}};
    switch (info.kind) {
      case FeatureKind::numeric: {
        const NumericStats& st = numeric(info.name);
        e["missing_rate"] = st.missing_rate;
        if (st.usable) {
          e["mean"] = st.mean;
          e["stddev"] = st.stddev;
          nlohmann::json q = nlohmann::json::object();
          for (double g : digest_grid()) {
            char key[16];
            std::snprintf(key, sizeof key, "q%02d",
                          static_cast<int>(std::lround(g * 100)));
            q[key] = st.quantile(g);
          }
          e["quantiles"] = std::move(q);
        }
        break;
      }
      case FeatureKind::categorical: {
        const CategoricalStats& st = categorical(info.name);
        e["missing_rate"] = st.missing_rate;
        nlohmann::json counts = nlohmann::json::object();
        for (const auto& [label, count] : st.category_counts)
          counts[label] = count;
        e["category_counts"] = std::move(counts);
        break;
      }
      case FeatureKind::binary: {
        const BinaryStats& st = binary(info.name);
        e["missing_rate"] = st.missing_rate;
        e["positive_rate"] = st.positive_rate;
        break;
      }
    }
    features.push_back(std::move(e));
  }
  return nlohmann::json{{"features", std::move(features)}};
}

}  // namespace nofm
