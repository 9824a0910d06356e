#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nofm/bitvec.hpp"
#include "nofm/catalog.hpp"
#include "nofm/errors.hpp"

namespace nofm {

enum class SplitTag { full, construction, validation, test };
const char* to_string(SplitTag t);

struct NumericColumn {
  std::vector<double> values;  // NaN where missing
  BitVec present;
};

struct CategoricalColumn {
  std::vector<std::int32_t> codes;  // -1 where missing
  std::vector<std::string> dict;    // code -> label, sorted
  BitVec present;

  int code_of(const std::string& label) const;
};

struct BinaryColumn {
  BitVec values;
  BitVec present;
};

// Column-major table with per-cell missingness, binary labels and a group id
// per row. Immutable after load; share freely across threads.
struct Dataset {
  FeatureCatalog catalog;
  std::vector<NumericColumn> numeric;
  std::vector<CategoricalColumn> categorical;
  std::vector<BinaryColumn> binary;

  struct ColRef {
    FeatureKind kind;
    std::size_t slot;
  };
  std::vector<ColRef> column_of;  // parallel to catalog

  BitVec labels;
  std::vector<std::uint32_t> group_index;  // per row
  std::vector<std::string> group_names;    // group index -> id
  std::size_t n_rows = 0;
  SplitTag split = SplitTag::full;

  const NumericColumn& numeric_col(const std::string& name) const;
  const CategoricalColumn& categorical_col(const std::string& name) const;
  const BinaryColumn& binary_col(const std::string& name) const;

  std::uint64_t positives() const { return labels.count(); }
};

Dataset load_table(const std::string& path, const TableSchema& schema);

// Row subset as a standalone dataset tagged with its split.
Dataset slice(const Dataset& d, std::span<const std::uint32_t> rows,
              SplitTag tag);

// -- temporal derivation ------------------------------------------------------

// Long-format per-group measurement series. Timestamps must be
// non-decreasing within each group.
struct SeriesTable {
  std::vector<std::string> group;
  std::vector<double> time;
  std::map<std::string, std::vector<double>> vars;  // NaN where missing
};

struct TemporalSpec {
  // Measurements at time >= index_time are ignored (strictly-before window).
  double index_time = std::numeric_limits<double>::infinity();
  std::map<std::string, double> per_group_index;  // overrides, by group id
};

// One output row per group (order of first appearance). For every input
// variable emits <var>__last, __first, __min, __max, __delta, __pct_change
// and __range columns; summaries whose inputs are absent are missing.
struct DerivedFrame {
  std::vector<std::string> group_ids;
  std::map<std::string, std::vector<double>> columns;  // NaN where missing
};

DerivedFrame derive_temporal(const SeriesTable& series, const TemporalSpec& spec);

}  // namespace nofm
