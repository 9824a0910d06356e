#include "nofm/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace nofm {

const char* to_string(SplitTag t) {
  switch (t) {
    case SplitTag::full: return "full";
    case SplitTag::construction: return "construction";
    case SplitTag::validation: return "validation";
    case SplitTag::test: return "test";
  }
  return "?";
}

int CategoricalColumn::code_of(const std::string& label) const {
  auto it = std::lower_bound(dict.begin(), dict.end(), label);
  if (it == dict.end() || *it != label) return -1;
  return static_cast<int>(it - dict.begin());
}

const NumericColumn& Dataset::numeric_col(const std::string& name) const {
  const int idx = catalog.index_of(name);
  if (idx < 0 || column_of[idx].kind != FeatureKind::numeric)
    throw EvalError(EvalErrorCode::unknown_feature, "no numeric column " + name);
  return numeric[column_of[idx].slot];
}

const CategoricalColumn& Dataset::categorical_col(const std::string& name) const {
  const int idx = catalog.index_of(name);
  if (idx < 0 || column_of[idx].kind != FeatureKind::categorical)
    throw EvalError(EvalErrorCode::unknown_feature,
                    "no categorical column " + name);
  return categorical[column_of[idx].slot];
}

const BinaryColumn& Dataset::binary_col(const std::string& name) const {
  const int idx = catalog.index_of(name);
  if (idx < 0 || column_of[idx].kind != FeatureKind::binary)
    throw EvalError(EvalErrorCode::unknown_feature, "no binary column " + name);
  return binary[column_of[idx].slot];
}

namespace {

// Minimal CSV: comma separated, double quotes for fields containing commas,
// "" escapes a quote. No multi-line fields.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Dataset load_table(const std::string& path, const TableSchema& schema) {
  std::ifstream in(path);
  if (!in)
    throw DataError(DataErrorCode::file_unreadable, "cannot open " + path);

  std::string header;
  if (!std::getline(in, header))
    throw DataError(DataErrorCode::file_unreadable, path + " is empty");
  const std::vector<std::string> cols = split_csv_line(header);

  std::map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < cols.size(); ++i) col_index[cols[i]] = i;

  auto require_col = [&](const std::string& name) -> std::size_t {
    auto it = col_index.find(name);
    if (it == col_index.end())
      throw DataError(DataErrorCode::schema_mismatch,
                      "column missing from header: " + name);
    return it->second;
  };

  const std::size_t label_col = require_col(schema.label_column);
  const std::size_t group_col = require_col(schema.group_column);
  std::vector<std::size_t> feature_col(schema.catalog.size());
  for (std::size_t f = 0; f < schema.catalog.size(); ++f)
    feature_col[f] = require_col(schema.catalog.at(f).name);

  const std::set<std::string> sentinels(schema.missing_values.begin(),
                                        schema.missing_values.end());

  // First pass into row-major string cells; tables are desk-scale.
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != cols.size())
      throw DataError(DataErrorCode::schema_mismatch,
                      path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(cols.size()) + " cells, got " +
                          std::to_string(cells.size()));
    rows.push_back(std::move(cells));
  }

  const std::size_t n = rows.size();
  Dataset d;
  d.catalog = schema.catalog;
  d.n_rows = n;
  d.labels = BitVec(n);
  d.group_index.resize(n);

  std::map<std::string, std::uint32_t> group_ids;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& label = rows[i][label_col];
    if (label == "0") {
      // negative
    } else if (label == "1") {
      d.labels.set(i);
    } else {
      throw DataError(DataErrorCode::non_binary_label,
                      "label must be 0 or 1, got \"" + label + "\"");
    }
    const std::string& gid = rows[i][group_col];
    auto [it, inserted] =
        group_ids.emplace(gid, static_cast<std::uint32_t>(d.group_names.size()));
    if (inserted) d.group_names.push_back(gid);
    d.group_index[i] = it->second;
  }

  for (std::size_t f = 0; f < schema.catalog.size(); ++f) {
    const FeatureInfo& info = schema.catalog.at(f);
    const std::size_t c = feature_col[f];
    switch (info.kind) {
      case FeatureKind::numeric: {
        NumericColumn col;
        col.values.assign(n, std::numeric_limits<double>::quiet_NaN());
        col.present = BitVec(n);
        for (std::size_t i = 0; i < n; ++i) {
          const std::string& cell = rows[i][c];
          if (sentinels.count(cell)) continue;
          double v;
          if (!parse_double(cell, v))
            throw DataError(DataErrorCode::bad_cell,
                            info.name + ": not a number: \"" + cell + "\"");
          col.values[i] = v;
          col.present.set(i);
        }
        d.column_of.push_back({FeatureKind::numeric, d.numeric.size()});
        d.numeric.push_back(std::move(col));
        break;
      }
      case FeatureKind::categorical: {
        CategoricalColumn col;
        col.present = BitVec(n);
        std::set<std::string> labels_seen;
        for (std::size_t i = 0; i < n; ++i)
          if (!sentinels.count(rows[i][c])) labels_seen.insert(rows[i][c]);
        col.dict.assign(labels_seen.begin(), labels_seen.end());
        col.codes.assign(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
          const std::string& cell = rows[i][c];
          if (sentinels.count(cell)) continue;
          col.codes[i] = col.code_of(cell);
          col.present.set(i);
        }
        d.column_of.push_back({FeatureKind::categorical, d.categorical.size()});
        d.categorical.push_back(std::move(col));
        break;
      }
      case FeatureKind::binary: {
        BinaryColumn col;
        col.values = BitVec(n);
        col.present = BitVec(n);
        for (std::size_t i = 0; i < n; ++i) {
          const std::string& cell = rows[i][c];
          if (sentinels.count(cell)) continue;
          if (cell == "1" || cell == "true") {
            col.values.set(i);
          } else if (cell != "0" && cell != "false") {
            throw DataError(DataErrorCode::bad_cell,
                            info.name + ": not binary: \"" + cell + "\"");
          }
          col.present.set(i);
        }
        d.column_of.push_back({FeatureKind::binary, d.binary.size()});
        d.binary.push_back(std::move(col));
        break;
      }
    }
  }
  return d;
}

Dataset slice(const Dataset& d, std::span<const std::uint32_t> rows,
              SplitTag tag) {
  const std::size_t n = rows.size();
  Dataset out;
  out.catalog = d.catalog;
  out.column_of = d.column_of;
  out.n_rows = n;
  out.split = tag;
  out.labels = BitVec(n);
  out.group_index.resize(n);
  out.group_names = d.group_names;
  for (std::size_t i = 0; i < n; ++i) {
    if (d.labels.test(rows[i])) out.labels.set(i);
    out.group_index[i] = d.group_index[rows[i]];
  }
  for (const NumericColumn& col : d.numeric) {
    NumericColumn c;
    c.values.resize(n);
    c.present = BitVec(n);
    for (std::size_t i = 0; i < n; ++i) {
      c.values[i] = col.values[rows[i]];
      if (col.present.test(rows[i])) c.present.set(i);
    }
    out.numeric.push_back(std::move(c));
  }
  for (const CategoricalColumn& col : d.categorical) {
    CategoricalColumn c;
    c.dict = col.dict;
    c.codes.resize(n);
    c.present = BitVec(n);
    for (std::size_t i = 0; i < n; ++i) {
      c.codes[i] = col.codes[rows[i]];
      if (col.present.test(rows[i])) c.present.set(i);
    }
    out.categorical.push_back(std::move(c));
  }
  for (const BinaryColumn& col : d.binary) {
    BinaryColumn c;
    c.values = BitVec(n);
    c.present = BitVec(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (col.values.test(rows[i])) c.values.set(i);
      if (col.present.test(rows[i])) c.present.set(i);
    }
    out.binary.push_back(std::move(c));
  }
  return out;
}

DerivedFrame derive_temporal(const SeriesTable& series,
                             const TemporalSpec& spec) {
  const std::size_t n = series.group.size();
  if (series.time.size() != n)
    throw DataError(DataErrorCode::schema_mismatch,
                    "series time/group length mismatch");
  for (const auto& [name, values] : series.vars)
    if (values.size() != n)
      throw DataError(DataErrorCode::schema_mismatch,
                      "series column length mismatch: " + name);

  DerivedFrame out;
  std::map<std::string, std::size_t> group_row;
  std::map<std::string, double> last_time;

  struct Acc {
    int count = 0;
    double first = 0, last = 0, min = 0, max = 0;
  };
  // per group, per var
  std::vector<std::map<std::string, Acc>> acc;

  for (std::size_t i = 0; i < n; ++i) {
    const std::string& gid = series.group[i];
    auto [it, inserted] = group_row.emplace(gid, out.group_ids.size());
    if (inserted) {
      out.group_ids.push_back(gid);
      acc.emplace_back();
      last_time[gid] = -std::numeric_limits<double>::infinity();
    }
    if (series.time[i] < last_time[gid])
      throw DataError(DataErrorCode::non_monotone_timestamps,
                      "timestamps decrease within group " + gid);
    last_time[gid] = series.time[i];

    double cutoff = spec.index_time;
    auto ov = spec.per_group_index.find(gid);
    if (ov != spec.per_group_index.end()) cutoff = ov->second;
    if (!(series.time[i] < cutoff)) continue;  // strictly before the index

    for (const auto& [name, values] : series.vars) {
      const double v = values[i];
      if (std::isnan(v)) continue;
      Acc& a = acc[it->second][name];
      if (a.count == 0) {
        a.first = a.last = a.min = a.max = v;
      } else {
        a.last = v;
        a.min = std::min(a.min, v);
        a.max = std::max(a.max, v);
      }
      ++a.count;
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n_groups = out.group_ids.size();
  for (const auto& [name, _] : series.vars) {
    for (const char* suffix :
         {"__last", "__first", "__min", "__max", "__delta", "__pct_change",
          "__range"})
      out.columns[name + suffix].assign(n_groups, nan);
    for (std::size_t g = 0; g < n_groups; ++g) {
      auto it = acc[g].find(name);
      if (it == acc[g].end() || it->second.count == 0) continue;
      const Acc& a = it->second;
      out.columns[name + "__last"][g] = a.last;
      out.columns[name + "__first"][g] = a.first;
      out.columns[name + "__min"][g] = a.min;
      out.columns[name + "__max"][g] = a.max;
      if (a.count < 2) continue;  // trend summaries need two measurements
      out.columns[name + "__delta"][g] = a.last - a.first;
      if (a.first != 0.0)
        out.columns[name + "__pct_change"][g] = (a.last - a.first) / a.first;
      out.columns[name + "__range"][g] = a.max - a.min;
    }
  }
  return out;
}

}  // namespace nofm
