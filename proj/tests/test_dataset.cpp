#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "nofm/feature_stats.hpp"
#include "nofm/splits.hpp"

using namespace nofm;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  const std::string path =
      (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << body;
  return path;
}

TableSchema small_schema() {
  TableSchema s;
  s.label_column = "y";
  s.group_column = "g";
  s.catalog.add({"a", FeatureKind::numeric, "", ""});
  s.catalog.add({"b", FeatureKind::binary, "", ""});
  s.catalog.add({"c", FeatureKind::categorical, "", ""});
  return s;
}

}  // namespace

TEST_CASE("load_table masks empty cells and keeps row order") {
  const std::string path = write_temp("nofm_t1.csv",
                                      "g,y,a,b,c\n"
                                      "g1,0,1.5,1,red\n"
                                      "g2,1,,0,blue\n"
                                      "g3,0,2.5,1,red\n"
                                      "g4,1,4.0,0,\n");
  const Dataset d = load_table(path, small_schema());
  CHECK(d.n_rows == 4);
  CHECK(d.positives() == 2);
  const NumericColumn& a = d.numeric_col("a");
  CHECK(a.present.test(0));
  CHECK_FALSE(a.present.test(1));  // the empty cell
  CHECK(std::isnan(a.values[1]));
  CHECK(a.values[3] == 4.0);
  const CategoricalColumn& c = d.categorical_col("c");
  CHECK_FALSE(c.present.test(3));
  CHECK(c.dict == std::vector<std::string>{"blue", "red"});
}

TEST_CASE("load_table rejects non-binary labels") {
  const std::string path = write_temp("nofm_t2.csv",
                                      "g,y,a,b,c\n"
                                      "g1,2,1.5,1,red\n");
  try {
    load_table(path, small_schema());
    FAIL("expected NonBinaryLabel");
  } catch (const DataError& e) {
    CHECK(e.code == DataErrorCode::non_binary_label);
  }
}

TEST_CASE("load_table surfaces schema mismatches and unreadable files") {
  const std::string path = write_temp("nofm_t3.csv", "g,y,a,b\ng1,0,1,1\n");
  try {
    load_table(path, small_schema());
    FAIL("expected SchemaMismatch");
  } catch (const DataError& e) {
    CHECK(e.code == DataErrorCode::schema_mismatch);
  }
  try {
    load_table("/nonexistent/nofm.csv", small_schema());
    FAIL("expected FileUnreadable");
  } catch (const DataError& e) {
    CHECK(e.code == DataErrorCode::file_unreadable);
  }
}

TEST_CASE("synthetic round trip: column sums match generator totals") {
  std::mt19937_64 rng(5);
  std::ostringstream body;
  body << "g,y,a,b,c\n";
  double sum_a = 0;
  std::uint64_t sum_b = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double a = std::round(1000.0 * std::normal_distribution<double>(
                                            0, 3)(rng)) /
                     1000.0;
    const int b = static_cast<int>(rng() % 2);
    sum_a += a;
    sum_b += b;
    body << "g" << i << "," << (i % 5 == 0 ? 1 : 0) << "," << a << "," << b
         << ",red\n";
  }
  const std::string path = write_temp("nofm_t4.csv", body.str());
  const Dataset d = load_table(path, small_schema());
  CHECK(d.n_rows == static_cast<std::size_t>(n));
  double got_a = 0;
  const NumericColumn& a = d.numeric_col("a");
  for (int i = 0; i < n; ++i) got_a += a.values[i];
  CHECK(got_a == doctest::Approx(sum_a).epsilon(1e-12));
  CHECK(BitVec::and_count(d.binary_col("b").values,
                          d.binary_col("b").present) == sum_b);
}

TEST_CASE("derive_temporal: three-point series") {
  SeriesTable series;
  series.group = {"p1", "p1", "p1"};
  series.time = {0, 1, 2};
  series.vars["x"] = {10, 12, 9};
  const DerivedFrame frame = derive_temporal(series, {});
  CHECK(frame.group_ids == std::vector<std::string>{"p1"});
  CHECK(frame.columns.at("x__last")[0] == 9.0);
  CHECK(frame.columns.at("x__first")[0] == 10.0);
  CHECK(frame.columns.at("x__min")[0] == 9.0);
  CHECK(frame.columns.at("x__max")[0] == 12.0);
  CHECK(frame.columns.at("x__delta")[0] == -1.0);
  CHECK(frame.columns.at("x__pct_change")[0] == doctest::Approx(-0.10));
  CHECK(frame.columns.at("x__range")[0] == 3.0);
}

TEST_CASE("derive_temporal: single measurement leaves trends missing") {
  SeriesTable series;
  series.group = {"p1"};
  series.time = {0};
  series.vars["x"] = {7.0};
  const DerivedFrame frame = derive_temporal(series, {});
  CHECK(frame.columns.at("x__last")[0] == 7.0);
  CHECK(frame.columns.at("x__first")[0] == 7.0);
  CHECK(frame.columns.at("x__min")[0] == 7.0);
  CHECK(frame.columns.at("x__max")[0] == 7.0);
  CHECK(std::isnan(frame.columns.at("x__delta")[0]));
  CHECK(std::isnan(frame.columns.at("x__pct_change")[0]));
  CHECK(std::isnan(frame.columns.at("x__range")[0]));
}

TEST_CASE("derive_temporal rejects non-monotone timestamps") {
  SeriesTable series;
  series.group = {"p1", "p1"};
  series.time = {3, 1};
  series.vars["x"] = {1.0, 2.0};
  try {
    derive_temporal(series, {});
    FAIL("expected NonMonotoneTimestamps");
  } catch (const DataError& e) {
    CHECK(e.code == DataErrorCode::non_monotone_timestamps);
  }
}

TEST_CASE("a >=15% decline from the window best fires the trend rule") {
  // five annual fev1 measurements; last is 20% below the best
  SeriesTable series;
  series.group.assign(5, "p1");
  series.time = {0, 1, 2, 3, 4};
  series.vars["fev1"] = {78, 85, 82, 74, 68};
  const DerivedFrame frame = derive_temporal(series, {});
  const double best = frame.columns.at("fev1__max")[0];
  const double last = frame.columns.at("fev1__last")[0];
  CHECK(best == 85.0);
  // decline-from-best as evaluated by the percent-change predicate over
  // (max, last): -(last-best)/best >= 0.15
  CHECK(-(last - best) / best >= 0.15);
}

TEST_CASE("temporal derivation ignores measurements at or after the index") {
  SeriesTable series;
  series.group = {"p1", "p1", "p1", "p1"};
  series.time = {0, 1, 2, 3};
  series.vars["x"] = {10, 12, 9, 1000};
  TemporalSpec spec;
  spec.index_time = 3;  // the 1000 at t=3 must not leak
  const DerivedFrame a = derive_temporal(series, spec);
  series.vars["x"][3] = -999;  // shifting post-index values changes nothing
  const DerivedFrame b = derive_temporal(series, spec);
  CHECK(a.columns.at("x__max")[0] == 12.0);
  for (const auto& [name, col] : a.columns) {
    const auto& other = b.columns.at(name);
    const bool both_nan = std::isnan(col[0]) && std::isnan(other[0]);
    CHECK((both_nan || col[0] == other[0]));
  }
}

TEST_CASE("feature stats match the hand-computed oracle") {
  const std::string path = write_temp("nofm_t5.csv",
                                      "g,y,a,b,c\n"
                                      "g1,0,1,0,red\n"
                                      "g2,1,2,0,red\n"
                                      "g3,0,3,1,blue\n"
                                      "g4,1,4,1,red\n");
  const Dataset d = load_table(path, small_schema());
  const FeatureStats stats = FeatureStats::fit(d);
  const NumericStats& a = stats.numeric("a");
  CHECK(a.quantile(0.5) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(a.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(a.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(a.missing_rate == 0.0);
  CHECK(stats.binary("b").positive_rate == 0.5);
  const CategoricalStats& c = stats.categorical("c");
  REQUIRE(c.category_counts.size() == 2);
  CHECK(c.category_counts[0].first == "blue");
  CHECK(c.category_counts[0].second == 1);
}

TEST_CASE("stats freeze on the construction split only") {
  const std::string path = write_temp("nofm_t6.csv",
                                      "g,y,a,b,c\n"
                                      "g1,0,1,0,red\n"
                                      "g2,1,2,0,red\n"
                                      "g3,0,3,1,blue\n"
                                      "g4,1,4,1,red\n"
                                      "g5,0,1000,1,red\n");
  const Dataset d = load_table(path, small_schema());
  const std::vector<std::uint32_t> con_rows = {0, 1, 2, 3};
  const Dataset d_con = slice(d, con_rows, SplitTag::construction);
  const FeatureStats stats = FeatureStats::fit(d_con);
  // the wild value in row 4 is invisible to the construction split
  CHECK(stats.numeric("a").quantile(1.0) == 4.0);
  CHECK(stats.source_split() == SplitTag::construction);
}

TEST_CASE("all-missing features are recorded and flagged") {
  const std::string path = write_temp("nofm_t7.csv",
                                      "g,y,a,b,c\n"
                                      "g1,0,,1,red\n"
                                      "g2,1,,0,red\n");
  const Dataset d = load_table(path, small_schema());
  const FeatureStats stats = FeatureStats::fit(d);
  CHECK(stats.all_missing() == std::vector<std::string>{"a"});
  CHECK_FALSE(stats.numeric("a").usable);
}

namespace {

Dataset groups_dataset(int n_groups, int n_pos, std::uint64_t shuffle_seed = 0) {
  // one row per group plus a second row for every third group
  std::ostringstream body;
  body << "g,y,a,b,c\n";
  std::vector<std::string> lines;
  for (int g = 0; g < n_groups; ++g) {
    const int y = g < n_pos ? 1 : 0;
    lines.push_back("grp" + std::to_string(g) + "," + std::to_string(y) +
                    ",1.0,0,red\n");
    if (g % 3 == 0)
      lines.push_back("grp" + std::to_string(g) + "," + std::to_string(y) +
                      ",2.0,1,blue\n");
  }
  if (shuffle_seed) {
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(lines.begin(), lines.end(), rng);
  }
  for (const std::string& l : lines) body << l;
  const std::string path = write_temp(
      "nofm_groups_" + std::to_string(shuffle_seed) + ".csv", body.str());
  return load_table(path, small_schema());
}

}  // namespace

TEST_CASE("stratified folds deal positives evenly and partition groups") {
  const Dataset d = groups_dataset(100, 30);
  const std::vector<FoldSplit> folds = stratified_group_kfold(d, 5, 17);
  REQUIRE(folds.size() == 5);

  std::set<std::string> all_test_groups;
  for (const FoldSplit& f : folds) {
    int pos_groups = 0;
    for (const std::string& gid : f.test_groups) {
      CHECK_FALSE(all_test_groups.count(gid));
      all_test_groups.insert(gid);
      if (std::stoi(gid.substr(3)) < 30) ++pos_groups;
    }
    CHECK(pos_groups == 6);  // 30 positive groups dealt over 5 folds
    CHECK(f.test_groups.size() == 20);

    // constructon/validation/test partition the rows
    std::set<std::uint32_t> seen;
    for (auto r : f.construction_rows) CHECK(seen.insert(r).second);
    for (auto r : f.validation_rows) CHECK(seen.insert(r).second);
    for (auto r : f.test_rows) CHECK(seen.insert(r).second);
    CHECK(seen.size() == d.n_rows);
  }
  CHECK(all_test_groups.size() == 100);
}

TEST_CASE("folds are deterministic and stable under row reordering") {
  const Dataset a = groups_dataset(60, 18);
  const Dataset b = groups_dataset(60, 18);  // same content
  const Dataset shuffled = groups_dataset(60, 18, 99);

  const auto fa = stratified_group_kfold(a, 5, 7);
  const auto fb = stratified_group_kfold(b, 5, 7);
  const auto fs = stratified_group_kfold(shuffled, 5, 7);
  for (int f = 0; f < 5; ++f) {
    CHECK(fa[f].test_groups == fb[f].test_groups);
    CHECK(fa[f].test_groups == fs[f].test_groups);  // keyed by id, not row
  }
  const auto other_seed = stratified_group_kfold(a, 5, 8);
  bool any_different = false;
  for (int f = 0; f < 5; ++f)
    if (fa[f].test_groups != other_seed[f].test_groups) any_different = true;
  CHECK(any_different);
}

TEST_CASE("too few groups of a class is an error") {
  const Dataset d = groups_dataset(10, 3);
  try {
    stratified_group_kfold(d, 5, 1);
    FAIL("expected TooFewGroups");
  } catch (const DataError& e) {
    CHECK(e.code == DataErrorCode::too_few_groups);
  }
}

TEST_CASE("groups with mixed labels are rejected") {
  const std::string path = write_temp("nofm_mixed.csv",
                                      "g,y,a,b,c\n"
                                      "g1,0,1,0,red\n"
                                      "g1,1,2,0,red\n"
                                      "g2,0,3,0,red\n"
                                      "g3,1,4,0,red\n");
  const Dataset d = load_table(path, small_schema());
  try {
    stratified_group_kfold(d, 2, 1);
    FAIL("expected mixed-label error");
  } catch (const DataError& e) {
    CHECK(e.code == DataErrorCode::mixed_label_group);
  }
}
