#include "nofm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "nofm/errors.hpp"
#include "nofm/rule_io.hpp"

namespace nofm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxScore = 6;

double round_sig3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return std::strtod(buf, nullptr);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Linear interpolation between order statistics, written out independently
// of the library path it cross-checks.
double quantile_of(std::vector<double> values, double q) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return std::isnan(v); }),
               values.end());
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return values[0];
  const double h = (static_cast<double>(n) - 1.0) * q;
  const double fl = std::floor(h);
  const std::size_t lo = static_cast<std::size_t>(fl);
  if (lo >= n - 1) return values[n - 1];
  return values[lo] + (h - fl) * (values[lo + 1] - values[lo]);
}

struct Columns {
  std::vector<double> lactate, map_bp, wbc, creat_first, creat_last;
  std::vector<double> sodium, platelets, hr, age;
  std::vector<std::uint8_t> vent, smoker;
  std::vector<std::string> admission;
};

Columns draw_features(std::uint64_t n, std::mt19937_64& rng) {
  Columns c;
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto lognormal = [&](double mu, double sig) {
    return std::exp(mu + sig * std_normal(rng));
  };

  c.lactate.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    c.lactate.push_back(lognormal(std::log(1.8), 0.5));
    c.map_bp.push_back(75.0 + 12.0 * std_normal(rng));
    c.wbc.push_back(lognormal(std::log(9.5), 0.45));
    const double base = lognormal(std::log(1.0), 0.4);
    c.creat_first.push_back(base);
    c.creat_last.push_back(base * (1.0 + 0.05 + 0.35 * std_normal(rng)));
    c.sodium.push_back(140.0 + 4.0 * std_normal(rng));
    c.platelets.push_back(lognormal(std::log(240.0), 0.35));
    c.hr.push_back(88.0 + 16.0 * std_normal(rng));
    c.age.push_back(65.0 + 14.0 * std_normal(rng));
    c.vent.push_back(unif(rng) < 0.35 ? 1 : 0);
    c.smoker.push_back(unif(rng) < 0.25 ? 1 : 0);
    const double u = unif(rng);
    c.admission.push_back(u < 0.25   ? "emergency"
                          : u < 0.35 ? "urgent"
                                     : "elective");
  }

  // sprinkle missingness on the numeric vitals (2%)
  for (std::uint64_t i = 0; i < n; ++i) {
    if (unif(rng) < 0.02) c.lactate[i] = kNaN;
    if (unif(rng) < 0.02) c.map_bp[i] = kNaN;
    if (unif(rng) < 0.02) c.wbc[i] = kNaN;
    if (unif(rng) < 0.02) c.creat_last[i] = kNaN;
  }
  return c;
}

struct PlantedMasks {
  std::vector<std::uint8_t> fires[6];
  std::vector<int> score;
};

// Rule firings computed directly from the raw columns; this is the
// generator-side oracle the evaluation engine is checked against.
PlantedMasks apply_planted(const Columns& c, double lactate_cut, double map_cut,
                           double wbc_q75, double pct_cut) {
  const std::uint64_t n = c.lactate.size();
  PlantedMasks m;
  for (auto& f : m.fires) f.assign(n, 0);
  m.score.assign(n, 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    m.fires[0][i] = !std::isnan(c.lactate[i]) && c.lactate[i] >= lactate_cut;
    m.fires[1][i] = !std::isnan(c.map_bp[i]) && c.map_bp[i] <= map_cut;
    m.fires[2][i] = c.vent[i] == 1;
    m.fires[3][i] = !std::isnan(c.creat_first[i]) &&
                    !std::isnan(c.creat_last[i]) && c.creat_first[i] != 0.0 &&
                    (c.creat_last[i] - c.creat_first[i]) / c.creat_first[i] >=
                        pct_cut;
    m.fires[4][i] =
        c.admission[i] == "emergency" || c.admission[i] == "urgent";
    m.fires[5][i] = !std::isnan(c.wbc[i]) && c.wbc[i] >= wbc_q75;
    for (const auto& f : m.fires) m.score[i] += f[i];
  }
  return m;
}

struct LevelCounts {
  std::array<std::uint64_t, kMaxScore + 1> rows{};

  static LevelCounts of(const std::vector<int>& score) {
    LevelCounts lc;
    for (int s : score) ++lc.rows[s];
    return lc;
  }
};

double mean_pi(const LevelCounts& lc, std::uint64_t n, double c, double sigma) {
  double sum = 0;
  for (int s = 0; s <= kMaxScore; ++s)
    sum += static_cast<double>(lc.rows[s]) *
           normal_cdf((static_cast<double>(s) - c) / sigma);
  return sum / static_cast<double>(n);
}

double solve_center(const LevelCounts& lc, std::uint64_t n, double sigma,
                    double prevalence) {
  double lo = -20, hi = 20;  // mean_pi decreasing in c
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_pi(lc, n, mid, sigma) > prevalence)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Expected AUROC of the integer score against labels drawn from pi(s).
double expected_auroc(const LevelCounts& lc, double c, double sigma) {
  std::array<double, kMaxScore + 1> pos{}, neg{};
  double p_total = 0, n_total = 0;
  for (int s = 0; s <= kMaxScore; ++s) {
    const double pi = normal_cdf((static_cast<double>(s) - c) / sigma);
    pos[s] = static_cast<double>(lc.rows[s]) * pi;
    neg[s] = static_cast<double>(lc.rows[s]) * (1.0 - pi);
    p_total += pos[s];
    n_total += neg[s];
  }
  double credit = 0, neg_below = 0;
  for (int s = 0; s <= kMaxScore; ++s) {
    credit += pos[s] * (neg_below + 0.5 * neg[s]);
    neg_below += neg[s];
  }
  return credit / (p_total * n_total);
}

// Empirical AUROC from the integer-score histogram of drawn labels.
double histogram_auroc(const std::vector<int>& score,
                       const std::vector<std::uint8_t>& y) {
  std::array<std::uint64_t, kMaxScore + 1> pos{}, tot{};
  for (std::size_t i = 0; i < score.size(); ++i) {
    ++tot[score[i]];
    if (y[i]) ++pos[score[i]];
  }
  double p_total = 0, n_total = 0;
  for (int s = 0; s <= kMaxScore; ++s) {
    p_total += static_cast<double>(pos[s]);
    n_total += static_cast<double>(tot[s] - pos[s]);
  }
  if (p_total == 0 || n_total == 0)
    throw DataError(DataErrorCode::non_binary_label,
                    "generated labels collapsed to one class");
  double credit = 0, neg_below = 0;
  for (int s = 0; s <= kMaxScore; ++s) {
    const double neg = static_cast<double>(tot[s] - pos[s]);
    credit += static_cast<double>(pos[s]) * (neg_below + 0.5 * neg);
    neg_below += neg;
  }
  return credit / (p_total * n_total);
}

std::string fmt_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SynthResult synth_gen(const SynthSpec& spec, const std::string& out_dir) {
  if (spec.n < 100) throw ConfigError("synth n must be >= 100");
  if (!(spec.prevalence > 0.0 && spec.prevalence < 1.0))
    throw ConfigError("prevalence must be in (0,1)");

  std::mt19937_64 rng(spec.seed);
  const Columns cols = draw_features(spec.n, rng);

  const double lactate_cut = round_sig3(quantile_of(cols.lactate, 0.65));
  const double map_cut = round_sig3(quantile_of(cols.map_bp, 0.35));
  const double wbc_q75 = quantile_of(cols.wbc, 0.75);
  const double pct_cut = 0.3;

  const PlantedMasks masks =
      apply_planted(cols, lactate_cut, map_cut, wbc_q75, pct_cut);
  const LevelCounts lc = LevelCounts::of(masks.score);

  // -- label model ------------------------------------------------------------
  double sigma;
  if (spec.noise) {
    sigma = *spec.noise;
    if (sigma < 0) throw ConfigError("noise must be >= 0");
  } else {
    // AUROC is decreasing in sigma; bracket then bisect.
    double lo = 1e-3, hi = 50.0;
    const auto auroc_at = [&](double s) {
      return expected_auroc(lc, solve_center(lc, spec.n, s, spec.prevalence), s);
    };
    if (spec.target_auroc > auroc_at(lo) + spec.tolerance ||
        spec.target_auroc < auroc_at(hi) - spec.tolerance)
      throw ConfigError("target AUROC unreachable for this prevalence");
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (auroc_at(mid) > spec.target_auroc)
        lo = mid;
      else
        hi = mid;
    }
    sigma = 0.5 * (lo + hi);
  }

  std::vector<std::uint8_t> labels(spec.n, 0);
  int intended_k = 0;
  if (sigma == 0.0) {
    // deterministic limit: y = 1 iff the planted score reaches K, K chosen
    // closest to the requested prevalence
    double best_gap = 2.0;
    for (int k = 1; k <= kMaxScore; ++k) {
      std::uint64_t at_least = 0;
      for (int s = k; s <= kMaxScore; ++s) at_least += lc.rows[s];
      const double prev = static_cast<double>(at_least) /
                          static_cast<double>(spec.n);
      if (std::fabs(prev - spec.prevalence) < best_gap) {
        best_gap = std::fabs(prev - spec.prevalence);
        intended_k = k;
      }
    }
    for (std::uint64_t i = 0; i < spec.n; ++i)
      labels[i] = masks.score[i] >= intended_k;
  } else {
    const double center = solve_center(lc, spec.n, sigma, spec.prevalence);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::uint64_t i = 0; i < spec.n; ++i) {
      const double pi =
          normal_cdf((static_cast<double>(masks.score[i]) - center) / sigma);
      labels[i] = unif(rng) < pi;
    }
    // Youden-optimal K for the manifest, by direct enumeration.
    double best_j = -1;
    std::uint64_t p_total = 0;
    for (std::uint64_t i = 0; i < spec.n; ++i) p_total += labels[i];
    for (int k = 0; k <= kMaxScore; ++k) {
      std::uint64_t tp = 0, fp = 0;
      for (std::uint64_t i = 0; i < spec.n; ++i)
        if (masks.score[i] >= k) (labels[i] ? tp : fp)++;
      const double sens = static_cast<double>(tp) / static_cast<double>(p_total);
      const double spec_ =
          1.0 - static_cast<double>(fp) / static_cast<double>(spec.n - p_total);
      if (sens + spec_ - 1.0 > best_j) {
        best_j = sens + spec_ - 1.0;
        intended_k = k;
      }
    }
  }

  const double achieved = histogram_auroc(masks.score, labels);
  if (!spec.noise && std::fabs(achieved - spec.target_auroc) > spec.tolerance)
    throw ConfigError("generator verification failed: achieved AUROC " +
                      std::to_string(achieved));
  std::uint64_t pos_count = 0;
  for (std::uint8_t y : labels) pos_count += y;

  // -- schema and planted rules -----------------------------------------------
  TableSchema schema;
  schema.label_column = "label";
  schema.group_column = "stay_id";
  auto add = [&](const std::string& name, FeatureKind kind,
                 const std::string& unit = "") {
    schema.catalog.add({name, kind, unit, ""});
  };
  add("lactate", FeatureKind::numeric, "mmol/L");
  add("map_bp", FeatureKind::numeric, "mmHg");
  add("wbc", FeatureKind::numeric, "10^9/L");
  add("creat__first", FeatureKind::numeric, "mg/dL");
  add("creat__last", FeatureKind::numeric, "mg/dL");
  add("sodium", FeatureKind::numeric, "mmol/L");
  add("platelets", FeatureKind::numeric, "10^9/L");
  add("hr", FeatureKind::numeric, "bpm");
  add("age", FeatureKind::numeric, "years");
  add("vent", FeatureKind::binary);
  add("smoker", FeatureKind::binary);
  add("admission_type", FeatureKind::categorical);

  std::vector<Rule> planted;
  planted.push_back(Rule{NumericThreshold{"lactate", CmpOp::ge, lactate_cut}});
  planted.push_back(Rule{NumericThreshold{"map_bp", CmpOp::le, map_cut}});
  planted.push_back(Rule{BinaryTrue{"vent"}});
  planted.push_back(Rule{PercentChange{"creat__first", "creat__last", pct_cut,
                                       CmpOp::ge, ChangeDir::increase}});
  planted.push_back(
      Rule{CategoricalIn{"admission_type", {"emergency", "urgent"}}});
  planted.push_back(Rule{QuantileThreshold{"wbc", CmpOp::ge, 0.75}});

  // -- write files --------------------------------------------------------------
  std::filesystem::create_directories(out_dir);
  SynthResult result;
  result.data_path = out_dir + "/data.csv";
  result.schema_path = out_dir + "/schema.json";
  result.manifest_path = out_dir + "/manifest.json";

  {
    std::ofstream out(result.data_path);
    if (!out) throw IoError("cannot write " + result.data_path);
    out << "stay_id,label,lactate,map_bp,wbc,creat__first,creat__last,"
           "sodium,platelets,hr,age,vent,smoker,admission_type\n";
    for (std::uint64_t i = 0; i < spec.n; ++i) {
      char gid[16];
      std::snprintf(gid, sizeof gid, "g%06llu",
                    static_cast<unsigned long long>(i));
      out << gid << ',' << int(labels[i]) << ',' << fmt_cell(cols.lactate[i])
          << ',' << fmt_cell(cols.map_bp[i]) << ',' << fmt_cell(cols.wbc[i])
          << ',' << fmt_cell(cols.creat_first[i]) << ','
          << fmt_cell(cols.creat_last[i]) << ',' << fmt_cell(cols.sodium[i])
          << ',' << fmt_cell(cols.platelets[i]) << ',' << fmt_cell(cols.hr[i])
          << ',' << fmt_cell(cols.age[i]) << ',' << int(cols.vent[i]) << ','
          << int(cols.smoker[i]) << ',' << cols.admission[i] << '\n';
    }
  }
  schema.save(result.schema_path);

  nlohmann::json planted_json = nlohmann::json::array();
  for (const Rule& r : planted) planted_json.push_back(rule_to_json(r));
  nlohmann::json per_score = nlohmann::json::array();
  {
    std::array<std::uint64_t, kMaxScore + 1> pos{};
    for (std::uint64_t i = 0; i < spec.n; ++i)
      if (labels[i]) ++pos[masks.score[i]];
    for (int s = 0; s <= kMaxScore; ++s)
      if (lc.rows[s] > 0)
        per_score.push_back(
            {{"score", s},
             {"n", lc.rows[s]},
             {"events", pos[s]},
             {"rate", static_cast<double>(pos[s]) /
                          static_cast<double>(lc.rows[s])}});
  }
  result.manifest = nlohmann::json{
      {"n", spec.n},
      {"seed", spec.seed},
      {"requested_prevalence", spec.prevalence},
      {"achieved_prevalence",
       static_cast<double>(pos_count) / static_cast<double>(spec.n)},
      {"sigma", sigma},
      {"target_auroc", spec.noise ? nlohmann::json() : nlohmann::json(spec.target_auroc)},
      {"achieved_auroc", achieved},
      {"intended_k", intended_k},
      {"planted_rules", std::move(planted_json)},
      {"per_score", std::move(per_score)}};
  {
    std::ofstream out(result.manifest_path);
    if (!out) throw IoError("cannot write " + result.manifest_path);
    out << result.manifest.dump(2) << "\n";
  }

  result.schema = std::move(schema);
  result.planted = std::move(planted);
  result.intended_k = intended_k;
  result.sigma = sigma;
  result.achieved_auroc = achieved;
  result.achieved_prevalence =
      static_cast<double>(pos_count) / static_cast<double>(spec.n);
  return result;
}

}  // namespace nofm
