#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "nofm/pipeline.hpp"
#include "nofm/rule_space.hpp"
#include "nofm/stats_tests.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTransport = 4;

nofm::PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw nofm::ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw nofm::ConfigError(std::string("bad config JSON: ") + e.what());
  }
  return nofm::PipelineConfig::from_json(j);
}

struct RunArgs {
  std::string config_path, data_path, schema_path, out_dir = "out";
  std::string proposer, assemble_mode;
  std::int64_t seed = -1;
  int max_rules = 0, iterations = 0, folds = 0, jobs = 0;
  bool no_jaccard = false, no_diversity = false, single_pass = false;
};

nofm::PipelineConfig apply_overrides(nofm::PipelineConfig cfg,
                                     const RunArgs& args) {
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.max_rules > 0) cfg.max_rules = args.max_rules;
  if (args.iterations > 0) cfg.iterations = args.iterations;
  if (args.folds > 0) cfg.folds = args.folds;
  if (args.jobs > 0) cfg.jobs = args.jobs;
  if (!args.proposer.empty())
    cfg.proposer = args.proposer == "remote" ? nofm::ProposerMode::remote
                                             : nofm::ProposerMode::heuristic;
  if (!args.assemble_mode.empty()) {
    if (args.assemble_mode == "greedy")
      cfg.assemble_mode = nofm::AssembleMode::greedy;
    else if (args.assemble_mode == "exhaustive")
      cfg.assemble_mode = nofm::AssembleMode::exhaustive;
    else if (args.assemble_mode == "agent")
      cfg.assemble_mode = nofm::AssembleMode::agent;
    else
      throw nofm::ConfigError("unknown assemble mode " + args.assemble_mode);
  }
  if (args.no_jaccard) cfg.use_jaccard = false;
  if (args.no_diversity) cfg.use_diversity = false;
  if (args.single_pass) cfg.single_pass = true;
  cfg.validate();
  return cfg;
}

nofm::Dataset load_data(const RunArgs& args) {
  if (args.data_path.empty() || args.schema_path.empty())
    throw nofm::ConfigError("--data and --schema are required");
  const nofm::TableSchema schema = nofm::TableSchema::load(args.schema_path);
  return nofm::load_table(args.data_path, schema);
}

int cmd_run(const RunArgs& args) {
  const nofm::PipelineConfig cfg =
      apply_overrides(load_config(args.config_path), args);
  const nofm::Dataset data = load_data(args);
  const nofm::RunOutput out = nofm::run_pipeline(data, cfg);

  std::filesystem::create_directories(args.out_dir);
  out.report.save(args.out_dir + "/report.json");
  out.transcript.save(args.out_dir + "/transcript.jsonl");
  for (const nofm::FoldOutput& fold : out.folds) {
    const std::string base =
        args.out_dir + "/fold" + std::to_string(fold.report.fold);
    std::ofstream card(base + "_card.md");
    card << fold.report.card_markdown;
    std::ofstream cj(base + "_card.json");
    cj << nofm::card_json(fold.checklist, fold.stats).dump(2) << "\n";
    fold.pool.save(base + "_pool.jsonl");
  }

  std::printf("mean test AUROC %.4f +- %.4f over %zu folds\n",
              out.report.mean_test_auroc, out.report.std_test_auroc,
              out.folds.size());
  for (const nofm::FoldReport& f : out.report.folds)
    std::printf("  fold %d: AUROC %.4f, K=%d, pool %llu, accepted %llu/%llu\n",
                f.fold, f.test.auroc, f.test.threshold,
                static_cast<unsigned long long>(f.pool_size),
                static_cast<unsigned long long>(f.admitted),
                static_cast<unsigned long long>(f.proposed));
  std::printf("report: %s/report.json\n", args.out_dir.c_str());
  return kExitOk;
}

int cmd_sweep(const RunArgs& args, std::vector<int> m_values) {
  const nofm::PipelineConfig cfg =
      apply_overrides(load_config(args.config_path), args);
  const nofm::Dataset data = load_data(args);
  if (m_values.empty()) m_values = {1, 2, 3, 4, 5, 6};
  const std::vector<nofm::SweepRow> rows =
      nofm::sweep_rule_budget(data, cfg, m_values);

  std::filesystem::create_directories(args.out_dir);
  nlohmann::json jrows = nlohmann::json::array();
  std::printf("max_rules,mean_auroc,std_auroc\n");
  for (const nofm::SweepRow& r : rows) {
    std::printf("%d,%.4f,%.4f\n", r.max_rules, r.mean_auroc, r.std_auroc);
    jrows.push_back({{"max_rules", r.max_rules},
                     {"mean_auroc", r.mean_auroc},
                     {"std_auroc", r.std_auroc}});
  }
  std::ofstream out(args.out_dir + "/sweep.json");
  out << jrows.dump(2) << "\n";
  return kExitOk;
}

int cmd_synth(const std::string& out_dir, std::uint64_t n, double prevalence,
              double target_auroc, double noise, bool noise_set,
              std::uint64_t seed) {
  nofm::SynthSpec spec;
  spec.n = n;
  spec.prevalence = prevalence;
  spec.target_auroc = target_auroc;
  spec.seed = seed;
  if (noise_set) spec.noise = noise;
  const nofm::SynthResult result = nofm::synth_gen(spec, out_dir);
  std::printf("wrote %s (n=%llu, prevalence %.4f, checklist AUROC %.4f, K=%d)\n",
              result.data_path.c_str(), static_cast<unsigned long long>(n),
              result.achieved_prevalence, result.achieved_auroc,
              result.intended_k);
  return kExitOk;
}

int cmd_space(std::uint64_t p, std::uint64_t t, std::uint64_t n,
              double per_rule_seconds) {
  const nofm::CardinalityReport report = nofm::estimate_rule_space(p, t);
  std::printf("primitive rules:      %llu\n",
              static_cast<unsigned long long>(report.primitive));
  std::printf("compositional rules:  %s (~%.3g)\n",
              nofm::u128_to_string(report.compositional).c_str(),
              nofm::u128_to_double(report.compositional));
  std::printf("universe order:       %s (~%.3g)\n",
              nofm::u128_to_string(report.universe_order).c_str(),
              nofm::u128_to_double(report.universe_order));
  if (n > 0) {
    const nofm::u128 prim_bytes =
        nofm::packed_matrix_bytes(report.primitive, n);
    const nofm::u128 univ_bytes =
        nofm::packed_matrix_bytes(report.universe_order, n);
    std::printf("bit-packed matrix, primitive x %llu samples: %s bytes (~%.3g)\n",
                static_cast<unsigned long long>(n),
                nofm::u128_to_string(prim_bytes).c_str(),
                nofm::u128_to_double(prim_bytes));
    std::printf("bit-packed matrix, universe x %llu samples:  %s bytes (~%.3g)\n",
                static_cast<unsigned long long>(n),
                nofm::u128_to_string(univ_bytes).c_str(),
                nofm::u128_to_double(univ_bytes));
    const double seconds =
        nofm::time_wall_seconds(report.universe_order, per_rule_seconds);
    std::printf("time wall at %.3g s/rule: %.3g s (~%.3g years)\n",
                per_rule_seconds, seconds, seconds / (365.25 * 86400.0));
  }
  return kExitOk;
}

int cmd_replay(const RunArgs& args, const std::string& transcript_path) {
  const nofm::PipelineConfig cfg =
      apply_overrides(load_config(args.config_path), args);
  const nofm::Dataset data = load_data(args);
  const nofm::Transcript t = nofm::Transcript::load(transcript_path);
  const nofm::ReplayResult result = nofm::replay_run(data, t, cfg);
  for (std::size_t f = 0; f < result.pool_hashes.size(); ++f)
    std::printf("fold %zu: pool hash %s, checklist %zu rules, K=%d\n", f,
                result.pool_hashes[f].c_str(),
                result.checklists[f].rules.size(),
                result.checklists[f].threshold_k);
  std::printf("divergences: %d\n", result.divergences);
  return result.divergences == 0 ? kExitOk : kExitData;
}

int cmd_compare(const std::vector<std::string>& report_paths,
                std::uint64_t seed) {
  if (report_paths.size() < 2)
    throw nofm::ConfigError("compare needs at least two report files");
  std::vector<nofm::MethodFolds> methods;
  for (const std::string& path : report_paths) {
    std::ifstream in(path);
    if (!in) throw nofm::DataError(nofm::DataErrorCode::file_unreadable,
                                   "cannot open " + path);
    nlohmann::json j;
    in >> j;
    const nofm::RunReport report = nofm::RunReport::from_json(j);
    nofm::MethodFolds m;
    m.name = std::filesystem::path(path).stem().string();
    m.values = report.fold_aurocs();
    methods.push_back(std::move(m));
  }
  const nofm::ComparisonReport report =
      nofm::paired_comparison(methods, 0, seed);
  std::printf("%s\n", report.to_json().dump(2).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learns unit-weighted N-of-M clinical checklists from tabular "
               "outcome data"};
  app.require_subcommand(1);

  RunArgs args;
  std::vector<int> m_values;
  std::string transcript_path;
  std::vector<std::string> report_paths;

  std::uint64_t synth_n = 10000, synth_seed = 20240501;
  double synth_prevalence = 0.15, synth_target = 0.95, synth_noise = 0;
  bool synth_noise_set = false;
  std::string synth_out = "synth";

  std::uint64_t space_p = 50, space_t = 20, space_n = 0;
  double space_cost = 0.1;
  std::uint64_t compare_seed = 17;

  auto add_common = [&](CLI::App* cmd, bool with_data = true) {
    cmd->add_option("--config", args.config_path, "pipeline config JSON");
    if (with_data) {
      cmd->add_option("--data", args.data_path, "CSV data file")->required();
      cmd->add_option("--schema", args.schema_path, "schema JSON")->required();
    }
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--max-rules", args.max_rules, "rule budget override");
    cmd->add_option("--iterations", args.iterations, "iteration override");
    cmd->add_option("--folds", args.folds, "fold count override");
    cmd->add_option("--jobs", args.jobs, "parallel folds (offline runs)");
    cmd->add_option("--proposer", args.proposer, "heuristic|remote");
    cmd->add_option("--assemble", args.assemble_mode,
                    "greedy|exhaustive|agent");
    cmd->add_flag("--no-jaccard", args.no_jaccard, "disable redundancy gate");
    cmd->add_flag("--no-diversity", args.no_diversity,
                  "disable diversity guidance");
    cmd->add_flag("--single-pass", args.single_pass, "disable refinement");
  };

  CLI::App* run = app.add_subcommand("run", "cross-validated checklist run");
  add_common(run);

  CLI::App* sweep =
      app.add_subcommand("sweep", "rule-budget sweep (accuracy frontier)");
  add_common(sweep);
  sweep->add_option("--max-rules-list", m_values, "budgets to sweep");

  CLI::App* synth = app.add_subcommand("synth", "planted-checklist generator");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--n", synth_n, "rows");
  synth->add_option("--prevalence", synth_prevalence, "positive rate");
  synth->add_option("--target-auroc", synth_target, "calibrated AUROC");
  synth->add_option("--noise", synth_noise, "fixed sigma (0 = deterministic)")
      ->check([&](const std::string&) {
        synth_noise_set = true;
        return std::string();
      });
  synth->add_option("--seed", synth_seed, "generator seed");

  CLI::App* space = app.add_subcommand("space", "rule-space size estimator");
  space->add_option("--features", space_p, "feature count p")->required();
  space->add_option("--thresholds", space_t, "thresholds per feature T")
      ->required();
  space->add_option("--samples", space_n, "sample count N for the memory wall");
  space->add_option("--per-rule-seconds", space_cost,
                    "evaluation cost for the time wall");

  CLI::App* replay =
      app.add_subcommand("replay", "re-run a recorded candidate transcript");
  add_common(replay);
  replay->add_option("transcript", transcript_path, "transcript JSON-lines")
      ->required();

  CLI::App* compare =
      app.add_subcommand("compare", "paired statistics over run reports");
  compare->add_option("reports", report_paths, "two or more report.json files")
      ->required();
  compare->add_option("--seed", compare_seed, "bootstrap seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args);
    if (sweep->parsed()) return cmd_sweep(args, m_values);
    if (synth->parsed())
      return cmd_synth(synth_out, synth_n, synth_prevalence, synth_target,
                       synth_noise, synth_noise_set, synth_seed);
    if (space->parsed())
      return cmd_space(space_p, space_t, space_n, space_cost);
    if (replay->parsed()) return cmd_replay(args, transcript_path);
    if (compare->parsed()) return cmd_compare(report_paths, compare_seed);
  } catch (const nofm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const nofm::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const nofm::TransportError& e) {
    std::fprintf(stderr, "transport error: %s\n", e.what());
    return kExitTransport;
  } catch (const nofm::RuleError& e) {
    std::fprintf(stderr, "rule error: %s\n", e.what());
    return kExitData;
  } catch (const nofm::EvalError& e) {
    std::fprintf(stderr, "evaluation error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
