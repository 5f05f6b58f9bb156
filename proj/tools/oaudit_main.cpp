// oaudit: outlier-based disparity audit for toxicity-detection datasets.
//
// Stages hand off through files in the output directory so external
// embeddings or offline model scores can be substituted at the right seam:
//   ingest -> embed -> score -> detect -> audit -> sweep -> report

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oaudit/errors.hpp"
#include "oaudit/pipeline.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string space = "all";
  std::int64_t seed = -1;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "run configuration JSON");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "seed (overrides config)");
  cmd->add_option("--threads", args.threads, "worker cap, 0 = all cores (overrides config)");
  cmd->add_option("--space", args.space, "outlier space: text|demographic|disagreement|all")
      ->check(CLI::IsMember({"text", "demographic", "disagreement", "all"}));
}

oaudit::RunConfig make_config(const CommonArgs& args) {
  oaudit::RunConfig config = oaudit::RunConfig::load(args.config_path);
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (args.threads >= 0) config.threads = args.threads;
  if (args.space != "all") {
    config.spaces = {oaudit::space_from_string(args.space)};
    config.sweep_spaces = {oaudit::space_from_string(args.space)};
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"outlier-based disparity audit toolkit"};
  app.require_subcommand(1);

  CommonArgs ingest_args, embed_args, score_args, detect_args, audit_args, sweep_args, report_args;

  auto* ingest = app.add_subcommand("ingest", "load, validate, and preprocess the dataset");
  add_common(ingest, ingest_args);

  auto* embed = app.add_subcommand("embed", "compute or import text embeddings");
  add_common(embed, embed_args);

  auto* score = app.add_subcommand("score", "fetch model scores over HTTP or import them from CSV");
  add_common(score, score_args);
  std::string import_path, import_model;
  score->add_option("--import", import_path, "CSV of scores (id column + one column per toxicity type)");
  score->add_option("--model", import_model, "model id for imported scores");

  auto* detect = app.add_subcommand("detect", "run LOF outlier detection per space");
  add_common(detect, detect_args);

  auto* audit_cmd = app.add_subcommand("audit", "compute WMSE, gaps, significance, and composition");
  add_common(audit_cmd, audit_args);

  auto* sweep = app.add_subcommand("sweep", "trace WMSE across a contamination schedule");
  add_common(sweep, sweep_args);

  auto* report = app.add_subcommand("report", "render the Markdown report and plot data");
  add_common(report, report_args);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with a planted disparity");
  std::string synth_csv = "synthetic.csv", synth_schema = "synthetic_schema.json";
  std::size_t synth_n = 2000, synth_groups = 24;
  std::string planted_group = "group23";
  double prevalence = 0.02, inflation = 1.0;
  std::int64_t synth_seed = 1;
  synth->add_option("--csv", synth_csv, "output dataset CSV path");
  synth->add_option("--schema", synth_schema, "output schema config path");
  synth->add_option("--n", synth_n, "row count");
  synth->add_option("--groups", synth_groups, "demographic group count");
  synth->add_option("--planted-group", planted_group, "which group carries the planted disparity");
  synth->add_option("--prevalence", prevalence, "planted group prevalence");
  synth->add_option("--inflation", inflation, "error noise inflation on planted rows (1.0 = none)");
  synth->add_option("--seed", synth_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (ingest->parsed()) {
      oaudit::run_ingest(make_config(ingest_args));
    } else if (embed->parsed()) {
      oaudit::run_embed(make_config(embed_args));
    } else if (score->parsed()) {
      oaudit::RunConfig config = make_config(score_args);
      if (!import_path.empty()) {
        if (import_model.empty()) {
          oaudit::fail(oaudit::errc::config, "score --import requires --model");
        }
        oaudit::run_score_import(config, import_path, import_model);
      } else {
        oaudit::FetchOutcome outcome;
        oaudit::run_score_fetch(config, &outcome);
        std::fprintf(stderr, "score: %zu requests, %zu cache hits, %zu row errors\n", outcome.requests,
                     outcome.cache_hits, outcome.errors.size());
      }
    } else if (detect->parsed()) {
      oaudit::run_detect(make_config(detect_args));
    } else if (audit_cmd->parsed()) {
      oaudit::run_audit(make_config(audit_args));
    } else if (sweep->parsed()) {
      oaudit::run_sweep(make_config(sweep_args));
    } else if (report->parsed()) {
      oaudit::run_report(make_config(report_args));
    } else if (synth->parsed()) {
      oaudit::PlantedSpec planted{planted_group, prevalence, inflation};
      oaudit::write_synthetic_dataset(synth_csv, synth_schema, synth_n, synth_groups, planted,
                                      static_cast<std::uint64_t>(synth_seed));
    }
  } catch (const oaudit::Error& e) {
    std::cerr << "oaudit: " << e.what() << "\n";
    return oaudit::is_validation_error(e.kind()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "oaudit: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
