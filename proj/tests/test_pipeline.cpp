#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "oaudit/errors.hpp"
#include "oaudit/pipeline.hpp"
#include "testutil.hpp"

using namespace oaudit;

namespace {

RunConfig small_config(const std::filesystem::path& dir, std::uint64_t seed, int threads) {
  RunConfig c;
  c.dataset_path = dir / "synthetic.csv";
  c.schema_path = dir / "synthetic_schema.json";
  c.seed = seed;
  c.out_dir = dir / "out";
  c.threads = threads;
  c.embed_dim = 32;
  c.embed_min_df = 3;
  c.contamination = 0.05;
  c.n_neighbors = 60;
  c.min_support = 5;
  c.alpha = 0.05;
  c.marginalized_unions = {{"rare_groups", {"group05", "group06", "group07"}},
                           {"mid_groups", {"group02", "group03", "group04"}}};
  c.sweep_schedule_percent = {1, 5, 10, 20};
  c.sweep_spaces = {Space::demographic};
  return c;
}

void make_inputs(const std::filesystem::path& dir, std::uint64_t seed) {
  write_synthetic_dataset(dir / "synthetic.csv", dir / "synthetic_schema.json", 600, 8,
                          {"group07", 0.05, 2.0}, seed);
}

void run_all(const RunConfig& c) {
  run_ingest(c);
  run_embed(c);
  run_detect(c);
  run_audit(c);
  run_sweep(c);
  run_report(c);
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    files[std::filesystem::relative(entry.path(), dir).string()] = std::move(content);
  }
  return files;
}

}  // namespace

TEST_CASE("full pipeline runs, emits all artifacts, and is deterministic") {
  testutil::TempDir tmp("pipe");
  make_inputs(tmp.path(), 5);

  RunConfig c1 = small_config(tmp.path(), 11, 1);
  run_all(c1);

  const Artifacts art(c1.out_dir);
  for (const auto& p :
       {art.dataset_csv, art.embeddings, art.lof_csv(Space::text), art.lof_csv(Space::demographic),
        art.lof_csv(Space::disagreement), art.audit_json, art.report_md}) {
    INFO("missing: ", p.string());
    CHECK(std::filesystem::exists(p));
  }
  CHECK(std::filesystem::exists(c1.out_dir / "sweep_simmodel_demographic_curve.csv"));
  CHECK(std::filesystem::exists(c1.out_dir / "fig_toxicity_gaps.csv"));

  // Same config into a different directory with a different thread count.
  RunConfig c2 = c1;
  c2.out_dir = tmp.path() / "out2";
  c2.threads = 2;
  CHECK(c1.config_hash() == c2.config_hash());  // output/threads excluded
  run_all(c2);

  const auto tree1 = read_tree(c1.out_dir);
  const auto tree2 = read_tree(c2.out_dir);
  REQUIRE(tree1.size() == tree2.size());
  for (const auto& [name, content] : tree1) {
    REQUIRE(tree2.count(name) == 1);
    INFO("file differs: ", name);
    CHECK(content == tree2.at(name));
  }
}

TEST_CASE("re-running a stage with unchanged inputs rewrites identical bytes") {
  testutil::TempDir tmp("rerun");
  make_inputs(tmp.path(), 3);
  RunConfig c = small_config(tmp.path(), 7, 2);
  run_ingest(c);
  run_embed(c);
  run_detect(c);

  const Artifacts art(c.out_dir);
  auto before = read_tree(c.out_dir);
  run_detect(c);
  auto after = read_tree(c.out_dir);
  CHECK(before == after);

  run_audit(c);
  auto audit_before = read_tree(c.out_dir);
  run_audit(c);
  CHECK(audit_before == read_tree(c.out_dir));
}

TEST_CASE("stage dependency errors name the prerequisite command") {
  testutil::TempDir tmp("deps");
  make_inputs(tmp.path(), 9);
  RunConfig c = small_config(tmp.path(), 1, 1);

  try {
    run_audit(c);
    FAIL("expected dependency error");
  } catch (const Error& e) {
    CHECK(e.kind() == errc::config);
    CHECK(std::string(e.what()).find("ingest") != std::string::npos);
  }

  run_ingest(c);
  try {
    run_audit(c);  // detect has not run
    FAIL("expected dependency error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("detect") != std::string::npos);
  }

  try {
    run_detect(c);  // embeddings missing for the text space
    FAIL("expected dependency error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("embed") != std::string::npos);
  }

  run_embed(c);
  run_detect(c);
  try {
    run_sweep(c);  // audit must come first
    FAIL("expected dependency error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("audit") != std::string::npos);
  }
}

TEST_CASE("artifacts from a different configuration are refused") {
  testutil::TempDir tmp("hash");
  make_inputs(tmp.path(), 2);
  RunConfig c = small_config(tmp.path(), 4, 1);
  run_ingest(c);
  run_embed(c);

  RunConfig changed = c;
  changed.contamination = 0.1;
  try {
    run_detect(changed);
    FAIL("expected hash mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == errc::config);
    CHECK(std::string(e.what()).find("different configuration") != std::string::npos);
  }
}

TEST_CASE("run config JSON round-trips and hashes exclude output and threads") {
  testutil::TempDir tmp("cfg");
  const auto path = tmp.path() / "config.json";
  std::ofstream(path) << R"({
    "dataset": "synthetic.csv",
    "schema": "synthetic_schema.json",
    "seed": 17,
    "output": "out",
    "threads": 4,
    "embedding": {"dim": 48, "min_df": 2},
    "outliers": {"contamination": 0.04, "n_neighbors": 75,
                 "per_space": {"text": {"contamination": 0.08}}},
    "breakdowns": {"min_support": 12,
                   "marginalized": {"minorities": ["group05", "group06", "group07"]}},
    "alpha": 0.01,
    "sweep": {"schedule_percent": [1, 5], "spaces": ["demographic", "text"]}
  })";
  RunConfig c = RunConfig::load(path);
  CHECK(c.seed == 17);
  CHECK(c.embed_dim == 48);
  CHECK(c.contamination == 0.04);
  CHECK(c.outlier_config(Space::text).contamination == 0.08);
  CHECK(c.outlier_config(Space::demographic).contamination == 0.04);
  CHECK(c.outlier_config(Space::text).n_neighbors == 75);
  CHECK(c.min_support == 12);
  CHECK(c.alpha == 0.01);
  REQUIRE(c.marginalized_unions.size() == 1);
  CHECK(c.marginalized_unions[0].first == "minorities");
  CHECK(c.dataset_path == tmp.path() / "synthetic.csv");

  RunConfig moved = c;
  moved.out_dir = "elsewhere";
  moved.threads = 9;
  CHECK(moved.config_hash() == c.config_hash());
  RunConfig reseeded = c;
  reseeded.seed = 18;
  CHECK(reseeded.config_hash() != c.config_hash());
}

TEST_CASE("score import stage augments the dataset used downstream") {
  testutil::TempDir tmp("import_stage");
  make_inputs(tmp.path(), 6);
  RunConfig c = small_config(tmp.path(), 2, 1);
  run_ingest(c);

  // Export a tiny score file keyed by the canonical ids.
  DatasetTable table = load_stage_dataset(c);
  std::ofstream scores(tmp.path() / "scores.csv");
  scores << "id,toxicity\n";
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    scores << table.id(r) << "," << 0.5 << "\n";
  }
  scores.close();

  run_score_import(c, tmp.path() / "scores.csv", "offline");
  DatasetTable scored = load_stage_dataset(c);
  CHECK(scored.has_channel("offline:toxicity"));
  CHECK(scored.has_channel("simmodel:toxicity"));  // synthetic scores survive
  CHECK(scored.model_ids().size() == 2);
}

#ifdef OAUDIT_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OAUDIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("cli: exit codes and stage sequencing") {
  testutil::TempDir tmp("cli");
  const std::string dir = tmp.path().string();

  CHECK(run_cli("synth --csv " + dir + "/synthetic.csv --schema " + dir +
                "/synthetic_schema.json --n 400 --groups 6 --planted-group group05 --prevalence 0.06"
                " --inflation 2 --seed 3") == 0);

  std::ofstream(tmp.path() / "config.json") << R"({
    "dataset": "synthetic.csv",
    "schema": "synthetic_schema.json",
    "seed": 2,
    "output": "out",
    "embedding": {"dim": 24, "min_df": 3},
    "outliers": {"contamination": 0.05, "n_neighbors": 40},
    "breakdowns": {"min_support": 5,
                   "marginalized": {"rare_groups": ["group04", "group05"],
                                    "common_groups": ["group00", "group01"]}},
    "sweep": {"schedule_percent": [2, 5, 10]}
  })";
  const std::string cfg = " --config " + dir + "/config.json";

  // audit before anything: validation failure, exit 2.
  CHECK(run_cli("audit" + cfg) == 2);

  CHECK(run_cli("ingest" + cfg) == 0);
  CHECK(run_cli("embed" + cfg) == 0);
  CHECK(run_cli("audit" + cfg) == 2);  // still needs detect
  CHECK(run_cli("detect" + cfg) == 0);
  CHECK(run_cli("audit" + cfg) == 0);
  CHECK(run_cli("sweep" + cfg) == 0);
  CHECK(run_cli("report" + cfg) == 0);
  CHECK(std::filesystem::exists(tmp.path() / "out" / "report.md"));

  // Bad flag value: CLI validation, exit 2.
  CHECK(run_cli("detect" + cfg + " --space bogus") == 2);
  // Missing config file: exit 3 (io).
  CHECK(run_cli("ingest --config " + dir + "/nope.json") == 3);
}

TEST_CASE("cli: bundled 2000-row dataset runs the whole pipeline under 60 s") {
  testutil::TempDir tmp("bundled");
  const std::string cfg = " --config " OAUDIT_DATA_DIR "/example_config.json --out " +
                          (tmp.path() / "out").string();
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(run_cli("ingest" + cfg) == 0);
  CHECK(run_cli("embed" + cfg) == 0);
  CHECK(run_cli("detect" + cfg) == 0);
  CHECK(run_cli("audit" + cfg) == 0);
  CHECK(run_cli("sweep" + cfg) == 0);
  CHECK(run_cli("report" + cfg) == 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 60.0);
  CHECK(std::filesystem::exists(tmp.path() / "out" / "report.md"));
  CHECK(std::filesystem::exists(tmp.path() / "out" / "audit.json"));
}
#endif
