#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oaudit/audit.hpp"
#include "oaudit/dataset.hpp"
#include "oaudit/lof.hpp"
#include "oaudit/scorer.hpp"
#include "oaudit/synthetic.hpp"

namespace oaudit {

struct SpaceOverride {
  std::optional<std::size_t> n_neighbors;
  std::optional<double> contamination;
};

struct RunConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path schema_path;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  int threads = 0;

  // ingest
  std::optional<double> sample_fraction;
  bool dedup_text = false;

  // embedding
  std::size_t embed_dim = 64;
  std::uint32_t embed_min_df = 5;
  std::optional<std::filesystem::path> external_embeddings;

  // outlier detection
  double contamination = 0.05;
  std::optional<std::size_t> n_neighbors;  // default rule when unset
  std::vector<Space> spaces = {Space::text, Space::demographic, Space::disagreement};
  std::map<Space, SpaceOverride> space_overrides;

  // breakdowns / audit
  std::size_t min_support = 10;
  MarginalizedUnions marginalized_unions = default_marginalized_unions();
  double alpha = 0.05;

  // sweep
  std::vector<double> sweep_schedule_percent = {0.1, 0.25, 0.5, 0.75, 1,  2.5, 5, 7.5,
                                                10,  15,   20,  25,   30, 35,  40};
  std::vector<Space> sweep_spaces = {Space::demographic};

  // scorer
  std::optional<ScorerEndpointConfig> scorer;
  std::filesystem::path cache_path = "score_cache.jsonl";

  static RunConfig load(const std::filesystem::path& config_json);
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  nlohmann::json resolved_json() const;

  // Hash of the resolved configuration, excluding out_dir and threads so that
  // runs into different directories or with different worker counts compare
  // equal.
  std::string config_hash() const;

  OutlierConfig outlier_config(Space s) const;
};

// Artifact paths inside out_dir.
struct Artifacts {
  explicit Artifacts(const std::filesystem::path& out_dir);
  std::filesystem::path dir;
  std::filesystem::path dataset_csv;
  std::filesystem::path dataset_sidecar;
  std::filesystem::path scored_csv;
  std::filesystem::path scored_sidecar;
  std::filesystem::path embeddings;
  std::filesystem::path embeddings_sidecar;
  std::filesystem::path lof_csv(Space s) const;
  std::filesystem::path lof_sidecar(Space s) const;
  std::filesystem::path audit_json;
  std::filesystem::path report_md;
};

// Pipeline stages. Each reads earlier artifacts from out_dir, verifies their
// config hash, and writes its own outputs deterministically.
void run_ingest(const RunConfig& config);
void run_embed(const RunConfig& config);
void run_score_fetch(const RunConfig& config, FetchOutcome* outcome = nullptr);
void run_score_import(const RunConfig& config, const std::filesystem::path& scores_csv,
                      const std::string& model_id);
void run_detect(const RunConfig& config);
void run_audit(const RunConfig& config);
void run_sweep(const RunConfig& config);
void run_report(const RunConfig& config);

void write_synthetic_dataset(const std::filesystem::path& csv_path,
                             const std::filesystem::path& schema_path, std::size_t n,
                             std::size_t n_groups, const PlantedSpec& planted, std::uint64_t seed);

// Loads the preprocessed dataset the audit stages operate on (the scored
// table when the score stage ran, otherwise the canonical one).
DatasetTable load_stage_dataset(const RunConfig& config);

}  // namespace oaudit
