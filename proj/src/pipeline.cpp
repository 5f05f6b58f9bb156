#include "oaudit/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "oaudit/embed.hpp"
#include "oaudit/errors.hpp"
#include "oaudit/parallel.hpp"
#include "oaudit/util.hpp"
#include "pipeline_detail.hpp"

namespace oaudit {

namespace pipeline_detail {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::config, "invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::io, "cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (out.fail()) fail(errc::io, "write failure on " + path.string());
}

void write_sidecar(const std::filesystem::path& path, const RunConfig& config, const std::string& artifact,
                   nlohmann::json extra) {
  extra["artifact"] = artifact;
  extra["config_hash"] = config.config_hash();
  extra["seed"] = config.seed;
  write_text_file(path, extra.dump(2) + "\n");
}

nlohmann::json require_sidecar(const std::filesystem::path& path, const RunConfig& config,
                               const std::string& prerequisite_command) {
  if (!std::filesystem::exists(path)) {
    fail(errc::config, "missing artifact " + path.string() + ": run `oaudit " + prerequisite_command + "` first");
  }
  nlohmann::json j = read_json_file(path);
  const std::string h = j.value("config_hash", "");
  if (h != config.config_hash()) {
    fail(errc::config, path.string() + " was produced by a different configuration (hash " + h +
                           ", current " + config.config_hash() + "); re-run the pipeline");
  }
  return j;
}

void require_artifact(const std::filesystem::path& path, const std::string& prerequisite_command) {
  if (!std::filesystem::exists(path)) {
    fail(errc::config, "missing artifact " + path.string() + ": run `oaudit " + prerequisite_command + "` first");
  }
}

DatasetTable load_dataset_artifact(const std::filesystem::path& csv, const nlohmann::json& sidecar) {
  const SchemaConfig schema = SchemaConfig::from_json(sidecar.at("schema_config"));
  return DatasetTable::load_canonical_csv(csv, schema);
}

}  // namespace pipeline_detail

using namespace pipeline_detail;

namespace {

std::filesystem::path resolve_against(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& config_json) {
  return from_json(read_json_file(config_json), config_json.parent_path());
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    if (j.contains("dataset")) c.dataset_path = resolve_against(base_dir, j.at("dataset").get<std::string>());
    if (j.contains("schema")) c.schema_path = resolve_against(base_dir, j.at("schema").get<std::string>());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output")) c.out_dir = resolve_against(base_dir, j.at("output").get<std::string>());
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();

    if (j.contains("ingest")) {
      const auto& ing = j.at("ingest");
      if (ing.contains("sample_fraction") && !ing.at("sample_fraction").is_null()) {
        c.sample_fraction = ing.at("sample_fraction").get<double>();
      }
      if (ing.contains("dedup_text")) c.dedup_text = ing.at("dedup_text").get<bool>();
    }
    if (j.contains("embedding")) {
      const auto& emb = j.at("embedding");
      if (emb.contains("dim")) c.embed_dim = emb.at("dim").get<std::size_t>();
      if (emb.contains("min_df")) c.embed_min_df = emb.at("min_df").get<std::uint32_t>();
      if (emb.contains("external_path") && !emb.at("external_path").is_null()) {
        c.external_embeddings = resolve_against(base_dir, emb.at("external_path").get<std::string>());
      }
    }
    if (j.contains("outliers")) {
      const auto& out = j.at("outliers");
      if (out.contains("contamination")) c.contamination = out.at("contamination").get<double>();
      if (out.contains("n_neighbors") && !out.at("n_neighbors").is_null()) {
        c.n_neighbors = out.at("n_neighbors").get<std::size_t>();
      }
      if (out.contains("spaces")) {
        c.spaces.clear();
        for (const auto& s : out.at("spaces")) c.spaces.push_back(space_from_string(s.get<std::string>()));
      }
      if (out.contains("per_space")) {
        for (const auto& [name, ov] : out.at("per_space").items()) {
          SpaceOverride o;
          if (ov.contains("n_neighbors") && !ov.at("n_neighbors").is_null()) {
            o.n_neighbors = ov.at("n_neighbors").get<std::size_t>();
          }
          if (ov.contains("contamination") && !ov.at("contamination").is_null()) {
            o.contamination = ov.at("contamination").get<double>();
          }
          c.space_overrides[space_from_string(name)] = o;
        }
      }
    }
    if (j.contains("breakdowns")) {
      const auto& br = j.at("breakdowns");
      if (br.contains("min_support")) c.min_support = br.at("min_support").get<std::size_t>();
      if (br.contains("marginalized")) {
        c.marginalized_unions.clear();
        for (const auto& [name, members] : br.at("marginalized").items()) {
          std::vector<std::string> channels;
          for (const auto& m : members) channels.push_back(m.get<std::string>());
          c.marginalized_unions.emplace_back(name, std::move(channels));
        }
      }
    }
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("sweep")) {
      const auto& sw = j.at("sweep");
      if (sw.contains("schedule_percent")) {
        c.sweep_schedule_percent.clear();
        for (const auto& v : sw.at("schedule_percent")) c.sweep_schedule_percent.push_back(v.get<double>());
      }
      if (sw.contains("spaces")) {
        c.sweep_spaces.clear();
        for (const auto& s : sw.at("spaces")) c.sweep_spaces.push_back(space_from_string(s.get<std::string>()));
      }
    }
    if (j.contains("scorer") && !j.at("scorer").is_null()) {
      const auto& sc = j.at("scorer");
      ScorerEndpointConfig e;
      e.base_url = sc.at("base_url").get<std::string>();
      if (sc.contains("request_path")) e.request_path = sc.at("request_path").get<std::string>();
      if (sc.contains("model_id")) e.model_id = sc.at("model_id").get<std::string>();
      if (sc.contains("api_version")) e.api_version = sc.at("api_version").get<std::string>();
      if (sc.contains("attribute_map")) {
        for (const auto& [local, remote] : sc.at("attribute_map").items()) {
          e.attribute_map[local] = remote.get<std::string>();
        }
      }
      if (sc.contains("requests_per_second")) e.requests_per_second = sc.at("requests_per_second").get<double>();
      if (sc.contains("max_retries")) e.max_retries = sc.at("max_retries").get<int>();
      if (sc.contains("timeout_seconds")) e.timeout_seconds = sc.at("timeout_seconds").get<double>();
      if (sc.contains("backoff_base_seconds")) e.backoff_base_seconds = sc.at("backoff_base_seconds").get<double>();
      c.scorer = std::move(e);
    }
    if (j.contains("cache")) c.cache_path = resolve_against(base_dir, j.at("cache").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(errc::config, std::string("bad run config: ") + e.what());
  }

  std::sort(c.marginalized_unions.begin(), c.marginalized_unions.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (c.spaces.empty()) fail(errc::config, "run config: outliers.spaces must not be empty");
  return c;
}

nlohmann::json RunConfig::resolved_json() const {
  nlohmann::json j;
  j["dataset"] = dataset_path.string();
  j["schema"] = schema_path.string();
  j["seed"] = seed;
  j["output"] = out_dir.string();
  j["threads"] = threads;
  j["ingest"] = {{"sample_fraction", sample_fraction ? nlohmann::json(*sample_fraction) : nlohmann::json(nullptr)},
                 {"dedup_text", dedup_text}};
  j["embedding"] = {
      {"dim", embed_dim},
      {"min_df", embed_min_df},
      {"external_path", external_embeddings ? nlohmann::json(external_embeddings->string()) : nlohmann::json(nullptr)}};
  nlohmann::json spaces_json = nlohmann::json::array();
  for (Space s : spaces) spaces_json.push_back(space_name(s));
  nlohmann::json per_space = nlohmann::json::object();
  for (const auto& [s, ov] : space_overrides) {
    per_space[space_name(s)] = {
        {"n_neighbors", ov.n_neighbors ? nlohmann::json(*ov.n_neighbors) : nlohmann::json(nullptr)},
        {"contamination", ov.contamination ? nlohmann::json(*ov.contamination) : nlohmann::json(nullptr)}};
  }
  j["outliers"] = {{"contamination", contamination},
                   {"n_neighbors", n_neighbors ? nlohmann::json(*n_neighbors) : nlohmann::json(nullptr)},
                   {"spaces", spaces_json},
                   {"per_space", per_space}};
  nlohmann::json unions = nlohmann::json::object();
  for (const auto& [name, members] : marginalized_unions) unions[name] = members;
  j["breakdowns"] = {{"min_support", min_support}, {"marginalized", unions}};
  j["alpha"] = alpha;
  nlohmann::json sweep_spaces_json = nlohmann::json::array();
  for (Space s : sweep_spaces) sweep_spaces_json.push_back(space_name(s));
  j["sweep"] = {{"schedule_percent", sweep_schedule_percent}, {"spaces", sweep_spaces_json}};
  if (scorer) {
    j["scorer"] = {{"base_url", scorer->base_url},
                   {"request_path", scorer->request_path},
                   {"model_id", scorer->model_id},
                   {"api_version", scorer->api_version},
                   {"attribute_map", scorer->attribute_map},
                   {"requests_per_second", scorer->requests_per_second},
                   {"max_retries", scorer->max_retries},
                   {"timeout_seconds", scorer->timeout_seconds},
                   {"backoff_base_seconds", scorer->backoff_base_seconds}};
  } else {
    j["scorer"] = nullptr;
  }
  j["cache"] = cache_path.string();
  return j;
}

std::string RunConfig::config_hash() const {
  nlohmann::json j = resolved_json();
  j.erase("output");
  j.erase("threads");
  return to_hex(fnv1a64(j.dump()));
}

OutlierConfig RunConfig::outlier_config(Space s) const {
  OutlierConfig oc;
  oc.space = s;
  oc.contamination = contamination;
  oc.n_neighbors = n_neighbors.value_or(0);
  auto it = space_overrides.find(s);
  if (it != space_overrides.end()) {
    if (it->second.n_neighbors) oc.n_neighbors = *it->second.n_neighbors;
    if (it->second.contamination) oc.contamination = *it->second.contamination;
  }
  return oc;
}

Artifacts::Artifacts(const std::filesystem::path& out_dir)
    : dir(out_dir),
      dataset_csv(out_dir / "dataset.csv"),
      dataset_sidecar(out_dir / "dataset.json"),
      scored_csv(out_dir / "dataset_scored.csv"),
      scored_sidecar(out_dir / "dataset_scored.json"),
      embeddings(out_dir / "embeddings.embd"),
      embeddings_sidecar(out_dir / "embeddings.json"),
      audit_json(out_dir / "audit.json"),
      report_md(out_dir / "report.md") {}

std::filesystem::path Artifacts::lof_csv(Space s) const {
  return dir / ("lof_" + std::string(space_name(s)) + ".csv");
}

std::filesystem::path Artifacts::lof_sidecar(Space s) const {
  return dir / ("lof_" + std::string(space_name(s)) + ".json");
}

void run_ingest(const RunConfig& config) {
  if (config.dataset_path.empty() || config.schema_path.empty()) {
    fail(errc::config, "run config must name dataset and schema paths for ingest");
  }
  const Artifacts art(config.out_dir);
  std::filesystem::create_directories(art.dir);

  const SchemaConfig schema = SchemaConfig::from_json_file(config.schema_path);
  DatasetTable table = DatasetTable::load_csv(config.dataset_path, schema);
  table.apply_binarize();
  table.apply_disagreement();
  if (config.sample_fraction) table = table.stratified_sample(*config.sample_fraction, config.seed);
  if (config.dedup_text) table = table.dedup_by_text();

  table.save_canonical_csv(art.dataset_csv);
  write_sidecar(art.dataset_sidecar, config, "dataset",
                {{"n_rows", table.n_rows()},
                 {"schema_config", table.canonical_schema_config().to_json()},
                 {"sampled", config.sample_fraction.has_value()},
                 {"dedup_text", config.dedup_text}});
}

DatasetTable load_stage_dataset(const RunConfig& config) {
  const Artifacts art(config.out_dir);
  if (std::filesystem::exists(art.scored_csv)) {
    nlohmann::json sidecar = require_sidecar(art.scored_sidecar, config, "score");
    return load_dataset_artifact(art.scored_csv, sidecar);
  }
  nlohmann::json sidecar = require_sidecar(art.dataset_sidecar, config, "ingest");
  require_artifact(art.dataset_csv, "ingest");
  return load_dataset_artifact(art.dataset_csv, sidecar);
}

void run_embed(const RunConfig& config) {
  const Artifacts art(config.out_dir);
  nlohmann::json sidecar = require_sidecar(art.dataset_sidecar, config, "ingest");
  require_artifact(art.dataset_csv, "ingest");
  DatasetTable table = load_dataset_artifact(art.dataset_csv, sidecar);

  EmbeddingMatrix matrix;
  if (config.external_embeddings) {
    matrix = load_embeddings(*config.external_embeddings, table.n_rows());
  } else {
    matrix = embed_corpus(table, config.embed_dim, config.seed, config.embed_min_df,
                          resolve_threads(config.threads));
  }
  save_embeddings(matrix, art.embeddings);
  write_sidecar(art.embeddings_sidecar, config, "embeddings",
                {{"rows", matrix.rows},
                 {"dim", matrix.dim},
                 {"source", matrix.source == EmbeddingSource::builtin ? "builtin" : "external"},
                 {"min_df", config.embed_min_df}});
}

namespace {

void save_scored(const RunConfig& config, const DatasetTable& table) {
  const Artifacts art(config.out_dir);
  table.save_canonical_csv(art.scored_csv);
  write_sidecar(art.scored_sidecar, config, "dataset_scored",
                {{"n_rows", table.n_rows()},
                 {"schema_config", table.canonical_schema_config().to_json()},
                 {"models", table.model_ids()}});
}

}  // namespace

void run_score_fetch(const RunConfig& config, FetchOutcome* outcome) {
  if (!config.scorer) fail(errc::config, "run config has no scorer endpoint section");
  ScorerEndpointConfig endpoint = *config.scorer;
  if (endpoint.api_key.empty()) {
    const char* key = std::getenv("SCORER_API_KEY");
    if (key != nullptr) endpoint.api_key = key;
  }
  DatasetTable table = load_stage_dataset(config);
  DatasetTable scored = fetch_scores(table, endpoint, config.cache_path, outcome);
  save_scored(config, scored);
}

void run_score_import(const RunConfig& config, const std::filesystem::path& scores_csv,
                      const std::string& model_id) {
  DatasetTable table = load_stage_dataset(config);
  DatasetTable scored = import_scores(table, scores_csv, model_id);
  save_scored(config, scored);
}

void run_detect(const RunConfig& config) {
  const Artifacts art(config.out_dir);
  nlohmann::json sidecar = require_sidecar(art.dataset_sidecar, config, "ingest");
  require_artifact(art.dataset_csv, "ingest");
  DatasetTable table = load_dataset_artifact(art.dataset_csv, sidecar);

  bool wants_text = false;
  for (Space s : config.spaces) wants_text |= (s == Space::text);
  EmbeddingMatrix embeddings;
  if (wants_text) {
    require_sidecar(art.embeddings_sidecar, config, "embed");
    require_artifact(art.embeddings, "embed");
    embeddings = load_embeddings(art.embeddings, table.n_rows());
  }

  std::vector<OutlierConfig> configs;
  for (Space s : config.spaces) configs.push_back(config.outlier_config(s));
  OutlierAssignment assignment =
      detect_outliers(table, wants_text ? &embeddings : nullptr, configs, resolve_threads(config.threads));

  for (const auto& [space, result] : assignment.per_space) {
    save_lof_csv(result, table.ids(), art.lof_csv(space));
    write_sidecar(art.lof_sidecar(space), config, "lof",
                  {{"space", space_name(space)},
                   {"n", table.n_rows()},
                   {"n_neighbors", result.config.n_neighbors},
                   {"contamination", result.config.contamination},
                   {"threshold", result.threshold},
                   {"flagged", result.flagged_count()}});
  }
}

void write_synthetic_dataset(const std::filesystem::path& csv_path,
                             const std::filesystem::path& schema_path, std::size_t n,
                             std::size_t n_groups, const PlantedSpec& planted, std::uint64_t seed) {
  DatasetTable table = generate_synthetic(n, n_groups, planted, seed);
  if (!csv_path.parent_path().empty()) std::filesystem::create_directories(csv_path.parent_path());
  table.save_canonical_csv(csv_path);
  nlohmann::json schema = table.canonical_schema_config().to_json();
  schema["generator"] = {{"n", n},
                         {"n_groups", n_groups},
                         {"planted_group", planted.group},
                         {"prevalence", planted.prevalence},
                         {"inflation", planted.inflation},
                         {"seed", seed}};
  write_text_file(schema_path, schema.dump(2) + "\n");
}

}  // namespace oaudit
