#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oaudit/audit.hpp"
#include "oaudit/composition.hpp"
#include "oaudit/csv.hpp"
#include "oaudit/errors.hpp"
#include "oaudit/kernels.hpp"
#include "oaudit/pipeline.hpp"
#include "oaudit/sweep.hpp"
#include "oaudit/util.hpp"
#include "pipeline_detail.hpp"

namespace oaudit {

using namespace pipeline_detail;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return std::string(buf);
}

std::string fmt_pct1(double v) { return fmt("%.1f%%", v); }
std::string fmt_f3(double v) { return fmt("%.3f", v); }

constexpr const char* kDash = "—";

std::string sanitize_for_filename(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    out.push_back(ok ? c : '_');
  }
  return out;
}

OutlierAssignment load_assignment(const RunConfig& config, const DatasetTable& table) {
  const Artifacts art(config.out_dir);
  OutlierAssignment assignment;
  for (Space s : config.spaces) {
    nlohmann::json sidecar = require_sidecar(art.lof_sidecar(s), config, "detect");
    require_artifact(art.lof_csv(s), "detect");
    LofResult result = load_lof_csv(art.lof_csv(s), table.ids());
    result.config.n_neighbors = sidecar.value("n_neighbors", std::size_t{0});
    result.config.contamination = sidecar.value("contamination", 0.0);
    result.threshold = sidecar.value("threshold", 0.0);
    assignment.per_space[s] = std::move(result);
  }
  return assignment;
}

nlohmann::json wmse_to_json(const WmseResult& r) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : r.terms) {
    terms.push_back({{"type", t.toxicity_type},
                     {"model", t.model_id},
                     {"freq", t.frequency},
                     {"mse_in", t.mse_in},
                     {"mse_out", t.mse_out},
                     {"relative_diff", t.relative_diff}});
  }
  return {{"group", r.group.name},
          {"kind", group_kind_name(r.group.kind)},
          {"size", r.group_size},
          {"wmse", r.value},
          {"terms", terms},
          {"skipped", r.skipped_types}};
}

const BreakdownKind kWmseSchemas[] = {BreakdownKind::marginalized, BreakdownKind::binary,
                                      BreakdownKind::intersectional};

}  // namespace

void run_audit(const RunConfig& config) {
  const Artifacts art(config.out_dir);
  DatasetTable table = load_stage_dataset(config);
  OutlierAssignment assignment = load_assignment(config, table);

  const std::vector<std::string> models = table.model_ids();
  if (models.empty()) {
    fail(errc::config, "dataset has no model-score channels: run `oaudit score` first");
  }
  const std::vector<std::string>& types = table.toxicity_names();
  std::vector<std::string> warnings;

  nlohmann::json audit;
  audit["models"] = models;
  audit["toxicity_types"] = types;

  // Detection provenance.
  nlohmann::json detection = nlohmann::json::object();
  for (const auto& [space, result] : assignment.per_space) {
    detection[space_name(space)] = {{"n_neighbors", result.config.n_neighbors},
                                    {"contamination", result.config.contamination},
                                    {"threshold", result.threshold},
                                    {"flagged", result.flagged_count()}};
  }
  audit["provenance"] = {{"alpha", config.alpha},
                         {"min_support", config.min_support},
                         {"detection", detection},
                         {"kernel", kernels::active_kernel().name},
                         {"api_version", config.scorer ? nlohmann::json(config.scorer->api_version)
                                                       : nlohmann::json(nullptr)}};

  // Per-model WMSE for every breakdown plus the outlier groups, then the
  // percentile of each outlier group within (breakdown + outlier groups).
  nlohmann::json wmse_json = nlohmann::json::object();
  nlohmann::json percentiles = nlohmann::json::object();
  for (const auto& model : models) {
    nlohmann::json per_schema = nlohmann::json::object();

    std::vector<WmseResult> outlier_results;
    nlohmann::json outlier_json = nlohmann::json::array();
    BreakdownSchema outlier_schema = enumerate_groups(table, BreakdownKind::outlier, 0,
                                                      config.marginalized_unions, &assignment);
    for (const auto& group : outlier_schema.groups) {
      try {
        WmseResult r = wmse(table, group, {model}, types, &assignment);
        outlier_json.push_back(wmse_to_json(r));
        outlier_results.push_back(std::move(r));
      } catch (const Error& e) {
        if (e.kind() != errc::degenerate) throw;
        warnings.push_back(std::string(e.what()) + " [model " + model + "]");
      }
    }
    per_schema["outlier"] = outlier_json;

    nlohmann::json model_percentiles = nlohmann::json::object();
    for (BreakdownKind kind : kWmseSchemas) {
      const std::size_t support = kind == BreakdownKind::intersectional ? config.min_support : 0;
      BreakdownSchema schema = enumerate_groups(table, kind, support, config.marginalized_unions, &assignment);
      if (schema.groups.empty()) {
        warnings.push_back(std::string(breakdown_kind_name(kind)) +
                           " breakdown produced no groups for this schema; skipped");
        per_schema[breakdown_kind_name(kind)] = nlohmann::json::array();
        model_percentiles[breakdown_kind_name(kind)] = nlohmann::json::object();
        continue;
      }
      std::vector<WmseResult> results;
      nlohmann::json schema_json = nlohmann::json::array();
      for (const auto& group : schema.groups) {
        try {
          WmseResult r = wmse(table, group, {model}, types, &assignment);
          schema_json.push_back(wmse_to_json(r));
          results.push_back(std::move(r));
        } catch (const Error& e) {
          if (e.kind() != errc::degenerate) throw;
          warnings.push_back(std::string(e.what()) + " [model " + model + "]");
        }
      }
      per_schema[breakdown_kind_name(kind)] = schema_json;

      std::vector<double> pool;
      for (const auto& r : results) pool.push_back(r.value);
      for (const auto& r : outlier_results) pool.push_back(r.value);
      nlohmann::json schema_percentiles = nlohmann::json::object();
      for (const auto& r : outlier_results) {
        const std::string space = r.group.members[0];
        schema_percentiles[space] = percentile_rank(r.value, pool);
      }
      model_percentiles[breakdown_kind_name(kind)] = schema_percentiles;
    }
    wmse_json[model] = per_schema;
    percentiles[model] = model_percentiles;
  }
  audit["wmse"] = wmse_json;
  audit["percentiles"] = percentiles;

  // Ground-truth toxicity gaps per space and type.
  nlohmann::json gaps = nlohmann::json::object();
  for (const auto& [space, result] : assignment.per_space) {
    (void)result;
    nlohmann::json per_type = nlohmann::json::object();
    for (const auto& type : types) {
      const ToxicityGap gap = toxicity_gap(table, assignment, space, type);
      per_type[type] = {{"mean_outlier", gap.mean_in},
                        {"mean_non_outlier", gap.mean_out},
                        {"relative_pct", gap.relative_pct ? nlohmann::json(*gap.relative_pct)
                                                          : nlohmann::json(nullptr)}};
    }
    gaps[space_name(space)] = per_type;
  }
  audit["toxicity_gaps"] = gaps;

  // Chi-square significance counts across demographic groups.
  std::vector<Space> spaces;
  for (const auto& [space, result] : assignment.per_space) {
    (void)result;
    spaces.push_back(space);
  }
  const SignificanceCounts sig = count_significant_groups(table, assignment, spaces, types, config.alpha);
  nlohmann::json sig_counts = nlohmann::json::object();
  for (const auto& [key, count] : sig.counts) {
    sig_counts[key.first][key.second] = count;
  }
  nlohmann::json sig_results = nlohmann::json::array();
  for (const auto& r : sig.results) {
    if (!r.significant_after_bonferroni) continue;  // full grid is large; keep hits only
    sig_results.push_back({{"group", r.group},
                           {"type", r.toxicity_type},
                           {"space", space_name(r.space)},
                           {"chi2", r.chi2},
                           {"p", r.p_value}});
  }
  audit["significance"] = {{"alpha", sig.alpha},
                           {"bonferroni_m", sig.bonferroni_m},
                           {"undefined_tests", sig.undefined_tests},
                           {"counts", sig_counts},
                           {"significant", sig_results}};

  // MSE tables per space.
  nlohmann::json mse_tables = nlohmann::json::object();
  for (Space space : spaces) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : mse_table(table, assignment, space, models, types)) {
      rows.push_back({{"type", row.toxicity_type},
                      {"model", row.model_id},
                      {"overall_mse", row.overall_mse},
                      {"outlier_mse", row.outlier_mse},
                      {"non_outlier_mse", row.non_outlier_mse},
                      {"pct_increase",
                       row.pct_increase ? nlohmann::json(*row.pct_increase) : nlohmann::json(nullptr)}});
    }
    mse_tables[space_name(space)] = rows;
  }
  audit["mse_tables"] = mse_tables;

  // Composition per space.
  nlohmann::json composition = nlohmann::json::object();
  for (Space space : spaces) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : outlier_proportion_per_group(table, assignment, space)) {
      rows.push_back({{"group", row.group},
                      {"n_members", row.n_members},
                      {"n_outliers", row.n_outliers},
                      {"proportion", row.proportion ? nlohmann::json(*row.proportion) : nlohmann::json(nullptr)},
                      {"baseline", row.baseline}});
    }
    const IdentityCountStats ids = mean_identity_count(table, assignment, space);
    composition[space_name(space)] = {
        {"rows", rows},
        {"identity_counts",
         {{"mean_outlier", ids.mean_in}, {"mean_non_outlier", ids.mean_out}, {"p_value", ids.p_value}}}};
  }
  audit["composition"] = composition;
  audit["warnings"] = warnings;

  audit["artifact"] = "audit";
  audit["config_hash"] = config.config_hash();
  audit["seed"] = config.seed;
  write_text_file(art.audit_json, audit.dump(2) + "\n");
}

void run_sweep(const RunConfig& config) {
  const Artifacts art(config.out_dir);
  DatasetTable table = load_stage_dataset(config);
  nlohmann::json audit = require_sidecar(art.audit_json, config, "audit");

  const std::vector<double> fractions = normalize_schedule_percent(config.sweep_schedule_percent);
  const std::vector<std::string> models = audit.at("models").get<std::vector<std::string>>();
  const std::vector<std::string> types = audit.at("toxicity_types").get<std::vector<std::string>>();

  for (Space space : config.sweep_spaces) {
    require_sidecar(art.lof_sidecar(space), config, "detect");
    require_artifact(art.lof_csv(space), "detect");
    const LofResult lof = load_lof_csv(art.lof_csv(space), table.ids());

    for (const auto& model : models) {
      const SweepCurve curve = contamination_sweep(table, lof.scores, space, fractions, model, types);

      const std::string stem = "sweep_" + sanitize_for_filename(model) + "_" + space_name(space);
      CsvWriter curve_csv(art.dir / (stem + "_curve.csv"));
      curve_csv.write_row({"contamination", "group_size", "wmse"});
      for (const auto& p : curve.points) {
        curve_csv.write_row({format_double(p.contamination), std::to_string(p.group_size),
                             format_double_17(p.wmse.value)});
      }
      curve_csv.close();

      nlohmann::json sidecar_extra{{"space", space_name(space)},
                                   {"model", model},
                                   {"schedule_percent", config.sweep_schedule_percent},
                                   {"skipped_contaminations", curve.skipped_contaminations},
                                   {"points", curve.points.size()}};

      nlohmann::json verdict_summary = nlohmann::json::object();
      for (BreakdownKind kind : kWmseSchemas) {
        const auto& schema_json = audit.at("wmse").at(model).at(breakdown_kind_name(kind));
        std::vector<WmseResult> group_results;
        for (const auto& g : schema_json) {
          WmseResult r;
          r.group.name = g.at("group").get<std::string>();
          r.group_size = g.at("size").get<std::size_t>();
          r.value = g.at("wmse").get<double>();
          group_results.push_back(std::move(r));
        }
        const BelowCurveResult below = groups_below_curve(curve, group_results);

        CsvWriter verdicts(art.dir / (stem + "_verdicts_" + breakdown_kind_name(kind) + ".csv"));
        verdicts.write_row({"group", "size", "wmse", "curve_value", "verdict"});
        for (const auto& v : below.verdicts) {
          verdicts.write_row({v.group, std::to_string(v.size), format_double_17(v.wmse),
                              v.curve_value ? format_double_17(*v.curve_value) : std::string(),
                              curve_verdict_name(v.verdict)});
        }
        verdicts.close();
        verdict_summary[breakdown_kind_name(kind)] = {
            {"below", below.below}, {"above", below.above}, {"out_of_range", below.out_of_range}};
      }
      sidecar_extra["verdicts"] = verdict_summary;
      write_sidecar(art.dir / (stem + ".json"), config, "sweep", sidecar_extra);
    }
  }
}

namespace {

// Fixed presentation order for spaces.
std::vector<Space> ordered_spaces(const nlohmann::json& keyed) {
  std::vector<Space> out;
  for (Space s : kAllSpaces) {
    if (keyed.contains(space_name(s))) out.push_back(s);
  }
  return out;
}

std::string md_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) {
    out += " " + c + " |";
  }
  return out + "\n";
}

}  // namespace

void run_report(const RunConfig& config) {
  const Artifacts art(config.out_dir);
  nlohmann::json audit = require_sidecar(art.audit_json, config, "audit");
  nlohmann::json dataset_sidecar = require_sidecar(art.dataset_sidecar, config, "ingest");

  const std::vector<std::string> models = audit.at("models").get<std::vector<std::string>>();
  const std::vector<std::string> types = audit.at("toxicity_types").get<std::vector<std::string>>();
  const std::vector<Space> spaces = ordered_spaces(audit.at("toxicity_gaps"));

  // Plot-data exports.
  for (const auto& model : models) {
    for (const char* schema : {"marginalized", "binary", "intersectional", "outlier"}) {
      CsvWriter w(art.dir / ("fig_wmse_" + sanitize_for_filename(model) + "_" + schema + ".csv"));
      w.write_row({"group", "kind", "size", "wmse"});
      for (const auto& g : audit.at("wmse").at(model).at(schema)) {
        w.write_row({g.at("group").get<std::string>(), g.at("kind").get<std::string>(),
                     std::to_string(g.at("size").get<std::size_t>()),
                     format_double_17(g.at("wmse").get<double>())});
      }
      w.close();
    }
  }
  for (Space space : spaces) {
    CsvWriter w(art.dir / ("fig_outlier_proportions_" + std::string(space_name(space)) + ".csv"));
    w.write_row({"group", "n_members", "n_outliers", "proportion", "baseline"});
    for (const auto& row : audit.at("composition").at(space_name(space)).at("rows")) {
      w.write_row({row.at("group").get<std::string>(), std::to_string(row.at("n_members").get<std::size_t>()),
                   std::to_string(row.at("n_outliers").get<std::size_t>()),
                   row.at("proportion").is_null() ? std::string()
                                                  : format_double_17(row.at("proportion").get<double>()),
                   format_double_17(row.at("baseline").get<double>())});
    }
    w.close();
  }
  {
    CsvWriter w(art.dir / "fig_toxicity_gaps.csv");
    w.write_row({"space", "type", "mean_outlier", "mean_non_outlier", "relative_pct"});
    for (Space space : spaces) {
      for (const auto& type : types) {
        const auto& g = audit.at("toxicity_gaps").at(space_name(space)).at(type);
        w.write_row({space_name(space), type, format_double_17(g.at("mean_outlier").get<double>()),
                     format_double_17(g.at("mean_non_outlier").get<double>()),
                     g.at("relative_pct").is_null() ? std::string()
                                                    : format_double_17(g.at("relative_pct").get<double>())});
      }
    }
    w.close();
  }
  for (Space space : spaces) {
    CsvWriter w(art.dir / ("mse_table_" + std::string(space_name(space)) + ".csv"));
    w.write_row({"type", "model", "overall_mse", "outlier_mse", "non_outlier_mse", "pct_increase"});
    for (const auto& row : audit.at("mse_tables").at(space_name(space))) {
      w.write_row({row.at("type").get<std::string>(), row.at("model").get<std::string>(),
                   format_double_17(row.at("overall_mse").get<double>()),
                   format_double_17(row.at("outlier_mse").get<double>()),
                   format_double_17(row.at("non_outlier_mse").get<double>()),
                   row.at("pct_increase").is_null()
                       ? std::string()
                       : format_double_17(row.at("pct_increase").get<double>())});
    }
    w.close();
  }
  {
    CsvWriter w(art.dir / "significance_counts.csv");
    w.write_row({"space", "type", "significant_groups"});
    const auto& counts = audit.at("significance").at("counts");
    for (Space space : spaces) {
      if (!counts.contains(space_name(space))) continue;
      for (const auto& type : types) {
        if (!counts.at(space_name(space)).contains(type)) continue;
        w.write_row({space_name(space), type,
                     std::to_string(counts.at(space_name(space)).at(type).get<std::size_t>())});
      }
    }
    w.close();
  }
  for (const auto& model : models) {
    CsvWriter w(art.dir / ("wmse_percentiles_" + sanitize_for_filename(model) + ".csv"));
    w.write_row({"breakdown", "space", "percentile"});
    for (const char* schema : {"marginalized", "binary", "intersectional"}) {
      const auto& p = audit.at("percentiles").at(model).at(schema);
      for (Space s : spaces) {
        if (!p.contains(space_name(s))) continue;
        w.write_row({schema, space_name(s), format_double_17(p.at(space_name(s)).get<double>())});
      }
    }
    w.close();
  }

  // Markdown report.
  std::string md;
  md += "# Outlier disparity audit\n\n";
  md += "- config hash: `" + audit.at("config_hash").get<std::string>() + "`\n";
  md += "- seed: " + std::to_string(audit.at("seed").get<std::uint64_t>()) + "\n";
  md += "- rows: " + std::to_string(dataset_sidecar.at("n_rows").get<std::size_t>()) + "\n";
  md += "- distance kernel: " + audit.at("provenance").at("kernel").get<std::string>() + "\n";
  if (!audit.at("provenance").at("api_version").is_null()) {
    md += "- scorer API version: " + audit.at("provenance").at("api_version").get<std::string>() + "\n";
  }
  const auto& detection = audit.at("provenance").at("detection");
  for (Space s : ordered_spaces(detection)) {
    const auto& d = detection.at(space_name(s));
    md += std::string("- ") + space_name(s) + " detection: k=" +
          std::to_string(d.at("n_neighbors").get<std::size_t>()) +
          ", contamination=" + format_double(d.at("contamination").get<double>()) +
          ", threshold=" + fmt("%.6g", d.at("threshold").get<double>()) + ", flagged " +
          std::to_string(d.at("flagged").get<std::size_t>()) + "\n";
  }
  md += "\n";

  std::vector<std::string> space_headers;
  for (Space s : spaces) space_headers.push_back(std::string(space_name(s)) + " outliers");

  for (const auto& model : models) {
    md += "## WMSE percentile by breakdown — model `" + model + "`\n\n";
    std::vector<std::string> header{"Percentile group"};
    header.insert(header.end(), space_headers.begin(), space_headers.end());
    md += md_row(header);
    md += md_row(std::vector<std::string>(header.size(), "---"));
    for (const char* schema : {"marginalized", "binary", "intersectional"}) {
      std::vector<std::string> cells{schema};
      for (Space s : spaces) {
        const auto& p = audit.at("percentiles").at(model).at(schema);
        cells.push_back(p.contains(space_name(s)) ? fmt_pct1(p.at(space_name(s)).get<double>()) : kDash);
      }
      md += md_row(cells);
    }
    md += "\n";
  }

  md += "## Ground-truth toxicity gaps (outliers vs non-outliers)\n\n";
  {
    std::vector<std::string> header{"Toxicity type"};
    header.insert(header.end(), space_headers.begin(), space_headers.end());
    md += md_row(header);
    md += md_row(std::vector<std::string>(header.size(), "---"));
    for (const auto& type : types) {
      std::vector<std::string> cells{type};
      for (Space s : spaces) {
        const auto& g = audit.at("toxicity_gaps").at(space_name(s)).at(type);
        cells.push_back(g.at("relative_pct").is_null() ? kDash
                                                       : fmt_pct1(g.at("relative_pct").get<double>()));
      }
      md += md_row(cells);
    }
    md += "\n";
  }

  md += "## Demographic groups with significant outlier score differences\n\n";
  {
    const auto& sig = audit.at("significance");
    md += "Bonferroni over m=" + std::to_string(sig.at("bonferroni_m").get<std::size_t>()) +
          " tests at alpha=" + format_double(sig.at("alpha").get<double>()) + " (" +
          std::to_string(sig.at("undefined_tests").get<std::size_t>()) + " undefined tests excluded).\n\n";
    std::vector<std::string> header{"Toxicity type"};
    header.insert(header.end(), space_headers.begin(), space_headers.end());
    md += md_row(header);
    md += md_row(std::vector<std::string>(header.size(), "---"));
    for (const auto& type : types) {
      std::vector<std::string> cells{type};
      for (Space s : spaces) {
        const auto& counts = sig.at("counts");
        if (counts.contains(space_name(s)) && counts.at(space_name(s)).contains(type)) {
          cells.push_back(std::to_string(counts.at(space_name(s)).at(type).get<std::size_t>()));
        } else {
          cells.push_back(kDash);
        }
      }
      md += md_row(cells);
    }
    md += "\n";
  }

  for (Space s : spaces) {
    md += std::string("## Model performance by ") + space_name(s) + " outlier status\n\n";
    md += md_row({"Toxicity type", "Model", "Overall MSE", "Outlier MSE", "Non-outlier MSE", "MSE % increase"});
    md += md_row({"---", "---", "---", "---", "---", "---"});
    for (const auto& row : audit.at("mse_tables").at(space_name(s))) {
      md += md_row({row.at("type").get<std::string>(), row.at("model").get<std::string>(),
                    fmt_f3(row.at("overall_mse").get<double>()), fmt_f3(row.at("outlier_mse").get<double>()),
                    fmt_f3(row.at("non_outlier_mse").get<double>()),
                    row.at("pct_increase").is_null() ? kDash : fmt_pct1(row.at("pct_increase").get<double>())});
    }
    md += "\n";
  }

  for (Space s : spaces) {
    const auto& comp = audit.at("composition").at(space_name(s));
    md += std::string("## Outlier composition — ") + space_name(s) + " space\n\n";
    const auto& idc = comp.at("identity_counts");
    md += "Mean identities mentioned: " + fmt("%.2f", idc.at("mean_outlier").get<double>()) +
          " (outliers) vs " + fmt("%.2f", idc.at("mean_non_outlier").get<double>()) +
          " (non-outliers), Welch p=" + fmt("%.3g", idc.at("p_value").get<double>()) + ".\n\n";
    md += md_row({"Group", "Members", "Outliers", "Proportion", "Baseline"});
    md += md_row({"---", "---", "---", "---", "---"});
    for (const auto& row : comp.at("rows")) {
      md += md_row({row.at("group").get<std::string>(), std::to_string(row.at("n_members").get<std::size_t>()),
                    std::to_string(row.at("n_outliers").get<std::size_t>()),
                    row.at("proportion").is_null() ? kDash : fmt_f3(row.at("proportion").get<double>()),
                    fmt_f3(row.at("baseline").get<double>())});
    }
    md += "\n";
  }

  // Sweep summary, when that stage has run.
  bool sweep_header_written = false;
  for (Space space : config.sweep_spaces) {
    for (const auto& model : models) {
      const std::string stem = "sweep_" + sanitize_for_filename(model) + "_" + space_name(space);
      const std::filesystem::path sidecar_path = art.dir / (stem + ".json");
      if (!std::filesystem::exists(sidecar_path)) continue;
      nlohmann::json sweep = require_sidecar(sidecar_path, config, "sweep");
      if (!sweep_header_written) {
        md += "## WMSE vs outlier group size (contamination sweep)\n\n";
        sweep_header_written = true;
      }
      md += std::string("- `") + model + "` / " + space_name(space) + ": " +
            std::to_string(sweep.at("points").get<std::size_t>()) + " curve points; ";
      const auto& verdicts = sweep.at("verdicts");
      std::vector<std::string> parts;
      for (const char* schema : {"marginalized", "binary", "intersectional"}) {
        if (!verdicts.contains(schema)) continue;
        const auto& v = verdicts.at(schema);
        parts.push_back(std::string(schema) + " " + std::to_string(v.at("below").get<std::size_t>()) +
                        " below / " + std::to_string(v.at("above").get<std::size_t>()) + " above");
      }
      for (std::size_t i = 0; i < parts.size(); ++i) {
        md += parts[i];
        if (i + 1 < parts.size()) md += "; ";
      }
      md += " (see " + stem + "_curve.csv)\n";
    }
  }
  if (sweep_header_written) md += "\n";

  if (!audit.at("warnings").empty()) {
    md += "## Warnings\n\n";
    for (const auto& w : audit.at("warnings")) {
      md += "- " + w.get<std::string>() + "\n";
    }
    md += "\n";
  }

  write_text_file(art.report_md, md);
}

}  // namespace oaudit
