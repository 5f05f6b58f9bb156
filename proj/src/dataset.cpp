#include "oaudit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "oaudit/csv.hpp"
#include "oaudit/errors.hpp"
#include "oaudit/rng.hpp"
#include "oaudit/util.hpp"

namespace oaudit {

const char* channel_kind_name(ChannelKind k) {
  switch (k) {
    case ChannelKind::toxicity_annotation: return "toxicity-annotation";
    case ChannelKind::demographic_annotation: return "demographic-annotation";
    case ChannelKind::model_score: return "model-score";
  }
  return "unknown";
}

std::string score_channel_name(const std::string& model, const std::string& target) {
  return model + ":" + target;
}

int binarize(double value) { return value >= 0.5 ? 1 : 0; }

Disagreement disagreement(double value) {
  Disagreement d;
  d.value = value * (1.0 - value);
  d.flag = (value == 0.0 || value == 1.0) ? 0 : 1;
  return d;
}

SchemaConfig SchemaConfig::from_json(const nlohmann::json& j) {
  SchemaConfig c;
  try {
    if (j.contains("id_column") && !j.at("id_column").is_null()) {
      c.id_column = j.at("id_column").get<std::string>();
    }
    c.text_column = j.at("text_column").get<std::string>();
    for (const auto& t : j.at("toxicity_annotations")) c.toxicity_annotations.push_back(t.get<std::string>());
    if (j.contains("demographic_annotations")) {
      for (const auto& d : j.at("demographic_annotations")) c.demographic_annotations.push_back(d.get<std::string>());
    }
    if (j.contains("model_scores")) {
      for (const auto& m : j.at("model_scores")) {
        c.model_scores.push_back({m.at("column").get<std::string>(), m.at("model").get<std::string>(),
                                  m.at("target").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(errc::config, std::string("bad schema config: ") + e.what());
  }
  c.validate();
  return c;
}

SchemaConfig SchemaConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open schema config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::config, "invalid JSON in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json SchemaConfig::to_json() const {
  nlohmann::json j;
  if (id_column) j["id_column"] = *id_column;
  else j["id_column"] = nullptr;
  j["text_column"] = text_column;
  j["toxicity_annotations"] = toxicity_annotations;
  j["demographic_annotations"] = demographic_annotations;
  j["model_scores"] = nlohmann::json::array();
  for (const auto& m : model_scores) {
    j["model_scores"].push_back({{"column", m.column}, {"model", m.model}, {"target", m.target}});
  }
  return j;
}

void SchemaConfig::validate() const {
  if (text_column.empty()) fail(errc::config, "schema config: text_column is required");
  if (toxicity_annotations.empty()) fail(errc::config, "schema config: at least one toxicity annotation required");
  std::unordered_set<std::string> seen;
  auto check_unique = [&](const std::string& name) {
    if (!seen.insert(name).second) fail(errc::config, "schema config: duplicate channel name '" + name + "'");
  };
  for (const auto& t : toxicity_annotations) check_unique(t);
  for (const auto& d : demographic_annotations) check_unique(d);
  std::unordered_set<std::string> tox(toxicity_annotations.begin(), toxicity_annotations.end());
  for (const auto& m : model_scores) {
    check_unique(score_channel_name(m.model, m.target));
    if (!tox.count(m.target)) {
      fail(errc::config, "schema config: model score '" + m.column + "' targets unknown toxicity annotation '" +
                             m.target + "'");
    }
  }
}

void DatasetTable::index_schema() {
  channel_index_.clear();
  demographic_names_.clear();
  toxicity_names_.clear();
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (!channel_index_.emplace(schema_[i].name, i).second) {
      fail(errc::schema, "duplicate channel name '" + schema_[i].name + "'");
    }
    if (schema_[i].kind == ChannelKind::demographic_annotation) demographic_names_.push_back(schema_[i].name);
    if (schema_[i].kind == ChannelKind::toxicity_annotation) toxicity_names_.push_back(schema_[i].name);
  }
}

bool DatasetTable::has_channel(const std::string& name) const { return channel_index_.count(name) != 0; }

std::size_t DatasetTable::channel_index(const std::string& name) const {
  auto it = channel_index_.find(name);
  if (it == channel_index_.end()) fail(errc::schema, "no channel named '" + name + "'");
  return it->second;
}

bool DatasetTable::has_value(std::size_t row, std::size_t chan) const {
  return !std::isnan(values_[chan][row]);
}

int DatasetTable::binary(std::size_t row, std::size_t chan) const {
  if (!binarized_) fail(errc::internal, "binary values requested before apply_binarize()");
  std::uint8_t b = binary_[chan][row];
  if (b == 0xff) fail(errc::domain, "absent value has no binary form (channel '" + schema_[chan].name + "')");
  return b;
}

double DatasetTable::disagreement_value(std::size_t row, std::size_t chan) const {
  if (!disagreement_done_) fail(errc::internal, "disagreement requested before apply_disagreement()");
  if (!schema_[chan].is_annotation()) {
    fail(errc::domain, "disagreement is defined only for annotation channels ('" + schema_[chan].name + "')");
  }
  return disagreement_[chan][row];
}

int DatasetTable::disagreement_flag(std::size_t row, std::size_t chan) const {
  double v = value(row, chan);
  (void)disagreement_value(row, chan);  // validates state and channel kind
  return (v == 0.0 || v == 1.0) ? 0 : 1;
}

DatasetTable DatasetTable::load_csv(const std::filesystem::path& path, const SchemaConfig& config) {
  config.validate();
  CsvTable csv = read_csv(path);

  auto require_column = [&](const std::string& name) {
    int idx = csv.column(name);
    if (idx < 0) fail(errc::schema, "missing column '" + name + "' in " + path.filename().string());
    return static_cast<std::size_t>(idx);
  };

  std::size_t text_col = require_column(config.text_column);
  std::optional<std::size_t> id_col;
  if (config.id_column) id_col = require_column(*config.id_column);

  DatasetTable table;
  struct SourceColumn {
    std::size_t csv_col;
  };
  std::vector<SourceColumn> sources;
  for (const auto& t : config.toxicity_annotations) {
    table.schema_.push_back({t, ChannelKind::toxicity_annotation, "", ""});
    sources.push_back({require_column(t)});
  }
  for (const auto& d : config.demographic_annotations) {
    table.schema_.push_back({d, ChannelKind::demographic_annotation, "", ""});
    sources.push_back({require_column(d)});
  }
  for (const auto& m : config.model_scores) {
    table.schema_.push_back({score_channel_name(m.model, m.target), ChannelKind::model_score, m.model, m.target});
    sources.push_back({require_column(m.column)});
  }
  table.index_schema();

  const std::size_t n = csv.rows.size();
  table.ids_.reserve(n);
  table.texts_.reserve(n);
  table.values_.assign(table.schema_.size(), {});
  for (auto& col : table.values_) col.reserve(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = csv.rows[r];
    const std::string row_label = "row " + std::to_string(r + 2);  // header is row 1

    std::int64_t id;
    if (id_col) {
      if (!parse_int64(row[*id_col], id)) {
        fail(errc::parse, path.filename().string() + " " + row_label + ": bad id '" + row[*id_col] + "'");
      }
    } else {
      id = static_cast<std::int64_t>(r);
    }
    if (!table.ids_.empty() && id <= table.ids_.back()) {
      fail(errc::domain, path.filename().string() + " " + row_label + ": ids must be strictly increasing (" +
                             std::to_string(id) + " after " + std::to_string(table.ids_.back()) + ")");
    }
    table.ids_.push_back(id);
    table.texts_.push_back(row[text_col]);

    for (std::size_t c = 0; c < table.schema_.size(); ++c) {
      const std::string& cell = row[sources[c].csv_col];
      const bool is_score = table.schema_[c].kind == ChannelKind::model_score;
      if (cell.empty()) {
        if (is_score) {
          table.values_[c].push_back(std::nan(""));
          continue;
        }
        fail(errc::parse, path.filename().string() + " " + row_label + ": empty cell in column '" +
                              table.schema_[c].name + "'");
      }
      double v;
      if (!parse_double(cell, v)) {
        fail(errc::parse, path.filename().string() + " " + row_label + ": cannot parse '" + cell +
                              "' in column '" + table.schema_[c].name + "'");
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        fail(errc::domain, path.filename().string() + " " + row_label + ": value " + format_double(v) +
                               " outside [0,1] in column '" + table.schema_[c].name + "'");
      }
      table.values_[c].push_back(v);
    }
  }
  return table;
}

void DatasetTable::apply_binarize() {
  if (binarized_) return;
  binary_.assign(schema_.size(), {});
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    binary_[c].resize(n_rows());
    for (std::size_t r = 0; r < n_rows(); ++r) {
      double v = values_[c][r];
      binary_[c][r] = std::isnan(v) ? std::uint8_t{0xff} : static_cast<std::uint8_t>(binarize(v));
    }
  }
  binarized_ = true;
}

void DatasetTable::apply_disagreement() {
  if (disagreement_done_) return;
  disagreement_.assign(schema_.size(), {});
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (!schema_[c].is_annotation()) continue;
    disagreement_[c].resize(n_rows());
    for (std::size_t r = 0; r < n_rows(); ++r) {
      disagreement_[c][r] = disagreement(values_[c][r]).value;
    }
  }
  disagreement_done_ = true;
}

DatasetTable DatasetTable::subset(const std::vector<std::size_t>& row_indices) const {
  DatasetTable out;
  out.schema_ = schema_;
  out.index_schema();
  out.ids_.reserve(row_indices.size());
  out.texts_.reserve(row_indices.size());
  out.values_.assign(schema_.size(), {});
  for (std::size_t r : row_indices) {
    out.ids_.push_back(ids_[r]);
    out.texts_.push_back(texts_[r]);
  }
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    out.values_[c].reserve(row_indices.size());
    for (std::size_t r : row_indices) out.values_[c].push_back(values_[c][r]);
  }
  out.binarized_ = false;
  out.disagreement_done_ = false;
  // Re-run the cheap derivation steps so the subset is self-consistent.
  if (binarized_) out.apply_binarize();
  if (disagreement_done_) out.apply_disagreement();
  return out;
}

DatasetTable DatasetTable::stratified_sample(double fraction, std::uint64_t seed) const {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(errc::config, "sample fraction must be in (0,1], got " + format_double(fraction));
  }
  if (!binarized_) fail(errc::config, "stratified_sample requires apply_binarize() first");

  std::set<std::int64_t> chosen_ids;
  for (const auto& name : demographic_names_) {
    std::size_t chan = channel_index(name);
    std::vector<std::size_t> positives;
    for (std::size_t r = 0; r < n_rows(); ++r) {
      if (binary_[chan][r] == 1) positives.push_back(r);
    }
    if (positives.empty()) continue;
    std::size_t want = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(positives.size()) - 1e-9));
    want = std::max<std::size_t>(1, std::min(want, positives.size()));

    // Partial Fisher-Yates over the positive rows; channel-keyed stream so
    // the result does not depend on channel iteration order.
    Rng rng = Rng::keyed(seed, name);
    for (std::size_t i = 0; i < want; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(positives.size() - i));
      std::swap(positives[i], positives[j]);
      chosen_ids.insert(ids_[positives[i]]);
    }
  }

  std::vector<std::size_t> rows;
  rows.reserve(chosen_ids.size());
  for (std::size_t r = 0; r < n_rows(); ++r) {
    if (chosen_ids.count(ids_[r])) rows.push_back(r);  // ascending id order by construction
  }
  return subset(rows);
}

DatasetTable DatasetTable::dedup_by_text() const {
  std::unordered_set<std::string> seen;
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < n_rows(); ++r) {
    if (seen.insert(texts_[r]).second) rows.push_back(r);
  }
  return subset(rows);
}

std::vector<double> DatasetTable::demographic_vector(std::size_t row) const {
  std::vector<double> v;
  v.reserve(demographic_names_.size());
  for (const auto& name : demographic_names_) v.push_back(values_[channel_index_.at(name)][row]);
  return v;
}

std::vector<double> DatasetTable::disagreement_vector(std::size_t row) const {
  if (!disagreement_done_) fail(errc::config, "disagreement_vector requires apply_disagreement() first");
  std::vector<double> v;
  v.reserve(toxicity_names_.size() + demographic_names_.size());
  for (const auto& name : toxicity_names_) v.push_back(disagreement_[channel_index_.at(name)][row]);
  for (const auto& name : demographic_names_) v.push_back(disagreement_[channel_index_.at(name)][row]);
  return v;
}

Matrix DatasetTable::demographic_matrix() const {
  Matrix m(n_rows(), demographic_names_.size());
  for (std::size_t j = 0; j < demographic_names_.size(); ++j) {
    const auto& col = values_[channel_index_.at(demographic_names_[j])];
    for (std::size_t r = 0; r < n_rows(); ++r) m.at(r, j) = col[r];
  }
  return m;
}

Matrix DatasetTable::disagreement_matrix() const {
  if (!disagreement_done_) fail(errc::config, "disagreement_matrix requires apply_disagreement() first");
  const std::size_t dims = toxicity_names_.size() + demographic_names_.size();
  Matrix m(n_rows(), dims);
  std::size_t j = 0;
  for (const auto& name : toxicity_names_) {
    const auto& col = disagreement_[channel_index_.at(name)];
    for (std::size_t r = 0; r < n_rows(); ++r) m.at(r, j) = col[r];
    ++j;
  }
  for (const auto& name : demographic_names_) {
    const auto& col = disagreement_[channel_index_.at(name)];
    for (std::size_t r = 0; r < n_rows(); ++r) m.at(r, j) = col[r];
    ++j;
  }
  return m;
}

void DatasetTable::add_score_channel(const std::string& model, const std::string& target,
                                     const std::vector<double>& values_with_nan_absent) {
  if (values_with_nan_absent.size() != n_rows()) {
    fail(errc::alignment, "score column length " + std::to_string(values_with_nan_absent.size()) +
                              " does not match table rows " + std::to_string(n_rows()));
  }
  bool target_ok = false;
  for (const auto& t : toxicity_names_) target_ok |= (t == target);
  if (!target_ok) fail(errc::schema, "score target '" + target + "' is not a toxicity annotation");
  const std::string name = score_channel_name(model, target);
  if (has_channel(name)) fail(errc::schema, "score channel '" + name + "' already exists");
  for (double v : values_with_nan_absent) {
    if (!std::isnan(v) && !(v >= 0.0 && v <= 1.0)) {
      fail(errc::domain, "score value " + format_double(v) + " outside [0,1] for channel '" + name + "'");
    }
  }
  schema_.push_back({name, ChannelKind::model_score, model, target});
  values_.push_back(values_with_nan_absent);
  if (binarized_) {
    std::vector<std::uint8_t> b(n_rows());
    for (std::size_t r = 0; r < n_rows(); ++r) {
      double v = values_with_nan_absent[r];
      b[r] = std::isnan(v) ? std::uint8_t{0xff} : static_cast<std::uint8_t>(binarize(v));
    }
    binary_.push_back(std::move(b));
  }
  if (disagreement_done_) disagreement_.push_back({});
  index_schema();
}

std::vector<std::string> DatasetTable::model_ids() const {
  std::vector<std::string> out;
  for (const auto& ch : schema_) {
    if (ch.kind != ChannelKind::model_score) continue;
    if (std::find(out.begin(), out.end(), ch.model_id) == out.end()) out.push_back(ch.model_id);
  }
  return out;
}

void DatasetTable::save_canonical_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  std::vector<std::string> header{"id", "text"};
  for (const auto& ch : schema_) {
    header.push_back(ch.name);
    if (binarized_) header.push_back(ch.name + "_bin");
    if (disagreement_done_ && ch.is_annotation()) header.push_back(ch.name + "_dis");
  }
  w.write_row(header);

  std::vector<std::string> row;
  for (std::size_t r = 0; r < n_rows(); ++r) {
    row.clear();
    row.push_back(std::to_string(ids_[r]));
    row.push_back(texts_[r]);
    for (std::size_t c = 0; c < schema_.size(); ++c) {
      double v = values_[c][r];
      bool absent = std::isnan(v);
      row.push_back(absent ? std::string() : format_double(v));
      if (binarized_) row.push_back(absent ? std::string() : std::to_string(binary_[c][r]));
      if (disagreement_done_ && schema_[c].is_annotation()) row.push_back(format_double(disagreement_[c][r]));
    }
    w.write_row(row);
  }
  w.close();
}

SchemaConfig DatasetTable::canonical_schema_config() const {
  SchemaConfig c;
  c.id_column = "id";
  c.text_column = "text";
  for (const auto& ch : schema_) {
    switch (ch.kind) {
      case ChannelKind::toxicity_annotation: c.toxicity_annotations.push_back(ch.name); break;
      case ChannelKind::demographic_annotation: c.demographic_annotations.push_back(ch.name); break;
      case ChannelKind::model_score: c.model_scores.push_back({ch.name, ch.model_id, ch.target}); break;
    }
  }
  return c;
}

DatasetTable DatasetTable::load_canonical_csv(const std::filesystem::path& path, const SchemaConfig& config) {
  DatasetTable t = load_csv(path, config);
  t.apply_binarize();
  t.apply_disagreement();
  return t;
}

DatasetTable DatasetTable::from_columns(std::vector<std::int64_t> ids, std::vector<std::string> texts,
                                        std::vector<AttributeChannel> schema,
                                        std::vector<std::vector<double>> values) {
  DatasetTable t;
  t.schema_ = std::move(schema);
  t.index_schema();
  t.ids_ = std::move(ids);
  t.texts_ = std::move(texts);
  t.values_ = std::move(values);
  if (t.values_.size() != t.schema_.size()) fail(errc::internal, "from_columns: column/schema count mismatch");
  for (std::size_t i = 1; i < t.ids_.size(); ++i) {
    if (t.ids_[i] <= t.ids_[i - 1]) fail(errc::domain, "from_columns: ids must be strictly increasing");
  }
  if (t.texts_.size() != t.ids_.size()) fail(errc::internal, "from_columns: text/id count mismatch");
  for (const auto& col : t.values_) {
    if (col.size() != t.ids_.size()) fail(errc::internal, "from_columns: ragged columns");
  }
  return t;
}

}  // namespace oaudit
