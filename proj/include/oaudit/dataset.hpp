#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "oaudit/matrix.hpp"

namespace oaudit {

enum class ChannelKind { toxicity_annotation, demographic_annotation, model_score };

const char* channel_kind_name(ChannelKind k);

struct AttributeChannel {
  std::string name;
  ChannelKind kind = ChannelKind::toxicity_annotation;
  std::string model_id;  // model_score only
  std::string target;    // model_score only: the annotation this score predicts

  bool is_annotation() const { return kind != ChannelKind::model_score; }
};

// Maps CSV header names onto channel roles. JSON shape:
//   {"id_column": str?, "text_column": str,
//    "toxicity_annotations": [str], "demographic_annotations": [str],
//    "model_scores": [{"column": str, "model": str, "target": str}]}
struct SchemaConfig {
  std::optional<std::string> id_column;
  std::string text_column;
  std::vector<std::string> toxicity_annotations;
  std::vector<std::string> demographic_annotations;
  struct ScoreColumn {
    std::string column;
    std::string model;
    std::string target;
  };
  std::vector<ScoreColumn> model_scores;

  static SchemaConfig from_json(const nlohmann::json& j);
  static SchemaConfig from_json_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
};

// Score channels are named "<model>:<target>".
std::string score_channel_name(const std::string& model, const std::string& target);

int binarize(double value);  // 1 iff value >= 0.5

struct Disagreement {
  double value;  // p * (1 - p)
  int flag;      // 0 iff p is exactly 0 or 1
};
Disagreement disagreement(double value);

// Columnar comment table. Immutable once the preprocessing steps have run;
// all reads are thread-safe after that.
class DatasetTable {
 public:
  static DatasetTable load_csv(const std::filesystem::path& path, const SchemaConfig& config);

  std::size_t n_rows() const { return ids_.size(); }
  const std::vector<AttributeChannel>& schema() const { return schema_; }
  const std::vector<std::string>& demographic_names() const { return demographic_names_; }
  const std::vector<std::string>& toxicity_names() const { return toxicity_names_; }
  std::vector<std::string> model_ids() const;

  bool has_channel(const std::string& name) const;
  std::size_t channel_index(const std::string& name) const;  // throws schema error
  const AttributeChannel& channel(std::size_t idx) const { return schema_[idx]; }

  std::int64_t id(std::size_t row) const { return ids_[row]; }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  const std::string& text(std::size_t row) const { return texts_[row]; }

  // NaN encodes an absent value (model-score channels only).
  double value(std::size_t row, std::size_t chan) const { return values_[chan][row]; }
  bool has_value(std::size_t row, std::size_t chan) const;
  const std::vector<double>& column(std::size_t chan) const { return values_[chan]; }

  bool binarized() const { return binarized_; }
  bool disagreement_computed() const { return disagreement_done_; }

  // 0/1; requires apply_binarize() and a present value.
  int binary(std::size_t row, std::size_t chan) const;
  double disagreement_value(std::size_t row, std::size_t chan) const;
  int disagreement_flag(std::size_t row, std::size_t chan) const;

  // Pipeline steps; each is idempotent.
  void apply_binarize();
  void apply_disagreement();

  // Per demographic channel g draws ceil(fraction * |positives(g)|) rows
  // without replacement, unions the draws, dedups by id, and returns rows in
  // ascending id order. Requires apply_binarize().
  DatasetTable stratified_sample(double fraction, std::uint64_t seed) const;

  // Drops rows whose text already appeared on a lower id.
  DatasetTable dedup_by_text() const;

  std::vector<double> demographic_vector(std::size_t row) const;
  std::vector<double> disagreement_vector(std::size_t row) const;
  Matrix demographic_matrix() const;
  Matrix disagreement_matrix() const;

  void add_score_channel(const std::string& model, const std::string& target,
                         const std::vector<double>& values_with_nan_absent);

  // Canonical dump: id, text, per-annotation name/name_bin/name_dis, then
  // per-score name/name_bin. Doubles serialize at full round-trip precision.
  void save_canonical_csv(const std::filesystem::path& path) const;
  SchemaConfig canonical_schema_config() const;
  static DatasetTable load_canonical_csv(const std::filesystem::path& path,
                                         const SchemaConfig& config);

  // Test/builder access: construct from columns. Ids must be strictly increasing.
  static DatasetTable from_columns(std::vector<std::int64_t> ids, std::vector<std::string> texts,
                                   std::vector<AttributeChannel> schema,
                                   std::vector<std::vector<double>> values);

 private:
  DatasetTable() = default;
  void index_schema();
  DatasetTable subset(const std::vector<std::size_t>& row_indices) const;

  std::vector<AttributeChannel> schema_;
  std::unordered_map<std::string, std::size_t> channel_index_;
  std::vector<std::string> demographic_names_;
  std::vector<std::string> toxicity_names_;

  std::vector<std::int64_t> ids_;
  std::vector<std::string> texts_;
  std::vector<std::vector<double>> values_;        // [channel][row], NaN = absent
  std::vector<std::vector<std::uint8_t>> binary_;  // [channel][row], 0xff = absent
  std::vector<std::vector<double>> disagreement_;  // [channel][row], annotations only

  bool binarized_ = false;
  bool disagreement_done_ = false;
};

}  // namespace oaudit
