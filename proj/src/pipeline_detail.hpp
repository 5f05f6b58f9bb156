#pragma once

// Internal helpers shared by the pipeline stage implementations.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "oaudit/pipeline.hpp"

namespace oaudit::pipeline_detail {

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

void write_sidecar(const std::filesystem::path& path, const RunConfig& config, const std::string& artifact,
                   nlohmann::json extra);

// Loads and hash-checks a sidecar; a missing file names the command to run.
nlohmann::json require_sidecar(const std::filesystem::path& path, const RunConfig& config,
                               const std::string& prerequisite_command);
void require_artifact(const std::filesystem::path& path, const std::string& prerequisite_command);

DatasetTable load_dataset_artifact(const std::filesystem::path& csv, const nlohmann::json& sidecar);

}  // namespace oaudit::pipeline_detail
