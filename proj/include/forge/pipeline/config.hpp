#pragma once

// Run configuration. The on-disk format is a single JSON object; every key is
// optional and documented in docs/formats.md. Relative paths resolve against
// the directory holding the config file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/common/expected.hpp"
#include "forge/ingest/ingest.hpp"
#include "forge/meta/annotator.hpp"
#include "forge/qa/families.hpp"

namespace forge::pipeline {

enum class AnnotatorMode { stub, http };

struct AnnotatorSpec {
    AnnotatorMode mode = AnnotatorMode::stub;
    std::string id;
    std::filesystem::path fixtures;  // stub: <clip_id>.json / <clip_id>.error
    std::string endpoint;            // http
    std::string model;
    std::string auth_token;
    int timeout_seconds = 120;
};

struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path output_dir = "out";
    ingest::GateConfig gate;
    int frames_per_clip = 3;
    std::vector<AnnotatorSpec> annotators;
    std::string prompt_id = "scene-meta-json-v1";
    std::size_t max_response_bytes = 64 * 1024;
    double min_agreement = 0.0;
    std::filesystem::path depth_root;  // empty: depth withheld
    std::filesystem::path frame_root;  // defaults to the config directory
    int default_budget = 1;
    std::map<qa::QAFamily, int> budgets;  // overrides default_budget
    int max_per_clip = 64;
    std::uint64_t seed = 0;
    int workers = 1;

    int budget_for(qa::QAFamily family) const;
};

enum class ConfigErrorKind { invalid, io };

struct ConfigError {
    ConfigErrorKind kind = ConfigErrorKind::invalid;
    std::string field;
    std::string message;
};

Expected<RunConfig, ConfigError> parse_run_config(std::string_view json_text,
                                                  const std::filesystem::path& base_dir = {});
Expected<RunConfig, ConfigError> load_run_config(const std::filesystem::path& path);

// Range checks; also run by parse_run_config. Call again after CLI overrides.
std::optional<ConfigError> validate_run_config(const RunConfig& config);

// JSON echo of the effective configuration (auth tokens redacted).
std::string config_echo(const RunConfig& config);

}  // namespace forge::pipeline
