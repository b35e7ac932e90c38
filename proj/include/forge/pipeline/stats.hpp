#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "forge/common/expected.hpp"
#include "forge/qa/families.hpp"
#include "forge/records/ledger.hpp"

namespace forge::pipeline {

struct RunManifest {
    std::size_t clips_in = 0;  // manifest lines, blank lines excluded
    std::map<Stage, StageCounts> stages;
    std::map<qa::QAFamily, std::size_t> family_counts;  // zero counts omitted
    std::size_t qa_total = 0;
    // clip_id -> stage -> "accepted" | "rejected:<reason>" | "failed:<code>"
    std::map<std::string, std::map<Stage, std::string>> clip_status;
    std::string config_json;  // echo, see config_echo
    std::map<std::string, std::string> file_digests;  // output file -> sha256 hex
    std::string digest;  // sha256 over the per-file digests in name order
    std::size_t internal_errors = 0;

    bool conserved() const;
    bool funnel_monotone() const;  // entered(k+1) == accepted(k)
};

std::string sha256_hex(std::string_view data);

// stats.json body: clip/stage/family counts only, fully deterministic.
std::string stats_json(const RunManifest& manifest);
std::string manifest_json(const RunManifest& manifest);
Expected<RunManifest, std::string> parse_manifest_json(std::string_view text);

// Per-stage funnel plus per-family counts; families with zero examples are
// left out.
std::string report_stats(const RunManifest& manifest);

}  // namespace forge::pipeline
