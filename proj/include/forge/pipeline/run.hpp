#pragma once

#include <memory>
#include <string>
#include <vector>

#include "forge/common/expected.hpp"
#include "forge/meta/annotator.hpp"
#include "forge/pipeline/config.hpp"
#include "forge/pipeline/stats.hpp"
#include "forge/records/ledger.hpp"
#include "forge/records/records.hpp"

namespace forge::pipeline {

struct RunOutputs {
    std::vector<QAExample> qa;       // clip_id order, then render order
    std::vector<LedgerEntry> ledger; // clip_id order, then stage order
    RunManifest manifest;
};

enum class RunErrorKind { startup, output };

struct RunError {
    RunErrorKind kind;
    std::string message;
};

std::vector<std::unique_ptr<meta::AnnotatorClient>> make_annotators(const RunConfig& config);

// Pure in-memory run over manifest lines; never touches the output directory.
RunOutputs execute(const RunConfig& config, const std::vector<std::string>& manifest_lines,
                   const std::vector<const meta::AnnotatorClient*>& clients);

// Reads the manifest, runs, writes qa.jsonl, ledger.jsonl, stats.json and
// manifest.json under config.output_dir.
Expected<RunManifest, RunError> run_pipeline(const RunConfig& config);

}  // namespace forge::pipeline
