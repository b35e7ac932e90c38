#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/common/expected.hpp"
#include "forge/meta/annotator.hpp"
#include "forge/records/ledger.hpp"
#include "forge/records/records.hpp"

namespace forge::meta {

enum class MetaFailure {
    invalid_json,
    missing_field,
    unknown_field,
    empty_field,
    no_frames,
    generation_limit,
    client_error,
};

std::string_view to_string(MetaFailure failure);

struct MetaError {
    MetaFailure code;
    std::string field;  // dotted path of the offending field, or a message

    bool operator==(const MetaError&) const = default;
};

// Leaf paths of the annotation schema, in schema order.
inline constexpr std::string_view kTopLevelFields[] = {"scene_elements", "spatial_dynamics", "action_execution"};
inline constexpr std::string_view kLeafFields[] = {
    "scene_elements.main_object",       "scene_elements.other_objects",
    "scene_elements.visual_details",    "scene_elements.environment",
    "spatial_dynamics.initial_layout",  "spatial_dynamics.spatial_change",
    "action_execution.instruction_brief", "action_execution.execution_detailed",
};

// Strict schema check. Returns the first applicable failure in the order
// invalid_json, unknown_field, missing_field, empty_field. A field of the
// wrong JSON type counts as missing. Never throws.
Expected<SceneMetaRecord, MetaError> validate_meta_text(std::string_view text, std::string annotator_id = {});

struct AgreementReport {
    std::string clip_id;
    std::map<std::string, double> agreement;  // leaf path -> [0,1]
    int annotator_count = 0;

    double min_agreement() const;
};

// Scalar leaves: size of the largest exact-match class / n.
// List leaves: mean pairwise Jaccard overlap of case-folded sets (1.0 for n = 1).
// Throws std::invalid_argument for an empty list or duplicate annotator ids.
AgreementReport cross_check(std::span<const SceneMetaRecord> records, std::string clip_id = {});

struct ExtractConfig {
    std::string prompt_id = "scene-meta-json-v1";
    std::size_t max_response_bytes = 64 * 1024;
    double min_agreement = 0.0;  // 0 disables agreement-based rejection
    bool parallel_annotators = true;
};

struct AnnotatorFailure {
    std::string annotator_id;
    MetaError error;
};

struct ExtractionOutcome {
    std::string clip_id;
    // Successful records, one per annotator, in client order.
    std::vector<SceneMetaRecord> records;
    // Present iff records is empty.
    std::optional<MetaError> failure;
    std::vector<AnnotatorFailure> annotator_failures;
    std::optional<AgreementReport> agreement;
    bool low_agreement = false;  // rejected by ExtractConfig::min_agreement

    bool ok() const { return !records.empty() && !low_agreement; }
};

// Runs every annotator once on the sampled frames and validates each response.
// An empty frame list short-circuits to no_frames without calling any client.
// When a ledger is given the clip's meta-stage outcome is recorded there.
ExtractionOutcome extract_meta(const ClipRecord& clip, std::span<const int> frames,
                               std::span<const AnnotatorClient* const> clients, const ExtractConfig& config,
                               StatusLedger* ledger = nullptr);

}  // namespace forge::meta
