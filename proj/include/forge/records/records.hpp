#pragma once

// Shared value types of the data engine and their one-line serialized forms.
//
// Every record serializes to a single line of UTF-8 JSON with a fixed key
// order (see docs/formats.md). Parsing accepts keys in any order; serializing
// always emits the canonical order, so serialize(parse(serialize(x))) is
// byte-identical to serialize(x).

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/common/expected.hpp"

namespace forge {

inline constexpr double kQuaternionUnitTolerance = 1e-6;
inline constexpr double kDepthSentinel = -1.0;

// Unit quaternion, stored (w, x, y, z).
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const;
    bool operator==(const Quaternion&) const = default;
};

struct Pose {
    Quaternion rotation;
    std::array<double, 3> translation{0.0, 0.0, 0.0};  // meters

    bool operator==(const Pose&) const = default;
};

struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
    bool operator==(const BoundingBox&) const = default;
};

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const PixelPoint&) const = default;
};

struct ObjectGrounding {
    std::string object_id;
    std::string label;
    std::optional<PixelPoint> center_xy;
    std::optional<BoundingBox> bbox;
    // Frame the grounding was annotated on; absent means "any sampled frame".
    std::optional<int> frame_index;

    // center_xy when present, otherwise the bbox midpoint.
    PixelPoint center() const;
    bool operator==(const ObjectGrounding&) const = default;
};

// Pre-authored question/answer pair carried by the manifest for the general
// retention families (OCR, charts, science, visual logic).
struct AuxiliaryItem {
    std::string question;
    std::string answer;
    bool operator==(const AuxiliaryItem&) const = default;
};

// family name -> items
using AuxiliaryData = std::map<std::string, std::vector<AuxiliaryItem>>;

struct ClipRecord {
    std::string clip_id;
    std::string source_dataset;
    std::vector<std::string> frame_refs;
    int frame_width = 0;
    int frame_height = 0;
    std::optional<std::vector<Pose>> camera_poses;
    double quality_score = 0.0;
    std::vector<ObjectGrounding> groundings;
    AuxiliaryData auxiliary;

    bool operator==(const ClipRecord&) const = default;
};

enum class FormatErrorCode {
    malformed_line,
    missing_field,
    bad_type,
    empty_frames,
    pose_length_mismatch,
    non_unit_quaternion,
    out_of_range,
};

std::string_view to_string(FormatErrorCode code);

struct FormatError {
    FormatErrorCode code;
    std::string detail;
};

Expected<ClipRecord, FormatError> parse_clip_record(std::string_view line);
std::string serialize_clip(const ClipRecord& clip);

// ---------------------------------------------------------------------------
// Scene meta-information

struct SceneElements {
    std::string main_object;
    std::vector<std::string> other_objects;
    std::vector<std::string> visual_details;
    std::string environment;
    bool operator==(const SceneElements&) const = default;
};

struct SpatialDynamics {
    std::string initial_layout;
    std::string spatial_change;
    bool operator==(const SpatialDynamics&) const = default;
};

struct ActionExecution {
    std::string instruction_brief;
    std::string execution_detailed;
    bool operator==(const ActionExecution&) const = default;
};

struct SceneMetaRecord {
    SceneElements scene_elements;
    SpatialDynamics spatial_dynamics;
    ActionExecution action_execution;
    std::string annotator_id;

    bool operator==(const SceneMetaRecord&) const = default;
};

// The three-field annotation text, exactly as an annotator is asked to emit it.
// annotator_id is provenance and is not part of this form.
std::string serialize_meta(const SceneMetaRecord& meta);

// ---------------------------------------------------------------------------
// Depth association

enum class DepthStatus {
    success,
    npz_missing,
    image_missing,
    npz_corrupted,
    out_of_grounding,
};

std::string_view to_string(DepthStatus status);
std::optional<DepthStatus> depth_status_from_string(std::string_view name);

struct DepthXY {
    int x = -1;
    int y = -1;
    bool operator==(const DepthXY&) const = default;
};

struct DepthEntry {
    std::string label;
    double depth_meters = kDepthSentinel;
    DepthXY depth_xy;
    DepthStatus depth_status = DepthStatus::out_of_grounding;
    int frame_index = -1;  // anchor frame, -1 when no frame was consulted

    static DepthEntry success(std::string label, double meters, DepthXY xy, int frame_index);
    static DepthEntry failure(std::string label, DepthStatus status, int frame_index = -1);

    // Sentinel coupling: meters == -1 and xy == (-1,-1) exactly when status != success.
    bool satisfies_invariants() const;
    bool operator==(const DepthEntry&) const = default;
};

struct DepthInfo {
    std::map<std::string, DepthEntry> entries;  // object_id -> entry
    bool operator==(const DepthInfo&) const = default;
};

std::string serialize_depth_info(const DepthInfo& info);
Expected<DepthInfo, FormatError> parse_depth_info(std::string_view line);

// ---------------------------------------------------------------------------
// QA supervision

struct QAExample {
    std::string qa_id;
    std::string clip_id;
    std::string annotator_id;
    std::string family;
    std::string question;
    std::string answer;
    bool requires_depth = false;
    bool embodied_format = false;
    std::uint64_t generator_seed = 0;
    std::vector<std::string> object_refs;

    bool operator==(const QAExample&) const = default;
};

std::string serialize_qa(const QAExample& example);
Expected<QAExample, FormatError> parse_qa(std::string_view line);

}  // namespace forge
