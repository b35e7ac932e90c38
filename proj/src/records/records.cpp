#include "forge/records/records.hpp"

#include <cmath>

#include "json_fields.hpp"

namespace forge {

using detail::fail;
using detail::FormatFailure;
using detail::Json;
using detail::OrderedJson;

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

PixelPoint ObjectGrounding::center() const {
    if (center_xy) return *center_xy;
    if (bbox) return {(bbox->x_min + bbox->x_max) / 2.0, (bbox->y_min + bbox->y_max) / 2.0};
    return {};
}

std::string_view to_string(FormatErrorCode code) {
    switch (code) {
        case FormatErrorCode::malformed_line: return "malformed_line";
        case FormatErrorCode::missing_field: return "missing_field";
        case FormatErrorCode::bad_type: return "bad_type";
        case FormatErrorCode::empty_frames: return "empty_frames";
        case FormatErrorCode::pose_length_mismatch: return "pose_length_mismatch";
        case FormatErrorCode::non_unit_quaternion: return "non_unit_quaternion";
        case FormatErrorCode::out_of_range: return "out_of_range";
    }
    return "unknown";
}

namespace {

template <std::size_t N>
std::array<double, N> number_array(const Json& v, const char* what) {
    if (!v.is_array() || v.size() != N) {
        fail(FormatErrorCode::bad_type, fmt::format("{} must be an array of {} numbers", what, N));
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!v[i].is_number()) {
            fail(FormatErrorCode::bad_type, fmt::format("{} must be an array of {} numbers", what, N));
        }
        out[i] = v[i].get<double>();
    }
    return out;
}

Pose parse_pose(const Json& v) {
    if (!v.is_object()) fail(FormatErrorCode::bad_type, "camera_poses entries must be objects");
    auto q = number_array<4>(detail::require(v, "q"), "q");
    auto t = number_array<3>(detail::require(v, "t"), "t");
    return Pose{Quaternion{q[0], q[1], q[2], q[3]}, t};
}

ObjectGrounding parse_grounding(const Json& v) {
    if (!v.is_object()) fail(FormatErrorCode::bad_type, "groundings entries must be objects");
    ObjectGrounding g;
    g.object_id = detail::get_string(v, "object_id");
    g.label = detail::get_string(v, "label");
    if (auto it = v.find("center_xy"); it != v.end() && !it->is_null()) {
        auto c = number_array<2>(*it, "center_xy");
        g.center_xy = PixelPoint{c[0], c[1]};
    }
    if (auto it = v.find("bbox"); it != v.end() && !it->is_null()) {
        auto b = number_array<4>(*it, "bbox");
        g.bbox = BoundingBox{b[0], b[1], b[2], b[3]};
    }
    if (!g.center_xy && !g.bbox) fail(FormatErrorCode::missing_field, "center_xy");
    if (auto it = v.find("frame_index"); it != v.end() && !it->is_null()) {
        if (!it->is_number_integer()) fail(FormatErrorCode::bad_type, "frame_index must be an integer");
        g.frame_index = it->get<int>();
    }
    return g;
}

void check_grounding(const ObjectGrounding& g, const ClipRecord& clip) {
    if (g.object_id.empty()) fail(FormatErrorCode::out_of_range, "grounding object_id is empty");
    if (g.bbox && (g.bbox->x_min > g.bbox->x_max || g.bbox->y_min > g.bbox->y_max)) {
        fail(FormatErrorCode::out_of_range, fmt::format("bbox of {} is inverted", g.object_id));
    }
    const PixelPoint c = g.center();
    if (!(c.x >= 0.0 && c.x < clip.frame_width && c.y >= 0.0 && c.y < clip.frame_height)) {
        fail(FormatErrorCode::out_of_range, fmt::format("center of {} lies outside the frame", g.object_id));
    }
    if (g.bbox && !g.bbox->contains(c.x, c.y)) {
        fail(FormatErrorCode::out_of_range, fmt::format("bbox of {} does not contain its center", g.object_id));
    }
    if (g.frame_index &&
        (*g.frame_index < 0 || *g.frame_index >= static_cast<int>(clip.frame_refs.size()))) {
        fail(FormatErrorCode::out_of_range, fmt::format("frame_index of {} is out of range", g.object_id));
    }
}

ClipRecord parse_clip(const Json& doc) {
    ClipRecord clip;
    clip.clip_id = detail::get_string(doc, "clip_id");
    if (clip.clip_id.empty()) fail(FormatErrorCode::out_of_range, "clip_id is empty");
    clip.source_dataset = detail::get_string(doc, "source_dataset");

    for (const Json& ref : detail::get_array(doc, "frame_refs")) {
        if (!ref.is_string()) fail(FormatErrorCode::bad_type, "frame_refs must hold strings");
        clip.frame_refs.push_back(ref.get<std::string>());
    }
    clip.frame_width = static_cast<int>(detail::get_integer(doc, "frame_width"));
    clip.frame_height = static_cast<int>(detail::get_integer(doc, "frame_height"));
    clip.quality_score = detail::get_number(doc, "quality_score");

    if (auto it = doc.find("camera_poses"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) fail(FormatErrorCode::bad_type, "camera_poses must be an array");
        std::vector<Pose> poses;
        for (const Json& p : *it) poses.push_back(parse_pose(p));
        clip.camera_poses = std::move(poses);
    }
    if (auto it = doc.find("groundings"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) fail(FormatErrorCode::bad_type, "groundings must be an array");
        for (const Json& g : *it) clip.groundings.push_back(parse_grounding(g));
    }
    if (auto it = doc.find("auxiliary"); it != doc.end() && !it->is_null()) {
        if (!it->is_object()) fail(FormatErrorCode::bad_type, "auxiliary must be an object");
        for (const auto& [family, items] : it->items()) {
            if (!items.is_array()) fail(FormatErrorCode::bad_type, "auxiliary entries must be arrays");
            auto& out = clip.auxiliary[family];
            for (const Json& item : items) {
                if (!item.is_object()) fail(FormatErrorCode::bad_type, "auxiliary items must be objects");
                out.push_back({detail::get_string(item, "question"), detail::get_string(item, "answer")});
            }
        }
    }

    // Semantic checks, in documented order.
    if (clip.frame_refs.empty()) fail(FormatErrorCode::empty_frames, "frame_refs is empty");
    if (clip.frame_width <= 0 || clip.frame_height <= 0) {
        fail(FormatErrorCode::out_of_range, "frame dimensions must be positive");
    }
    if (!(clip.quality_score >= 0.0 && clip.quality_score <= 1.0)) {
        fail(FormatErrorCode::out_of_range, "quality_score must lie in [0,1]");
    }
    if (clip.camera_poses) {
        if (clip.camera_poses->size() != clip.frame_refs.size()) {
            fail(FormatErrorCode::pose_length_mismatch,
                 fmt::format("{} poses for {} frames", clip.camera_poses->size(), clip.frame_refs.size()));
        }
        for (std::size_t i = 0; i < clip.camera_poses->size(); ++i) {
            const double n = (*clip.camera_poses)[i].rotation.norm();
            if (!(std::abs(n - 1.0) <= kQuaternionUnitTolerance)) {
                fail(FormatErrorCode::non_unit_quaternion, fmt::format("pose {} has norm {}", i, n));
            }
        }
    }
    for (const auto& g : clip.groundings) check_grounding(g, clip);
    return clip;
}

template <class Fn>
auto guarded(Fn&& fn) -> Expected<decltype(fn()), FormatError> {
    try {
        return fn();
    } catch (const FormatFailure& f) {
        return Unexpected(FormatError{f.code, f.detail});
    } catch (const Json::exception& e) {
        return Unexpected(FormatError{FormatErrorCode::bad_type, e.what()});
    }
}

}  // namespace

Expected<ClipRecord, FormatError> parse_clip_record(std::string_view line) {
    return guarded([&] { return parse_clip(detail::parse_object_line(line)); });
}

std::string serialize_clip(const ClipRecord& clip) {
    OrderedJson doc;
    doc["clip_id"] = clip.clip_id;
    doc["source_dataset"] = clip.source_dataset;
    doc["frame_refs"] = clip.frame_refs;
    doc["frame_width"] = clip.frame_width;
    doc["frame_height"] = clip.frame_height;
    if (clip.camera_poses) {
        OrderedJson poses = OrderedJson::array();
        for (const auto& p : *clip.camera_poses) {
            OrderedJson pose;
            pose["q"] = {p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z};
            pose["t"] = p.translation;
            poses.push_back(std::move(pose));
        }
        doc["camera_poses"] = std::move(poses);
    }
    doc["quality_score"] = clip.quality_score;
    OrderedJson groundings = OrderedJson::array();
    for (const auto& g : clip.groundings) {
        OrderedJson item;
        item["object_id"] = g.object_id;
        item["label"] = g.label;
        if (g.center_xy) item["center_xy"] = {g.center_xy->x, g.center_xy->y};
        if (g.bbox) item["bbox"] = {g.bbox->x_min, g.bbox->y_min, g.bbox->x_max, g.bbox->y_max};
        if (g.frame_index) item["frame_index"] = *g.frame_index;
        groundings.push_back(std::move(item));
    }
    doc["groundings"] = std::move(groundings);
    if (!clip.auxiliary.empty()) {
        OrderedJson aux = OrderedJson::object();
        for (const auto& [family, items] : clip.auxiliary) {
            OrderedJson list = OrderedJson::array();
            for (const auto& item : items) {
                list.push_back(OrderedJson{{"question", item.question}, {"answer", item.answer}});
            }
            aux[family] = std::move(list);
        }
        doc["auxiliary"] = std::move(aux);
    }
    return detail::dump_line(doc);
}

std::string serialize_meta(const SceneMetaRecord& meta) {
    OrderedJson doc;
    doc["scene_elements"]["main_object"] = meta.scene_elements.main_object;
    doc["scene_elements"]["other_objects"] = meta.scene_elements.other_objects;
    doc["scene_elements"]["visual_details"] = meta.scene_elements.visual_details;
    doc["scene_elements"]["environment"] = meta.scene_elements.environment;
    doc["spatial_dynamics"]["initial_layout"] = meta.spatial_dynamics.initial_layout;
    doc["spatial_dynamics"]["spatial_change"] = meta.spatial_dynamics.spatial_change;
    doc["action_execution"]["instruction_brief"] = meta.action_execution.instruction_brief;
    doc["action_execution"]["execution_detailed"] = meta.action_execution.execution_detailed;
    return detail::dump_line(doc);
}

// ---------------------------------------------------------------------------

std::string_view to_string(DepthStatus status) {
    switch (status) {
        case DepthStatus::success: return "success";
        case DepthStatus::npz_missing: return "npz_missing";
        case DepthStatus::image_missing: return "image_missing";
        case DepthStatus::npz_corrupted: return "npz_corrupted";
        case DepthStatus::out_of_grounding: return "out_of_grounding";
    }
    return "unknown";
}

std::optional<DepthStatus> depth_status_from_string(std::string_view name) {
    for (auto s : {DepthStatus::success, DepthStatus::npz_missing, DepthStatus::image_missing,
                   DepthStatus::npz_corrupted, DepthStatus::out_of_grounding}) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

DepthEntry DepthEntry::success(std::string label, double meters, DepthXY xy, int frame_index) {
    return DepthEntry{std::move(label), meters, xy, DepthStatus::success, frame_index};
}

DepthEntry DepthEntry::failure(std::string label, DepthStatus status, int frame_index) {
    return DepthEntry{std::move(label), kDepthSentinel, DepthXY{-1, -1}, status, frame_index};
}

bool DepthEntry::satisfies_invariants() const {
    const bool sentinel = depth_meters == kDepthSentinel && depth_xy == DepthXY{-1, -1};
    if (depth_status == DepthStatus::success) {
        return depth_meters > 0.0 && std::isfinite(depth_meters) && depth_xy.x >= 0 && depth_xy.y >= 0;
    }
    return sentinel;
}

std::string serialize_depth_info(const DepthInfo& info) {
    OrderedJson entries = OrderedJson::object();
    for (const auto& [id, e] : info.entries) {
        OrderedJson item;
        item["label"] = e.label;
        item["depth_meters"] = e.depth_meters;
        item["depth_xy"] = {e.depth_xy.x, e.depth_xy.y};
        item["depth_status"] = std::string(to_string(e.depth_status));
        item["frame_index"] = e.frame_index;
        entries[id] = std::move(item);
    }
    OrderedJson doc;
    doc["entries"] = std::move(entries);
    return detail::dump_line(doc);
}

Expected<DepthInfo, FormatError> parse_depth_info(std::string_view line) {
    return guarded([&] {
        Json doc = detail::parse_object_line(line);
        DepthInfo info;
        for (const auto& [id, item] : detail::get_object(doc, "entries").items()) {
            if (!item.is_object()) fail(FormatErrorCode::bad_type, "depth entries must be objects");
            DepthEntry e;
            e.label = detail::get_string(item, "label");
            e.depth_meters = detail::get_number(item, "depth_meters");
            const Json& xy = detail::get_array(item, "depth_xy");
            if (xy.size() != 2 || !xy[0].is_number_integer() || !xy[1].is_number_integer()) {
                fail(FormatErrorCode::bad_type, "depth_xy must be two integers");
            }
            e.depth_xy = DepthXY{xy[0].get<int>(), xy[1].get<int>()};
            auto status = depth_status_from_string(detail::get_string(item, "depth_status"));
            if (!status) fail(FormatErrorCode::out_of_range, "unknown depth_status");
            e.depth_status = *status;
            e.frame_index = static_cast<int>(detail::get_integer(item, "frame_index"));
            if (!e.satisfies_invariants()) {
                fail(FormatErrorCode::out_of_range, fmt::format("depth entry {} violates sentinel coupling", id));
            }
            info.entries.emplace(id, std::move(e));
        }
        return info;
    });
}

// ---------------------------------------------------------------------------

std::string serialize_qa(const QAExample& ex) {
    OrderedJson doc;
    doc["qa_id"] = ex.qa_id;
    doc["clip_id"] = ex.clip_id;
    doc["annotator_id"] = ex.annotator_id;
    doc["family"] = ex.family;
    doc["question"] = ex.question;
    doc["answer"] = ex.answer;
    doc["requires_depth"] = ex.requires_depth;
    doc["embodied_format"] = ex.embodied_format;
    doc["generator_seed"] = ex.generator_seed;
    doc["object_refs"] = ex.object_refs;
    return detail::dump_line(doc);
}

Expected<QAExample, FormatError> parse_qa(std::string_view line) {
    return guarded([&] {
        Json doc = detail::parse_object_line(line);
        QAExample ex;
        ex.qa_id = detail::get_string(doc, "qa_id");
        ex.clip_id = detail::get_string(doc, "clip_id");
        ex.annotator_id = detail::get_string(doc, "annotator_id");
        ex.family = detail::get_string(doc, "family");
        ex.question = detail::get_string(doc, "question");
        ex.answer = detail::get_string(doc, "answer");
        ex.requires_depth = detail::get_bool(doc, "requires_depth");
        ex.embodied_format = detail::get_bool(doc, "embodied_format");
        const Json& seed = detail::require(doc, "generator_seed");
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
            fail(FormatErrorCode::bad_type, "generator_seed must be a non-negative integer");
        }
        ex.generator_seed = seed.get<std::uint64_t>();
        for (const Json& ref : detail::get_array(doc, "object_refs")) {
            if (!ref.is_string()) fail(FormatErrorCode::bad_type, "object_refs must hold strings");
            ex.object_refs.push_back(ref.get<std::string>());
        }
        return ex;
    });
}

}  // namespace forge
