#include "forge/meta/meta.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace forge::meta {

using Json = nlohmann::json;

std::string_view to_string(MetaFailure failure) {
    switch (failure) {
        case MetaFailure::invalid_json: return "invalid_json";
        case MetaFailure::missing_field: return "missing_field";
        case MetaFailure::unknown_field: return "unknown_field";
        case MetaFailure::empty_field: return "empty_field";
        case MetaFailure::no_frames: return "no_frames";
        case MetaFailure::generation_limit: return "generation_limit";
        case MetaFailure::client_error: return "client_error";
    }
    return "unknown";
}

namespace {

enum class LeafKind { text, list };

struct LeafSpec {
    const char* top;
    const char* leaf;
    LeafKind kind;
};

constexpr LeafSpec kSchema[] = {
    {"scene_elements", "main_object", LeafKind::text},
    {"scene_elements", "other_objects", LeafKind::list},
    {"scene_elements", "visual_details", LeafKind::list},
    {"scene_elements", "environment", LeafKind::text},
    {"spatial_dynamics", "initial_layout", LeafKind::text},
    {"spatial_dynamics", "spatial_change", LeafKind::text},
    {"action_execution", "instruction_brief", LeafKind::text},
    {"action_execution", "execution_detailed", LeafKind::text},
};

bool is_known_top(const std::string& key) {
    return std::any_of(std::begin(kTopLevelFields), std::end(kTopLevelFields),
                       [&](std::string_view top) { return top == key; });
}

bool is_known_leaf(const std::string& top, const std::string& key) {
    return std::any_of(std::begin(kSchema), std::end(kSchema),
                       [&](const LeafSpec& s) { return top == s.top && key == s.leaf; });
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

bool leaf_has_type(const Json& v, LeafKind kind) {
    if (kind == LeafKind::text) return v.is_string();
    return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_string(); });
}

bool leaf_is_empty(const Json& v, LeafKind kind) {
    if (kind == LeafKind::text) return blank(v.get_ref<const std::string&>());
    if (v.empty()) return true;
    return std::any_of(v.begin(), v.end(), [](const Json& e) { return blank(e.get_ref<const std::string&>()); });
}

std::string path(const char* top, const char* leaf) { return fmt::format("{}.{}", top, leaf); }

}  // namespace

Expected<SceneMetaRecord, MetaError> validate_meta_text(std::string_view text, std::string annotator_id) {
    Json doc = Json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        return Unexpected(MetaError{MetaFailure::invalid_json, "response is not a JSON object"});
    }

    for (const auto& [key, value] : doc.items()) {
        if (!is_known_top(key)) return Unexpected(MetaError{MetaFailure::unknown_field, key});
        if (!value.is_object()) continue;
        for (const auto& [leaf, ignored] : value.items()) {
            if (!is_known_leaf(key, leaf)) {
                return Unexpected(MetaError{MetaFailure::unknown_field, fmt::format("{}.{}", key, leaf)});
            }
        }
    }

    for (std::string_view top : kTopLevelFields) {
        auto it = doc.find(std::string(top));
        if (it == doc.end() || !it->is_object()) {
            return Unexpected(MetaError{MetaFailure::missing_field, std::string(top)});
        }
    }
    for (const auto& spec : kSchema) {
        const Json& obj = doc[spec.top];
        auto it = obj.find(spec.leaf);
        if (it == obj.end() || !leaf_has_type(*it, spec.kind)) {
            return Unexpected(MetaError{MetaFailure::missing_field, path(spec.top, spec.leaf)});
        }
    }
    for (const auto& spec : kSchema) {
        if (leaf_is_empty(doc[spec.top][spec.leaf], spec.kind)) {
            return Unexpected(MetaError{MetaFailure::empty_field, path(spec.top, spec.leaf)});
        }
    }

    SceneMetaRecord rec;
    const Json& se = doc["scene_elements"];
    rec.scene_elements.main_object = se["main_object"].get<std::string>();
    rec.scene_elements.other_objects = se["other_objects"].get<std::vector<std::string>>();
    rec.scene_elements.visual_details = se["visual_details"].get<std::vector<std::string>>();
    rec.scene_elements.environment = se["environment"].get<std::string>();
    const Json& sd = doc["spatial_dynamics"];
    rec.spatial_dynamics.initial_layout = sd["initial_layout"].get<std::string>();
    rec.spatial_dynamics.spatial_change = sd["spatial_change"].get<std::string>();
    const Json& ae = doc["action_execution"];
    rec.action_execution.instruction_brief = ae["instruction_brief"].get<std::string>();
    rec.action_execution.execution_detailed = ae["execution_detailed"].get<std::string>();
    rec.annotator_id = std::move(annotator_id);
    return rec;
}

// ---------------------------------------------------------------------------

double AgreementReport::min_agreement() const {
    double m = 1.0;
    for (const auto& [field, value] : agreement) m = std::min(m, value);
    return m;
}

namespace {

std::string fold(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::set<std::string> folded_set(const std::vector<std::string>& items) {
    std::set<std::string> out;
    for (const auto& s : items) out.insert(fold(s));
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& s : a) inter += b.count(s);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double majority_share(const std::vector<std::string>& values) {
    std::map<std::string, int> classes;
    for (const auto& v : values) ++classes[v];
    int best = 0;
    for (const auto& [v, n] : classes) best = std::max(best, n);
    return static_cast<double>(best) / static_cast<double>(values.size());
}

double mean_pairwise_jaccard(const std::vector<std::set<std::string>>& sets) {
    if (sets.size() < 2) return 1.0;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            sum += jaccard(sets[i], sets[j]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

}  // namespace

AgreementReport cross_check(std::span<const SceneMetaRecord> records, std::string clip_id) {
    if (records.empty()) throw std::invalid_argument("cross_check needs at least one record");
    std::set<std::string> ids;
    for (const auto& r : records) {
        if (!ids.insert(r.annotator_id).second) {
            throw std::invalid_argument(fmt::format("duplicate annotator_id '{}'", r.annotator_id));
        }
    }

    auto scalar = [&](auto getter) {
        std::vector<std::string> values;
        for (const auto& r : records) values.push_back(getter(r));
        return majority_share(values);
    };
    auto list = [&](auto getter) {
        std::vector<std::set<std::string>> sets;
        for (const auto& r : records) sets.push_back(folded_set(getter(r)));
        return mean_pairwise_jaccard(sets);
    };

    AgreementReport report;
    report.clip_id = std::move(clip_id);
    report.annotator_count = static_cast<int>(records.size());
    auto& a = report.agreement;
    a["scene_elements.main_object"] = scalar([](const auto& r) { return r.scene_elements.main_object; });
    a["scene_elements.other_objects"] = list([](const auto& r) { return r.scene_elements.other_objects; });
    a["scene_elements.visual_details"] = list([](const auto& r) { return r.scene_elements.visual_details; });
    a["scene_elements.environment"] = scalar([](const auto& r) { return r.scene_elements.environment; });
    a["spatial_dynamics.initial_layout"] = scalar([](const auto& r) { return r.spatial_dynamics.initial_layout; });
    a["spatial_dynamics.spatial_change"] = scalar([](const auto& r) { return r.spatial_dynamics.spatial_change; });
    a["action_execution.instruction_brief"] =
        scalar([](const auto& r) { return r.action_execution.instruction_brief; });
    a["action_execution.execution_detailed"] =
        scalar([](const auto& r) { return r.action_execution.execution_detailed; });
    return report;
}

// ---------------------------------------------------------------------------

namespace {

Expected<SceneMetaRecord, MetaError> run_annotator(const AnnotatorClient& client, const AnnotatorRequest& request,
                                                   const ExtractConfig& config) {
    std::string text;
    try {
        text = client.annotate(request);
    } catch (const ClientError& e) {
        return Unexpected(MetaError{MetaFailure::client_error, e.what()});
    }
    if (text.size() > config.max_response_bytes) {
        return Unexpected(MetaError{MetaFailure::generation_limit,
                                    fmt::format("{} bytes > budget {}", text.size(), config.max_response_bytes)});
    }
    return validate_meta_text(text, client.annotator_id());
}

}  // namespace

ExtractionOutcome extract_meta(const ClipRecord& clip, std::span<const int> frames,
                               std::span<const AnnotatorClient* const> clients, const ExtractConfig& config,
                               StatusLedger* ledger) {
    ExtractionOutcome out;
    out.clip_id = clip.clip_id;
    if (ledger) ledger->enter(clip.clip_id, Stage::meta);

    auto finish = [&]() -> ExtractionOutcome {
        if (ledger) {
            if (out.low_agreement) {
                ledger->record(clip.clip_id, Stage::meta, Outcome::rejected("low_agreement"));
            } else if (out.failure) {
                ledger->record(clip.clip_id, Stage::meta, Outcome::failed(std::string(to_string(out.failure->code))));
            } else {
                ledger->record(clip.clip_id, Stage::meta, Outcome::accepted());
            }
        }
        return out;
    };

    if (frames.empty()) {
        out.failure = MetaError{MetaFailure::no_frames, "no sampled frames"};
        return finish();
    }
    if (clients.empty()) {
        out.failure = MetaError{MetaFailure::client_error, "no annotators configured"};
        return finish();
    }

    AnnotatorRequest request;
    request.clip_id = clip.clip_id;
    request.prompt_id = config.prompt_id;
    for (int idx : frames) {
        if (idx < 0 || idx >= static_cast<int>(clip.frame_refs.size())) {
            throw std::out_of_range(fmt::format("frame index {} out of range for {}", idx, clip.clip_id));
        }
        request.frame_refs.push_back(clip.frame_refs[static_cast<std::size_t>(idx)]);
    }

    std::vector<Expected<SceneMetaRecord, MetaError>> results;
    if (config.parallel_annotators && clients.size() > 1) {
        std::vector<std::future<Expected<SceneMetaRecord, MetaError>>> pending;
        for (const auto* client : clients) {
            pending.push_back(std::async(std::launch::async,
                                         [client, &request, &config] { return run_annotator(*client, request, config); }));
        }
        for (auto& f : pending) results.push_back(f.get());
    } else {
        for (const auto* client : clients) results.push_back(run_annotator(*client, request, config));
    }

    std::set<std::string> seen;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const std::string id = clients[i]->annotator_id();
        if (results[i]) {
            if (seen.insert(id).second) out.records.push_back(*results[i]);
        } else {
            out.annotator_failures.push_back({id, results[i].error()});
        }
    }

    if (out.records.empty()) {
        out.failure = out.annotator_failures.front().error;
        return finish();
    }
    out.agreement = cross_check(out.records, clip.clip_id);
    if (config.min_agreement > 0.0 && out.agreement->min_agreement() < config.min_agreement) {
        out.low_agreement = true;
    }
    return finish();
}

}  // namespace forge::meta
