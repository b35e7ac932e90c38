#include "forge/qa/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "forge/common/rng.hpp"

namespace forge::qa {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string norm(std::string_view s) {
    std::string out = trim(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Field text embedded mid-sentence: trimmed, trailing punctuation dropped.
std::string clause(std::string_view s) {
    std::string out = trim(s);
    while (!out.empty() && (out.back() == '.' || out.back() == '!' || out.back() == ';')) out.pop_back();
    return out;
}

std::string strip_markers(std::string text) {
    for (auto marker : {kMarkerEnvironment, kMarkerObject, kMarkerPlanning, kMarkerExecution}) {
        for (auto pos = text.find(marker); pos != std::string::npos; pos = text.find(marker, pos)) {
            text.erase(pos, marker.size());
        }
    }
    return text;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += clause(items[i]);
    }
    return out;
}

}  // namespace

bool has_embodied_markers(std::string_view answer) {
    std::size_t pos = 0;
    for (auto marker : {kMarkerEnvironment, kMarkerObject, kMarkerPlanning, kMarkerExecution}) {
        pos = answer.find(marker, pos);
        if (pos == std::string_view::npos) return false;
        pos += marker.size();
    }
    return true;
}

std::string_view to_string(DepthOrder order) {
    switch (order) {
        case DepthOrder::first_closer: return "first_closer";
        case DepthOrder::second_closer: return "second_closer";
        case DepthOrder::tie: return "tie";
    }
    return "unknown";
}

DepthOrder relative_depth_label(double d1, double d2, double eps_abs, double eps_rel) {
    const double tolerance = std::max(eps_abs, eps_rel * std::min(d1, d2));
    if (std::abs(d1 - d2) <= tolerance) return DepthOrder::tie;
    return d1 < d2 ? DepthOrder::first_closer : DepthOrder::second_closer;
}

std::string format_meters(double meters) {
    return fmt::format("{:.2f} m", std::round(meters * 100.0) / 100.0);
}

std::string compose_embodied_answer(const SceneMetaRecord& meta) {
    const auto& se = meta.scene_elements;
    const auto& sd = meta.spatial_dynamics;
    std::string details = strip_markers(join(se.visual_details, "; "));
    return fmt::format(
        "{} The scene is {}.\n"
        "{} The main object is the {}: {}.\n"
        "{} Initial layout: {}. Planned change: {}.\n"
        "{} {}",
        kMarkerEnvironment, strip_markers(clause(se.environment)),
        kMarkerObject, strip_markers(clause(se.main_object)), details,
        kMarkerPlanning, strip_markers(clause(sd.initial_layout)), strip_markers(clause(sd.spatial_change)),
        kMarkerExecution, strip_markers(trim(meta.action_execution.execution_detailed)));
}

std::uint64_t clip_seed(std::string_view clip_id, std::uint64_t run_seed) { return fnv1a64(clip_id) ^ run_seed; }

// ---------------------------------------------------------------------------

namespace {

// Distinct scene object names (main object first), in meta order.
std::vector<std::string> scene_vocabulary(const SceneMetaRecord& meta) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    auto add = [&](const std::string& name) {
        if (seen.insert(norm(name)).second) out.push_back(trim(name));
    };
    add(meta.scene_elements.main_object);
    for (const auto& o : meta.scene_elements.other_objects) add(o);
    return out;
}

struct Measured {
    std::string name;  // scene spelling
    double meters;
};

// Successful depth entries whose label names a scene object.
std::vector<Measured> measured_objects(const SceneMetaRecord& meta, const DepthInfo& depth) {
    std::map<std::string, std::string> spelling;
    for (const auto& name : scene_vocabulary(meta)) spelling.emplace(norm(name), name);
    std::vector<Measured> out;
    for (const auto& [id, e] : depth.entries) {
        if (e.depth_status != DepthStatus::success) continue;
        auto it = spelling.find(norm(e.label));
        if (it != spelling.end()) out.push_back({it->second, e.depth_meters});
    }
    return out;
}

}  // namespace

std::set<QAFamily> family_eligibility(const SceneMetaRecord& meta, const DepthInfo& depth,
                                      const AuxiliaryData& auxiliary) {
    const std::size_t measured = measured_objects(meta, depth).size();
    std::set<QAFamily> out;
    for (QAFamily f : kAllFamilies) {
        if (f == QAFamily::distance_depth && measured < 2) continue;
        if (f == QAFamily::size_estimation && measured < 1) continue;
        if (is_retention(f)) {
            auto it = auxiliary.find(std::string(to_string(f)));
            if (it == auxiliary.end() || it->second.empty()) continue;
        }
        out.insert(f);
    }
    return out;
}

int RenderPlan::total_budget() const {
    int total = 0;
    for (const auto& [f, n] : budget) total += n;
    return total;
}

RenderPlan make_render_plan(std::string clip_id, std::set<QAFamily> eligible,
                            const std::map<QAFamily, int>& family_budget, int max_per_clip, std::uint64_t run_seed,
                            std::vector<int> sampled_frames) {
    RenderPlan plan;
    plan.seed = clip_seed(clip_id, run_seed);
    plan.clip_id = std::move(clip_id);
    plan.sampled_frames = std::move(sampled_frames);
    int remaining = std::max(0, max_per_clip);
    for (QAFamily f : kAllFamilies) {
        if (!eligible.count(f)) continue;
        auto it = family_budget.find(f);
        const int want = it == family_budget.end() ? 0 : std::max(0, it->second);
        const int take = std::min(want, remaining);
        if (take > 0) plan.budget[f] = take;
        remaining -= take;
    }
    plan.eligible_families = std::move(eligible);
    return plan;
}

// ---------------------------------------------------------------------------

namespace {

struct Draft {
    std::string question;
    std::string answer;
    std::vector<std::string> refs;
};

struct Scene {
    const ClipRecord& clip;
    const SceneMetaRecord& meta;
    const RenderPlan& plan;
    std::vector<std::string> vocab;
    std::vector<Measured> measured;

    const std::string& main() const { return vocab.front(); }
    std::string brief() const { return clause(meta.action_execution.instruction_brief); }
    std::string layout() const { return clause(meta.spatial_dynamics.initial_layout); }
    std::string change() const { return clause(meta.spatial_dynamics.spatial_change); }
    std::vector<std::string> others() const { return {vocab.begin() + 1, vocab.end()}; }

    // Scene spelling for a grounding label, if it names a scene object.
    std::optional<std::string> scene_name(const std::string& label) const {
        for (const auto& v : vocab) {
            if (norm(v) == norm(label)) return v;
        }
        return std::nullopt;
    }
};

std::vector<Draft> spatial_relations(const Scene& s) {
    std::vector<Draft> out;
    out.push_back({fmt::format("Where is the {} relative to its surroundings at the start of the clip?", s.main()),
                   fmt::format("{}.", s.layout()), {s.main()}});
    out.push_back({fmt::format("Describe the initial spatial arrangement around the {}.", s.main()),
                   fmt::format("{}.", s.layout()), {s.main()}});
    for (const auto& o : s.others()) {
        out.push_back({fmt::format("At the beginning of the clip, how are the {} and the {} arranged?", s.main(), o),
                       fmt::format("{}.", s.layout()), {s.main(), o}});
    }
    return out;
}

std::vector<Draft> distance_depth(const Scene& s) {
    std::vector<Draft> out;
    for (const auto& m : s.measured) {
        out.push_back({fmt::format("How far from the camera is the {}?", m.name),
                       fmt::format("The {} is about {} from the camera.", m.name, format_meters(m.meters)),
                       {m.name}});
    }
    for (std::size_t i = 0; i < s.measured.size(); ++i) {
        for (std::size_t j = i + 1; j < s.measured.size(); ++j) {
            const auto& a = s.measured[i];
            const auto& b = s.measured[j];
            if (norm(a.name) == norm(b.name)) continue;
            const DepthOrder order = relative_depth_label(a.meters, b.meters);
            if (order == DepthOrder::tie) continue;
            const auto& near = order == DepthOrder::first_closer ? a : b;
            const auto& far = order == DepthOrder::first_closer ? b : a;
            out.push_back({fmt::format("Which is closer to the camera, the {} or the {}?", a.name, b.name),
                           fmt::format("The {} is closer ({}) than the {} ({}).", near.name,
                                       format_meters(near.meters), far.name, format_meters(far.meters)),
                           {a.name, b.name}});
        }
    }
    return out;
}

std::vector<Draft> size_estimation(const Scene& s) {
    std::vector<Draft> out;
    for (const auto& m : s.measured) {
        out.push_back({fmt::format("At what distance is the {} observed, which sets the scale for judging its "
                                   "real-world size?",
                                   m.name),
                       fmt::format("The {} is observed at about {}, so its apparent size corresponds to an object "
                                   "seen from that distance.",
                                   m.name, format_meters(m.meters)),
                       {m.name}});
    }
    return out;
}

std::vector<Draft> grounding_coordinates(const Scene& s) {
    std::vector<Draft> out;
    for (const auto& g : s.clip.groundings) {
        auto name = s.scene_name(g.label);
        if (!name) continue;
        const PixelPoint c = g.center();
        out.push_back({fmt::format("Give the pixel coordinates of the center of the {}.", *name),
                       fmt::format("The center of the {} is at ({:.1f}, {:.1f}).", *name, c.x, c.y),
                       {*name}});
        if (g.bbox) {
            out.push_back({fmt::format("What is the bounding box of the {} in pixels?", *name),
                           fmt::format("The {} occupies [{:.1f}, {:.1f}, {:.1f}, {:.1f}] (x_min, y_min, x_max, y_max).",
                                       *name, g.bbox->x_min, g.bbox->y_min, g.bbox->x_max, g.bbox->y_max),
                           {*name}});
        }
    }
    if (out.empty()) {
        out.push_back({fmt::format("Which object should be located first to carry out the task: {}?", s.brief()),
                       fmt::format("The {}.", s.main()), {s.main()}});
    }
    return out;
}

std::vector<Draft> viewpoint(const Scene& s) {
    const std::string env = clause(s.meta.scene_elements.environment);
    return {
        {"From the camera wearer's point of view, what is directly in front of them?",
         fmt::format("The {}, seen first-person in this setting: {}.", s.main(), env), {s.main()}},
        {fmt::format("Is the {} seen from a first-person or a third-person viewpoint?", s.main()),
         fmt::format("First-person: the camera wearer is looking at the {} in this setting: {}.", s.main(), env),
         {s.main()}},
    };
}

std::vector<Draft> embodied(const Scene& s, QAFamily family) {
    const std::string answer = compose_embodied_answer(s.meta);
    std::vector<std::string> questions;
    switch (family) {
        case QAFamily::next_step:
            questions = {fmt::format("The goal is: {}. What should be done next?", s.brief()),
                         fmt::format("Given the current view and the goal '{}', what is the next action?", s.brief())};
            break;
        case QAFamily::route_planning:
            questions = {fmt::format("How should the hand move through the scene to accomplish: {}?", s.brief()),
                         fmt::format("Plan the path of the hand toward the {} and describe how it completes.", s.main())};
            break;
        case QAFamily::affordance_safety:
            questions = {fmt::format("Can the {} be handled safely here, and how should it be approached?", s.main()),
                         fmt::format("Which part of the {} is operable, and what should be avoided?", s.main())};
            break;
        case QAFamily::long_horizon:
            questions = {fmt::format("Break the task '{}' into an ordered sequence of steps.", s.brief()),
                         fmt::format("What multi-step plan accomplishes: {}?", s.brief())};
            break;
        case QAFamily::state_change:
            questions = {fmt::format("What physical change does the {} undergo in this clip?", s.main()),
                         fmt::format("How does the state of the {} differ before and after the action?", s.main())};
            break;
        default:
            break;
    }
    std::vector<Draft> out;
    for (auto& q : questions) out.push_back({std::move(q), answer, {s.main()}});
    return out;
}

std::vector<Draft> action_recognition(const Scene& s) {
    return {
        {fmt::format("What action is performed on the {}?", s.main()), fmt::format("{}.", s.brief()), {s.main()}},
        {"Which action does the person carry out in this clip?", fmt::format("{}.", s.brief()), {s.main()}},
    };
}

std::vector<Draft> temporal_ordering(const Scene& s) {
    return {
        {"In what order do the events of the clip unfold?",
         fmt::format("First: {}. Then: {}.", s.layout(), s.change()), {s.main()}},
        {fmt::format("What happens to the {} first, and what follows?", s.main()),
         fmt::format("At the start: {}. Afterwards: {}.", s.layout(), s.change()), {s.main()}},
    };
}

std::vector<Draft> action_localization(const Scene& s) {
    std::vector<int> frames = s.plan.sampled_frames;
    if (frames.empty()) frames = {0, static_cast<int>(s.clip.frame_refs.size()) - 1};
    const int first = frames.front();
    const int last = frames.back();
    return {
        {fmt::format("During which frames does the action '{}' take place?", s.brief()),
         fmt::format("From frame {} to frame {}.", first, last), {s.main()}},
        {fmt::format("Localize in time the interaction with the {}.", s.main()),
         fmt::format("It spans frames {} through {} of the clip.", first, last), {s.main()}},
    };
}

std::vector<Draft> causal_counterfactual(const Scene& s) {
    return {
        {"Why does the scene change from its initial layout?",
         fmt::format("Because the person performs the action: {}. As a result: {}.", s.brief(), s.change()),
         {s.main()}},
        {fmt::format("What would happen to the {} if the action '{}' were not performed?", s.main(), s.brief()),
         fmt::format("It would stay as initially arranged: {}.", s.layout()), {s.main()}},
    };
}

std::vector<Draft> counting(const Scene& s) {
    const auto others = s.others();
    std::vector<std::string> named;
    for (const auto& o : others) named.push_back("the " + o);
    std::string listing = join(named, ", ");
    return {
        {fmt::format("How many other objects are visible around the {}?", s.main()),
         fmt::format("{}: {}.", others.size(), listing.empty() ? std::string("none") : listing), others},
        {"How many distinct objects are involved in the scene?",
         fmt::format("{}: the {} plus {} other object{}.", s.vocab.size(), s.main(), others.size(),
                     others.size() == 1 ? "" : "s"),
         s.vocab},
    };
}

std::vector<Draft> fine_grained_attributes(const Scene& s) {
    const std::string details = join(s.meta.scene_elements.visual_details, "; ");
    return {
        {fmt::format("Describe the material and state details of the {}.", s.main()), fmt::format("{}.", details),
         {s.main()}},
        {fmt::format("What visual attributes stand out on the {}?", s.main()), fmt::format("{}.", details),
         {s.main()}},
    };
}

std::vector<Draft> existence(const Scene& s) {
    std::vector<Draft> out;
    for (const auto& o : s.vocab) {
        out.push_back({fmt::format("Does a {} appear in this clip?", o),
                       fmt::format("Yes, the {} appears in the scene.", o), {o}});
    }
    return out;
}

std::vector<Draft> retention(const Scene& s, QAFamily family) {
    std::vector<Draft> out;
    auto it = s.clip.auxiliary.find(std::string(to_string(family)));
    if (it == s.clip.auxiliary.end()) return out;
    for (const auto& item : it->second) out.push_back({item.question, item.answer, {}});
    return out;
}

std::vector<Draft> candidates(const Scene& s, QAFamily family) {
    switch (family) {
        case QAFamily::spatial_relations: return spatial_relations(s);
        case QAFamily::distance_depth: return distance_depth(s);
        case QAFamily::size_estimation: return size_estimation(s);
        case QAFamily::grounding_coordinates: return grounding_coordinates(s);
        case QAFamily::viewpoint: return viewpoint(s);
        case QAFamily::next_step:
        case QAFamily::route_planning:
        case QAFamily::affordance_safety:
        case QAFamily::long_horizon:
        case QAFamily::state_change: return embodied(s, family);
        case QAFamily::action_recognition_counting: return action_recognition(s);
        case QAFamily::temporal_ordering: return temporal_ordering(s);
        case QAFamily::action_localization: return action_localization(s);
        case QAFamily::causal_counterfactual: return causal_counterfactual(s);
        case QAFamily::counting: return counting(s);
        case QAFamily::fine_grained_attributes: return fine_grained_attributes(s);
        case QAFamily::existence: return existence(s);
        case QAFamily::scene_text_ocr:
        case QAFamily::chart_data:
        case QAFamily::science_knowledge:
        case QAFamily::visual_logic: return retention(s, family);
    }
    return {};
}

}  // namespace

Expected<std::vector<QAExample>, RenderError> render_qa(const ClipRecord& clip, const SceneMetaRecord& meta,
                                                        const DepthInfo& depth, const RenderPlan& plan) {
    const auto eligible = family_eligibility(meta, depth, clip.auxiliary);
    for (const auto& [family, n] : plan.budget) {
        if (n > 0 && (!eligible.count(family) || !plan.eligible_families.count(family))) {
            return Unexpected(RenderError{RenderErrorCode::ineligible_family, family});
        }
    }

    Scene scene{clip, meta, plan, scene_vocabulary(meta), measured_objects(meta, depth)};
    std::vector<QAExample> out;
    for (QAFamily family : kAllFamilies) {
        auto it = plan.budget.find(family);
        if (it == plan.budget.end() || it->second <= 0) continue;

        std::vector<Draft> pool = candidates(scene, family);
        SplitMix64 rng(plan.seed ^ fnv1a64(to_string(family)) ^ fnv1a64(meta.annotator_id));
        for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);

        const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(it->second));
        for (std::size_t k = 0; k < take; ++k) {
            QAExample ex;
            ex.qa_id = fmt::format("{}:{}:{}:{}", clip.clip_id, meta.annotator_id, to_string(family), k);
            ex.clip_id = clip.clip_id;
            ex.annotator_id = meta.annotator_id;
            ex.family = std::string(to_string(family));
            ex.question = std::move(pool[k].question);
            ex.answer = std::move(pool[k].answer);
            ex.requires_depth = requires_depth(family);
            ex.embodied_format = embodied_format(family);
            ex.generator_seed = plan.seed;
            ex.object_refs = std::move(pool[k].refs);
            out.push_back(std::move(ex));
        }
    }
    return out;
}

}  // namespace forge::qa
