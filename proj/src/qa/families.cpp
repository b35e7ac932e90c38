#include "forge/qa/families.hpp"

namespace forge::qa {

std::string_view to_string(QAFamily family) {
    switch (family) {
        case QAFamily::spatial_relations: return "spatial_relations";
        case QAFamily::distance_depth: return "distance_depth";
        case QAFamily::size_estimation: return "size_estimation";
        case QAFamily::grounding_coordinates: return "grounding_coordinates";
        case QAFamily::viewpoint: return "viewpoint";
        case QAFamily::next_step: return "next_step";
        case QAFamily::route_planning: return "route_planning";
        case QAFamily::affordance_safety: return "affordance_safety";
        case QAFamily::long_horizon: return "long_horizon";
        case QAFamily::state_change: return "state_change";
        case QAFamily::action_recognition_counting: return "action_recognition_counting";
        case QAFamily::temporal_ordering: return "temporal_ordering";
        case QAFamily::action_localization: return "action_localization";
        case QAFamily::causal_counterfactual: return "causal_counterfactual";
        case QAFamily::counting: return "counting";
        case QAFamily::fine_grained_attributes: return "fine_grained_attributes";
        case QAFamily::existence: return "existence";
        case QAFamily::scene_text_ocr: return "scene_text_ocr";
        case QAFamily::chart_data: return "chart_data";
        case QAFamily::science_knowledge: return "science_knowledge";
        case QAFamily::visual_logic: return "visual_logic";
    }
    return "unknown";
}

std::optional<QAFamily> family_from_string(std::string_view name) {
    for (QAFamily f : kAllFamilies) {
        if (to_string(f) == name) return f;
    }
    return std::nullopt;
}

bool requires_depth(QAFamily family) {
    return family == QAFamily::distance_depth || family == QAFamily::size_estimation;
}

bool embodied_format(QAFamily family) {
    switch (family) {
        case QAFamily::next_step:
        case QAFamily::route_planning:
        case QAFamily::affordance_safety:
        case QAFamily::long_horizon:
        case QAFamily::state_change:
            return true;
        default:
            return false;
    }
}

bool is_retention(QAFamily family) {
    switch (family) {
        case QAFamily::scene_text_ocr:
        case QAFamily::chart_data:
        case QAFamily::science_knowledge:
        case QAFamily::visual_logic:
            return true;
        default:
            return false;
    }
}

}  // namespace forge::qa
