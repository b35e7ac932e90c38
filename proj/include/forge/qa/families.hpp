#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace forge::qa {

// The capability families QA supervision is organized into.
enum class QAFamily {
    spatial_relations,
    distance_depth,
    size_estimation,
    grounding_coordinates,
    viewpoint,
    next_step,
    route_planning,
    affordance_safety,
    long_horizon,
    state_change,
    action_recognition_counting,
    temporal_ordering,
    action_localization,
    causal_counterfactual,
    counting,
    fine_grained_attributes,
    existence,
    scene_text_ocr,
    chart_data,
    science_knowledge,
    visual_logic,
};

inline constexpr std::size_t kFamilyCount = 21;

inline constexpr std::array<QAFamily, kFamilyCount> kAllFamilies{
    QAFamily::spatial_relations,      QAFamily::distance_depth,
    QAFamily::size_estimation,        QAFamily::grounding_coordinates,
    QAFamily::viewpoint,              QAFamily::next_step,
    QAFamily::route_planning,         QAFamily::affordance_safety,
    QAFamily::long_horizon,           QAFamily::state_change,
    QAFamily::action_recognition_counting, QAFamily::temporal_ordering,
    QAFamily::action_localization,    QAFamily::causal_counterfactual,
    QAFamily::counting,               QAFamily::fine_grained_attributes,
    QAFamily::existence,              QAFamily::scene_text_ocr,
    QAFamily::chart_data,             QAFamily::science_knowledge,
    QAFamily::visual_logic,
};

std::string_view to_string(QAFamily family);
std::optional<QAFamily> family_from_string(std::string_view name);

// distance_depth and size_estimation.
bool requires_depth(QAFamily family);
// next_step, route_planning, affordance_safety, long_horizon, state_change.
bool embodied_format(QAFamily family);
// The general-retention families, fed from the manifest's auxiliary items.
bool is_retention(QAFamily family);

}  // namespace forge::qa
