#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/common/expected.hpp"
#include "forge/qa/families.hpp"
#include "forge/records/records.hpp"

namespace forge::qa {

inline constexpr std::string_view kMarkerEnvironment = "[Perception - Environment]";
inline constexpr std::string_view kMarkerObject = "[Perception - Object]";
inline constexpr std::string_view kMarkerPlanning = "[Spatial Planning]";
inline constexpr std::string_view kMarkerExecution = "[Action Execution]";

// True when the four embodied-reasoning markers occur in order.
bool has_embodied_markers(std::string_view answer);

// Families that can be rendered for a clip. Depth families need depth entries
// with status success whose label names a scene object: two for
// distance_depth, one for size_estimation. Retention families need auxiliary
// items under their family name.
std::set<QAFamily> family_eligibility(const SceneMetaRecord& meta, const DepthInfo& depth,
                                      const AuxiliaryData& auxiliary = {});

enum class DepthOrder { first_closer, second_closer, tie };
std::string_view to_string(DepthOrder order);

inline constexpr double kTieAbsMeters = 0.02;
inline constexpr double kTieRelative = 0.05;

// Tie iff |d1 - d2| <= max(eps_abs, eps_rel * min(d1, d2)).
DepthOrder relative_depth_label(double d1, double d2, double eps_abs = kTieAbsMeters,
                                double eps_rel = kTieRelative);

// Meters rounded to the nearest centimeter, two decimals, e.g. "1.23 m".
std::string format_meters(double meters);

// Environment -> object -> spatial planning -> execution, each section
// filled from the matching meta fields.
std::string compose_embodied_answer(const SceneMetaRecord& meta);

std::uint64_t clip_seed(std::string_view clip_id, std::uint64_t run_seed);

struct RenderPlan {
    std::string clip_id;
    std::set<QAFamily> eligible_families;
    std::map<QAFamily, int> budget;  // examples per family
    std::uint64_t seed = 0;
    std::vector<int> sampled_frames;  // feeds action_localization

    int total_budget() const;
};

// Budgets for eligible families only, walked in family order and clamped so
// the total never exceeds max_per_clip.
RenderPlan make_render_plan(std::string clip_id, std::set<QAFamily> eligible,
                            const std::map<QAFamily, int>& family_budget, int max_per_clip, std::uint64_t run_seed,
                            std::vector<int> sampled_frames);

enum class RenderErrorCode { ineligible_family };

struct RenderError {
    RenderErrorCode code;
    QAFamily family;
};

// Deterministic template rendering. Each family draws from its own stream
// derived from plan.seed, the family name, and the annotator id, so output is
// independent of evaluation order.
Expected<std::vector<QAExample>, RenderError> render_qa(const ClipRecord& clip, const SceneMetaRecord& meta,
                                                        const DepthInfo& depth, const RenderPlan& plan);

}  // namespace forge::qa
