#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/records/ledger.hpp"
#include "forge/records/records.hpp"

namespace forge::ingest {

struct GateConfig {
    double q_min = 0.5;
    double m_max = 0.5;
    double lambda_trans = 1.0;        // weight per meter of camera translation
    bool allow_missing_poses = false;
};

enum class RejectReason { low_quality, high_motion, no_poses };
std::string_view to_string(RejectReason reason);

struct GateDecision {
    std::string clip_id;
    bool accepted = false;
    double motion_score = 0.0;
    double quality_score = 0.0;
    std::optional<RejectReason> reason;  // present iff !accepted
};

// Geodesic angle in radians between two unit quaternions, sign-invariant.
double rotation_angle(const Quaternion& a, const Quaternion& b);

// Mean over consecutive pose pairs of (rotation angle + lambda * translation
// distance). A single pose scores 0.
double motion_score(std::span<const Pose> poses, double lambda_trans = 1.0);

// Rejection precedence: low_quality, then no_poses, then high_motion.
// When a ledger is given the decision is recorded there at stage ingest.
GateDecision gate_clip(const ClipRecord& clip, const GateConfig& config, StatusLedger* ledger = nullptr);

// Uniformly spaced frame indices; see README for the exact rule.
std::vector<int> sample_frame_indices(int n_frames, int k);

}  // namespace forge::ingest
