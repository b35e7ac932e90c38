#include "forge/ingest/ingest.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace forge::ingest {

std::string_view to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::low_quality: return "low_quality";
        case RejectReason::high_motion: return "high_motion";
        case RejectReason::no_poses: return "no_poses";
    }
    return "unknown";
}

double rotation_angle(const Quaternion& a, const Quaternion& b) {
    // Relative rotation conj(a) * b. atan2 keeps precision near zero angle,
    // where acos(|<a,b>|) does not.
    const double w = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    const double x = a.w * b.x - a.x * b.w - a.y * b.z + a.z * b.y;
    const double y = a.w * b.y + a.x * b.z - a.y * b.w - a.z * b.x;
    const double z = a.w * b.z - a.x * b.y + a.y * b.x - a.z * b.w;
    const double vec = std::sqrt(x * x + y * y + z * z);
    return 2.0 * std::atan2(vec, std::abs(w));
}

double motion_score(std::span<const Pose> poses, double lambda_trans) {
    if (poses.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 1; i < poses.size(); ++i) {
        const auto& prev = poses[i - 1];
        const auto& cur = poses[i];
        const double dx = cur.translation[0] - prev.translation[0];
        const double dy = cur.translation[1] - prev.translation[1];
        const double dz = cur.translation[2] - prev.translation[2];
        total += rotation_angle(prev.rotation, cur.rotation) +
                 lambda_trans * std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return total / static_cast<double>(poses.size() - 1);
}

GateDecision gate_clip(const ClipRecord& clip, const GateConfig& config, StatusLedger* ledger) {
    GateDecision d;
    d.clip_id = clip.clip_id;
    d.quality_score = clip.quality_score;
    if (clip.camera_poses) d.motion_score = motion_score(*clip.camera_poses, config.lambda_trans);

    if (clip.quality_score < config.q_min) {
        d.reason = RejectReason::low_quality;
    } else if (!clip.camera_poses) {
        if (!config.allow_missing_poses) d.reason = RejectReason::no_poses;
    } else if (d.motion_score > config.m_max) {
        d.reason = RejectReason::high_motion;
    }
    d.accepted = !d.reason.has_value();

    if (ledger) {
        ledger->enter_and_record(clip.clip_id, Stage::ingest,
                                 d.accepted ? Outcome::accepted()
                                            : Outcome::rejected(std::string(to_string(*d.reason))));
    }
    return d;
}

std::vector<int> sample_frame_indices(int n_frames, int k) {
    if (n_frames < 1 || k < 1) throw std::invalid_argument("sample_frame_indices needs n_frames >= 1 and k >= 1");
    std::vector<int> out;
    if (n_frames <= k) {
        for (int i = 0; i < n_frames; ++i) out.push_back(i);
        return out;
    }
    if (k == 1) return {(n_frames - 1) / 2};
    out.reserve(static_cast<std::size_t>(k));
    const std::int64_t span = n_frames - 1;
    for (std::int64_t j = 0; j < k; ++j) {
        out.push_back(static_cast<int>(j * span / (k - 1)));
    }
    return out;
}

}  // namespace forge::ingest
