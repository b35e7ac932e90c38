#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "forge/common/rng.hpp"
#include "forge/ingest/ingest.hpp"
#include "support.hpp"

using namespace forge;
using forge::ingest::GateConfig;
using forge::ingest::RejectReason;

namespace {

Pose at(double tx, Quaternion q = {}) { return Pose{q, {tx, 0.0, 0.0}}; }

// Clip whose motion score is exactly `motion` (pure translation along x).
ClipRecord clip_with(double quality, double motion) {
    ClipRecord c = testsupport::golden_clip(0);
    c.frame_refs.resize(2);
    c.camera_poses = std::vector<Pose>{at(0.0), at(motion)};
    c.quality_score = quality;
    return c;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("static camera scores zero") {
    const std::vector<Pose> poses(5, at(0.3, Quaternion{0.5, 0.5, 0.5, 0.5}));
    CHECK(ingest::motion_score(poses) == 0.0);
    CHECK(ingest::motion_score(std::span<const Pose>(poses.data(), 1)) == 0.0);
}

TEST_CASE("quarter turn about z scores pi/2") {
    const double h = std::sqrt(0.5);
    const Quaternion q1{1, 0, 0, 0};
    const Quaternion q2{h, 0, 0, h};
    // hand evaluation: <q1,q2> = cos(pi/4), so theta = 2 acos(cos(pi/4)) = pi/2
    const double expected = testsupport::quaternion_angle_by_dot(q1, q2);
    CHECK(expected == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
    const std::vector<Pose> poses{Pose{q1, {}}, Pose{q2, {}}};
    CHECK(ingest::motion_score(poses) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ingest::motion_score(poses) == doctest::Approx(1.5708).epsilon(1e-4));
}

TEST_CASE("pure translation scores its length times lambda") {
    const std::vector<Pose> poses{at(0.0), at(0.1)};
    CHECK(ingest::motion_score(poses, 1.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(ingest::motion_score(poses, 3.0) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("geodesic angle agrees with the dot-product form and ignores sign") {
    SplitMix64 rng(5);
    for (int i = 0; i < 500; ++i) {
        double v[8];
        for (double& x : v) x = 2 * rng.uniform() - 1;
        auto unit = [](double a, double b, double c, double d) {
            const double n = std::sqrt(a * a + b * b + c * c + d * d);
            return Quaternion{a / n, b / n, c / n, d / n};
        };
        const Quaternion a = unit(v[0], v[1], v[2], v[3]);
        const Quaternion b = unit(v[4], v[5], v[6], v[7]);
        const Quaternion neg_b{-b.w, -b.x, -b.y, -b.z};
        const double oracle = testsupport::quaternion_angle_by_dot(a, b);
        CHECK(ingest::rotation_angle(a, b) == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(ingest::rotation_angle(a, neg_b) == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(ingest::rotation_angle(a, a) < 1e-12);
    }
}

TEST_CASE("motion score is the mean over consecutive pairs") {
    const std::vector<Pose> poses{at(0.0), at(0.1), at(0.4)};
    CHECK(ingest::motion_score(poses) == doctest::Approx((0.1 + 0.3) / 2).epsilon(1e-12));
}

TEST_CASE("gating thresholds") {
    GateConfig cfg;
    cfg.q_min = 0.5;
    cfg.m_max = 0.3;
    auto ok = ingest::gate_clip(clip_with(0.9, 0.05), cfg);
    CHECK(ok.accepted);
    CHECK_FALSE(ok.reason.has_value());
    CHECK(ok.motion_score == doctest::Approx(0.05));

    auto low = ingest::gate_clip(clip_with(0.2, 0.05), cfg);
    CHECK_FALSE(low.accepted);
    CHECK(low.reason == RejectReason::low_quality);

    auto shaky = ingest::gate_clip(clip_with(0.9, 0.9), cfg);
    CHECK_FALSE(shaky.accepted);
    CHECK(shaky.reason == RejectReason::high_motion);
}

TEST_CASE("missing poses are rejected unless allowed") {
    ClipRecord c = clip_with(0.9, 0.0);
    c.camera_poses.reset();
    GateConfig cfg;
    CHECK(ingest::gate_clip(c, cfg).reason == RejectReason::no_poses);
    cfg.allow_missing_poses = true;
    CHECK(ingest::gate_clip(c, cfg).accepted);
}

TEST_CASE("gate writes one ledger entry at ingest") {
    StatusLedger ledger;
    ingest::gate_clip(clip_with(0.2, 0.0), GateConfig{}, &ledger);
    const auto entries = ledger.snapshot();
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].stage == Stage::ingest);
    CHECK(entries[0].outcome == Outcome::rejected("low_quality"));
}

TEST_CASE("raising m_max never un-accepts a clip") {
    SplitMix64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const ClipRecord c = clip_with(rng.uniform(), rng.uniform());
        GateConfig lo;
        lo.m_max = rng.uniform();
        GateConfig hi = lo;
        hi.m_max = lo.m_max + rng.uniform();
        if (ingest::gate_clip(c, lo).accepted) CHECK(ingest::gate_clip(c, hi).accepted);
    }
}

TEST_CASE("frame sampling examples") {
    CHECK(ingest::sample_frame_indices(10, 10) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(ingest::sample_frame_indices(9, 3) == std::vector<int>{0, 4, 8});
    CHECK(ingest::sample_frame_indices(5, 1) == std::vector<int>{2});
    CHECK_THROWS(ingest::sample_frame_indices(0, 1));
    CHECK_THROWS(ingest::sample_frame_indices(4, 0));
}

TEST_CASE("frame sampling matches a nested-loop oracle") {
    for (int n = 1; n <= 60; ++n) {
        for (int k = 1; k <= n; ++k) {
            const auto got = ingest::sample_frame_indices(n, k);
            CHECK(got == testsupport::nested_loop_samples(n, k));
            CHECK(std::is_sorted(got.begin(), got.end()));
            if (k > 1) {
                CHECK(got.front() == 0);
                CHECK(got.back() == n - 1);
            }
        }
    }
}

}  // TEST_SUITE
