#pragma once

// Shared fixtures and reference implementations for the test binaries.
// The oracles here are written independently of src/ and deliberately naive.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forge/pipeline/config.hpp"
#include "forge/records/records.hpp"

namespace testsupport {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
std::vector<std::string> read_lines(const fs::path& path);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string golden_meta_text();  // tests/fixtures/golden_meta.json

forge::SceneMetaRecord golden_meta_record(int scene);
std::string meta_text(const forge::SceneMetaRecord& meta);

// A well-formed, accepted clip: 9 frames of 640x480, near-static poses,
// one grounding per scene object and auxiliary items for every retention family.
forge::ClipRecord golden_clip(int scene);
inline constexpr int kGoldenClips = 5;
inline constexpr int kFrameWidth = 640;
inline constexpr int kFrameHeight = 480;
inline constexpr int kDepthWidth = 320;
inline constexpr int kDepthHeight = 240;

// Depth at column x of the golden depth maps; rows are constant.
float golden_depth_at(int x);

struct WorkspaceOptions {
    bool with_depth = true;
    int annotators = 1;
    int workers = 1;
    std::uint64_t seed = 11;
};

// Writes manifest, frames, depth files, stub annotations and config.json.
// Returns the path of config.json.
fs::path write_golden_workspace(const fs::path& root, const WorkspaceOptions& options = {});

forge::pipeline::RunConfig load_config(const fs::path& config_path);

// Single-mutation variants of the golden meta text: every leaf deleted in
// turn, then every top-level key renamed.
struct MetaMutation {
    std::string name;
    std::string text;
    std::string expected_code;
    std::string expected_field;
};
std::vector<MetaMutation> golden_meta_mutations();

// Oracles.
std::optional<std::pair<int, int>> brute_force_cell(double cx, double cy, int img_w, int img_h, int depth_w,
                                                    int depth_h);
std::vector<int> nested_loop_samples(int n, int k);
double quaternion_angle_by_dot(const forge::Quaternion& a, const forge::Quaternion& b);

}  // namespace testsupport
