#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/common/expected.hpp"
#include "forge/records/ledger.hpp"
#include "forge/records/records.hpp"

namespace forge::depth {

// Dense row-major depth grid in meters.
class DepthMap {
public:
    DepthMap(int width, int height, std::vector<float> values);
    static DepthMap constant(int width, int height, float meters);

    int width() const { return width_; }
    int height() const { return height_; }
    std::span<const float> values() const { return values_; }

private:
    int width_;
    int height_;
    std::vector<float> values_;
};

// On-disk container:
//   bytes 0..3    "DPTH"
//   bytes 4..15   little-endian u32 width, u32 height, u32 reserved (= 0)
//   bytes 16..    width*height little-endian IEEE-754 float32, row-major
inline constexpr char kMagic[4] = {'D', 'P', 'T', 'H'};
inline constexpr std::size_t kHeaderBytes = 16;

enum class LoadError { missing, corrupted };

struct DepthLoadError {
    LoadError kind;
    std::string detail;
};

Expected<DepthMap, DepthLoadError> load_depth_map(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_depth_map(const DepthMap& map);
// Raw writer; does not reject non-finite cells so corrupted fixtures can be produced.
void write_depth_file(const std::filesystem::path& path, int width, int height, std::span<const float> values);
void write_depth_map(const std::filesystem::path& path, const DepthMap& map);

// <clip_id>/<frame_index>.dpth
std::filesystem::path depth_file_name(const std::string& clip_id, int frame_index);

// Image pixel -> depth cell by floor-then-clamp on the per-axis scale factors.
// Returns nullopt when a dimension is non-positive or the center lies outside
// [0, img_w) x [0, img_h).
std::optional<DepthXY> map_center(double cx, double cy, int img_w, int img_h, int depth_w, int depth_h);

// values[dy * width + dx]; requires an in-bounds cell.
double sample_depth(const DepthMap& map, int dx, int dy);

struct DepthSource {
    std::filesystem::path depth_root;  // holds <clip_id>/<frame_index>.dpth; empty means no depth
    std::filesystem::path frame_root;  // relative frame_refs resolve against this
};

// Associates every grounding with a depth value sampled from its anchor frame
// (the grounding's frame_index when set, else the first sampled frame). Scene
// objects without a grounding get out_of_grounding. Failures become statuses
// with sentinel values; nothing throws for missing or broken files.
DepthInfo augment_clip(const ClipRecord& clip, const SceneMetaRecord& meta, std::span<const int> sampled_frames,
                       const DepthSource& source, StatusLedger* ledger = nullptr);

struct DepthFileReport {
    std::filesystem::path path;
    bool ok = false;
    int width = 0;
    int height = 0;
    double min_meters = 0.0;
    double max_meters = 0.0;
    std::string problem;
};

// Loads every *.dpth file directly inside a clip directory, sorted by name.
std::vector<DepthFileReport> check_depth_dir(const std::filesystem::path& clip_dir);

}  // namespace forge::depth
