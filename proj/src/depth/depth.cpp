#include "forge/depth/depth.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace forge::depth {

namespace fs = std::filesystem;

DepthMap::DepthMap(int width, int height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("depth map dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw std::invalid_argument("depth map value count does not match width*height");
    }
    if (!std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); })) {
        throw std::invalid_argument("depth map values must be finite");
    }
}

DepthMap DepthMap::constant(int width, int height, float meters) {
    return DepthMap(width, height,
                    std::vector<float>(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), meters));
}

namespace {

std::uint32_t read_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

DepthLoadError corrupted(std::string detail) { return {LoadError::corrupted, std::move(detail)}; }

}  // namespace

Expected<DepthMap, DepthLoadError> load_depth_map(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) return Unexpected(DepthLoadError{LoadError::missing, path.string()});

    std::ifstream in(path, std::ios::binary);
    if (!in) return Unexpected(corrupted("cannot open " + path.string()));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < kHeaderBytes) return Unexpected(corrupted("truncated header"));
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) return Unexpected(corrupted("bad magic"));
    const std::uint32_t width = read_u32_le(bytes.data() + 4);
    const std::uint32_t height = read_u32_le(bytes.data() + 8);
    const std::uint32_t reserved = read_u32_le(bytes.data() + 12);
    if (reserved != 0) return Unexpected(corrupted("reserved header word is not zero"));
    if (width == 0 || height == 0 || width > (1u << 16) || height > (1u << 16)) {
        return Unexpected(corrupted(fmt::format("implausible dimensions {}x{}", width, height)));
    }
    const std::size_t cells = static_cast<std::size_t>(width) * height;
    if (bytes.size() != kHeaderBytes + 4 * cells) {
        return Unexpected(corrupted(fmt::format("expected {} payload bytes, found {}", 4 * cells,
                                                bytes.size() - kHeaderBytes)));
    }

    std::vector<float> values(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const std::uint32_t raw = read_u32_le(bytes.data() + kHeaderBytes + 4 * i);
        const float v = std::bit_cast<float>(raw);
        if (!std::isfinite(v)) return Unexpected(corrupted(fmt::format("non-finite value at cell {}", i)));
        values[i] = v;
    }
    return DepthMap(static_cast<int>(width), static_cast<int>(height), std::move(values));
}

std::vector<std::uint8_t> encode_depth_map(const DepthMap& map) {
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_u32_le(out, static_cast<std::uint32_t>(map.width()));
    put_u32_le(out, static_cast<std::uint32_t>(map.height()));
    put_u32_le(out, 0);
    for (float v : map.values()) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

void write_depth_file(const fs::path& path, int width, int height, std::span<const float> values) {
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_u32_le(out, static_cast<std::uint32_t>(width));
    put_u32_le(out, static_cast<std::uint32_t>(height));
    put_u32_le(out, 0);
    for (float v : values) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

void write_depth_map(const fs::path& path, const DepthMap& map) {
    write_depth_file(path, map.width(), map.height(), map.values());
}

fs::path depth_file_name(const std::string& clip_id, int frame_index) {
    return fs::path(clip_id) / fmt::format("{}.dpth", frame_index);
}

std::optional<DepthXY> map_center(double cx, double cy, int img_w, int img_h, int depth_w, int depth_h) {
    if (img_w <= 0 || img_h <= 0 || depth_w <= 0 || depth_h <= 0) return std::nullopt;
    if (!(cx >= 0.0 && cx < img_w && cy >= 0.0 && cy < img_h)) return std::nullopt;
    const double sx = std::floor(cx * depth_w / img_w);
    const double sy = std::floor(cy * depth_h / img_h);
    const int dx = static_cast<int>(std::clamp(sx, 0.0, static_cast<double>(depth_w - 1)));
    const int dy = static_cast<int>(std::clamp(sy, 0.0, static_cast<double>(depth_h - 1)));
    return DepthXY{dx, dy};
}

double sample_depth(const DepthMap& map, int dx, int dy) {
    if (dx < 0 || dy < 0 || dx >= map.width() || dy >= map.height()) {
        throw std::out_of_range(fmt::format("depth cell ({}, {}) outside {}x{}", dx, dy, map.width(), map.height()));
    }
    return map.values()[static_cast<std::size_t>(dy) * static_cast<std::size_t>(map.width()) +
                        static_cast<std::size_t>(dx)];
}

namespace {

std::string normalize_name(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    std::string out = b == std::string_view::npos ? std::string() : std::string(s.substr(b, e - b + 1));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

DepthInfo augment_clip(const ClipRecord& clip, const SceneMetaRecord& meta, std::span<const int> sampled_frames,
                       const DepthSource& source, StatusLedger* ledger) {
    if (ledger) ledger->enter(clip.clip_id, Stage::depth);

    DepthInfo info;
    std::map<int, Expected<DepthMap, DepthLoadError>> cache;
    auto load = [&](int frame) -> const Expected<DepthMap, DepthLoadError>& {
        auto it = cache.find(frame);
        if (it == cache.end()) {
            it = cache.emplace(frame, load_depth_map(source.depth_root / depth_file_name(clip.clip_id, frame))).first;
        }
        return it->second;
    };

    const int default_frame = sampled_frames.empty() ? 0 : sampled_frames.front();
    std::set<std::string> grounded_labels;

    for (const auto& g : clip.groundings) {
        grounded_labels.insert(normalize_name(g.label));
        const int frame = g.frame_index.value_or(default_frame);
        const PixelPoint c = g.center();

        auto entry = [&]() -> DepthEntry {
            if (frame < 0 || frame >= static_cast<int>(clip.frame_refs.size()) ||
                !(c.x >= 0.0 && c.x < clip.frame_width && c.y >= 0.0 && c.y < clip.frame_height)) {
                return DepthEntry::failure(g.label, DepthStatus::out_of_grounding);
            }
            std::error_code ec;
            if (source.depth_root.empty() ||
                !fs::is_regular_file(source.depth_root / depth_file_name(clip.clip_id, frame), ec)) {
                return DepthEntry::failure(g.label, DepthStatus::npz_missing, frame);
            }
            const fs::path frame_path = source.frame_root / clip.frame_refs[static_cast<std::size_t>(frame)];
            if (!fs::is_regular_file(frame_path, ec)) {
                return DepthEntry::failure(g.label, DepthStatus::image_missing, frame);
            }
            const auto& map = load(frame);
            if (!map) return DepthEntry::failure(g.label, DepthStatus::npz_corrupted, frame);

            auto xy = map_center(c.x, c.y, clip.frame_width, clip.frame_height, map->width(), map->height());
            if (!xy) return DepthEntry::failure(g.label, DepthStatus::out_of_grounding, frame);
            const double meters = sample_depth(*map, xy->x, xy->y);
            if (!(meters > 0.0)) return DepthEntry::failure(g.label, DepthStatus::npz_corrupted, frame);
            return DepthEntry::success(g.label, meters, *xy, frame);
        }();
        info.entries.insert_or_assign(g.object_id, std::move(entry));
    }

    std::vector<std::string> scene_objects{meta.scene_elements.main_object};
    scene_objects.insert(scene_objects.end(), meta.scene_elements.other_objects.begin(),
                         meta.scene_elements.other_objects.end());
    for (const auto& name : scene_objects) {
        if (grounded_labels.count(normalize_name(name)) || info.entries.count(name)) continue;
        info.entries.emplace(name, DepthEntry::failure(name, DepthStatus::out_of_grounding));
    }

    if (ledger) ledger->record(clip.clip_id, Stage::depth, Outcome::accepted());
    return info;
}

std::vector<DepthFileReport> check_depth_dir(const fs::path& clip_dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(clip_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".dpth") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<DepthFileReport> reports;
    for (const auto& path : files) {
        DepthFileReport r;
        r.path = path;
        auto map = load_depth_map(path);
        if (!map) {
            r.problem = map.error().detail;
        } else {
            r.width = map->width();
            r.height = map->height();
            auto [lo, hi] = std::minmax_element(map->values().begin(), map->values().end());
            r.min_meters = *lo;
            r.max_meters = *hi;
            r.ok = r.min_meters > 0.0;
            if (!r.ok) r.problem = "contains non-positive depth";
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace forge::depth
