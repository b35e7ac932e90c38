#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>
#include <unistd.h>

#include "forge/depth/depth.hpp"

namespace testsupport {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::vector<std::string> lines;
    std::istringstream in(read_text(path));
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() / fmt::format("forge-test-{}-{}-{}", tag, ::getpid(), counter++);
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string golden_meta_text() { return read_text(fs::path(FIXTURE_DIR) / "golden_meta.json"); }

namespace {

struct Scene {
    const char* main;
    std::vector<std::string> others;
    std::vector<std::string> details;
    const char* environment;
    const char* layout;
    const char* change;
    const char* brief;
    const char* detailed;
};

const std::vector<Scene>& scenes() {
    static const std::vector<Scene> s = {
        {"mug",
         {"kettle", "cutting board"},
         {"white ceramic mug with a chipped rim", "steam rising from the kettle spout"},
         "kitchen counter",
         "the mug sits left of the kettle near the counter edge",
         "the mug ends up on the cutting board",
         "place the mug on the cutting board",
         "reach with the right hand, grasp the mug handle, lift it clear of the kettle and set it down on the board"},
        {"drawer",
         {"spoon", "towel"},
         {"wooden drawer front with a brass pull"},
         "kitchen cabinet",
         "the drawer is closed below the towel rail",
         "the drawer slides open and the spoon goes inside",
         "put the spoon in the drawer",
         "pull the drawer open by its handle, pick up the spoon and drop it into the tray"},
        {"bottle",
         {"glass", "tray"},
         {"green glass bottle with a screw cap", "clear tumbler on a metal tray"},
         "dining table",
         "the bottle stands behind the glass on the tray",
         "water moves from the bottle into the glass",
         "pour water into the glass",
         "unscrew the cap, tilt the bottle over the glass and stop when it is half full"},
        {"book",
         {"lamp", "shelf"},
         {"red hardcover book", "brass desk lamp"},
         "study desk",
         "the book lies flat beside the lamp",
         "the book stands upright on the shelf",
         "shelve the book",
         "pick up the book with both hands, turn it upright and slide it between the shelf dividers"},
        {"sponge",
         {"plate", "sink"},
         {"yellow sponge with a green scrub side", "white plate with food residue"},
         "kitchen sink",
         "the plate rests in the sink next to the sponge",
         "the plate is clean and moved to the rack",
         "wash the plate",
         "wet the sponge, scrub the plate in circles, rinse it and lift it out of the sink"},
    };
    return s;
}

}  // namespace

std::vector<MetaMutation> golden_meta_mutations() {
    const auto golden = nlohmann::ordered_json::parse(golden_meta_text());
    std::vector<MetaMutation> out;
    for (const auto& [top, leaves] : golden.items()) {
        for (const auto& [leaf, value] : leaves.items()) {
            auto doc = golden;
            doc[top].erase(leaf);
            out.push_back({"delete " + top + "." + leaf, doc.dump(), "missing_field", top + "." + leaf});
        }
    }
    for (const auto& [top, leaves] : golden.items()) {
        nlohmann::ordered_json doc;
        for (const auto& [key, value] : golden.items()) doc[key == top ? key + "_renamed" : key] = value;
        out.push_back({"rename " + top, doc.dump(), "unknown_field", top + "_renamed"});
    }
    return out;
}

forge::SceneMetaRecord golden_meta_record(int scene) {
    const Scene& s = scenes().at(static_cast<std::size_t>(scene));
    forge::SceneMetaRecord m;
    m.scene_elements.main_object = s.main;
    m.scene_elements.other_objects = s.others;
    m.scene_elements.visual_details = s.details;
    m.scene_elements.environment = s.environment;
    m.spatial_dynamics.initial_layout = s.layout;
    m.spatial_dynamics.spatial_change = s.change;
    m.action_execution.instruction_brief = s.brief;
    m.action_execution.execution_detailed = s.detailed;
    return m;
}

std::string meta_text(const forge::SceneMetaRecord& meta) { return forge::serialize_meta(meta); }

forge::ClipRecord golden_clip(int scene) {
    const Scene& s = scenes().at(static_cast<std::size_t>(scene));
    forge::ClipRecord clip;
    clip.clip_id = fmt::format("clip-{:03}", scene + 1);
    clip.source_dataset = "golden";
    for (int f = 0; f < 9; ++f) clip.frame_refs.push_back(fmt::format("{}/{:03}.jpg", clip.clip_id, f));
    clip.frame_width = kFrameWidth;
    clip.frame_height = kFrameHeight;
    std::vector<forge::Pose> poses;
    for (int f = 0; f < 9; ++f) poses.push_back(forge::Pose{forge::Quaternion{}, {0.01 * f, 0.0, 0.0}});
    clip.camera_poses = poses;
    clip.quality_score = 0.9;

    std::vector<std::string> objects{s.main};
    objects.insert(objects.end(), s.others.begin(), s.others.end());
    const double xs[] = {100.0, 300.0, 500.0};
    for (std::size_t i = 0; i < objects.size(); ++i) {
        forge::ObjectGrounding g;
        g.object_id = fmt::format("obj-{}", i + 1);
        g.label = objects[i];
        g.center_xy = forge::PixelPoint{xs[i % 3], 240.0};
        clip.groundings.push_back(g);
    }
    clip.auxiliary["scene_text_ocr"] = {{"What word is printed on the label?", "FRAGILE"}};
    clip.auxiliary["chart_data"] = {{"Which bar in the wall chart is tallest?", "March"}};
    clip.auxiliary["science_knowledge"] = {{"Why does the water level rise when the object is submerged?",
                                             "The object displaces its own volume of water."}};
    clip.auxiliary["visual_logic"] = {{"Which tile completes the pattern on the backsplash?", "The blue one."}};
    return clip;
}

float golden_depth_at(int x) { return 1.0f + 0.01f * static_cast<float>(x); }

fs::path write_golden_workspace(const fs::path& root, const WorkspaceOptions& options) {
    fs::create_directories(root);
    std::string manifest;
    std::vector<float> depth(static_cast<std::size_t>(kDepthWidth * kDepthHeight));
    for (int y = 0; y < kDepthHeight; ++y) {
        for (int x = 0; x < kDepthWidth; ++x) depth[static_cast<std::size_t>(y * kDepthWidth + x)] = golden_depth_at(x);
    }

    nlohmann::ordered_json annotators = nlohmann::ordered_json::array();
    for (int a = 0; a < options.annotators; ++a) {
        const std::string id = fmt::format("stub-{}", static_cast<char>('a' + a));
        annotators.push_back({{"mode", "stub"}, {"id", id}, {"fixtures", "annotations/" + id}});
    }

    for (int scene = 0; scene < kGoldenClips; ++scene) {
        const forge::ClipRecord clip = golden_clip(scene);
        manifest += forge::serialize_clip(clip) + "\n";
        for (const auto& ref : clip.frame_refs) write_text(root / "frames" / ref, "");
        if (options.with_depth) {
            for (int f = 0; f < static_cast<int>(clip.frame_refs.size()); ++f) {
                forge::depth::write_depth_file(root / "depth" / forge::depth::depth_file_name(clip.clip_id, f),
                                               kDepthWidth, kDepthHeight, depth);
            }
        }
        for (int a = 0; a < options.annotators; ++a) {
            forge::SceneMetaRecord meta = golden_meta_record(scene);
            // Later annotators disagree on one detail so agreement is below 1.
            if (a > 0) meta.scene_elements.visual_details.push_back(fmt::format("detail seen by annotator {}", a));
            write_text(root / "annotations" / fmt::format("stub-{}", static_cast<char>('a' + a)) /
                           (clip.clip_id + ".json"),
                       meta_text(meta));
        }
    }
    write_text(root / "clips.jsonl", manifest);

    nlohmann::ordered_json cfg;
    cfg["manifest"] = "clips.jsonl";
    cfg["output_dir"] = "out";
    cfg["frames_per_clip"] = 3;
    cfg["annotators"] = annotators;
    if (options.with_depth) cfg["depth_root"] = "depth";
    cfg["frame_root"] = "frames";
    cfg["default_budget"] = 1;
    cfg["seed"] = options.seed;
    cfg["workers"] = options.workers;
    write_text(root / "config.json", cfg.dump(2) + "\n");
    return root / "config.json";
}

forge::pipeline::RunConfig load_config(const fs::path& config_path) {
    auto cfg = forge::pipeline::load_run_config(config_path);
    if (!cfg) throw std::runtime_error("golden config rejected: " + cfg.error().field + ": " + cfg.error().message);
    return *cfg;
}

// Scans every cell and keeps the one whose image-space footprint holds the
// center; centers past the last footprint edge land in the last cell.
std::optional<std::pair<int, int>> brute_force_cell(double cx, double cy, int img_w, int img_h, int depth_w,
                                                    int depth_h) {
    if (img_w <= 0 || img_h <= 0 || depth_w <= 0 || depth_h <= 0) return std::nullopt;
    if (!(cx >= 0 && cx < img_w && cy >= 0 && cy < img_h)) return std::nullopt;
    auto axis = [](long double c, int img, int dep) {
        int best = 0;
        for (int i = 0; i < dep; ++i) {
            // footprint of cell i starts at i * img / dep
            if (static_cast<long double>(i) * img <= c * dep) best = i;
        }
        return best;
    };
    return std::make_pair(axis(cx, img_w, depth_w), axis(cy, img_h, depth_h));
}

std::vector<int> nested_loop_samples(int n, int k) {
    std::vector<int> out;
    if (k == 1) {
        out.push_back((n - 1) / 2);
        return out;
    }
    for (int j = 0; j < k; ++j) {
        // largest i with i * (k - 1) <= j * (n - 1)
        int i = 0;
        while ((i + 1) * (k - 1) <= j * (n - 1)) ++i;
        out.push_back(i);
    }
    return out;
}

double quaternion_angle_by_dot(const forge::Quaternion& a, const forge::Quaternion& b) {
    const double dot = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    return 2.0 * std::acos(std::min(1.0, std::abs(dot)));
}

}  // namespace testsupport
