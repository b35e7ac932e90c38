// forge: command-line entry point.
//
// Exit codes: 0 success, 1 check failed or internal error, 2 config/usage
// error, 3 startup I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "forge/depth/depth.hpp"
#include "forge/kernel/certify.hpp"
#include "forge/meta/meta.hpp"
#include "forge/pipeline/config.hpp"
#include "forge/pipeline/run.hpp"
#include "forge/pipeline/stats.hpp"

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitStartup = 3;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct RunOverrides {
    std::string config;
    std::optional<double> q_min;
    std::optional<double> m_max;
    std::optional<double> lambda_trans;
    std::optional<int> frames_per_clip;
    bool allow_missing_poses = false;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
};

int cmd_run(const RunOverrides& o) {
    auto loaded = forge::pipeline::load_run_config(o.config);
    if (!loaded) {
        const auto& e = loaded.error();
        fmt::print(stderr, "config error: {}: {}\n", e.field, e.message);
        return e.kind == forge::pipeline::ConfigErrorKind::io ? kExitStartup : kExitConfig;
    }
    forge::pipeline::RunConfig cfg = std::move(*loaded);
    if (o.q_min) cfg.gate.q_min = *o.q_min;
    if (o.m_max) cfg.gate.m_max = *o.m_max;
    if (o.lambda_trans) cfg.gate.lambda_trans = *o.lambda_trans;
    if (o.frames_per_clip) cfg.frames_per_clip = *o.frames_per_clip;
    if (o.allow_missing_poses) cfg.gate.allow_missing_poses = true;
    if (o.workers) cfg.workers = *o.workers;
    if (o.seed) cfg.seed = *o.seed;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (auto e = forge::pipeline::validate_run_config(cfg)) {
        fmt::print(stderr, "config error: {}: {}\n", e->field, e->message);
        return kExitConfig;
    }

    auto result = forge::pipeline::run_pipeline(cfg);
    if (!result) {
        fmt::print(stderr, "error: {}\n", result.error().message);
        return kExitStartup;
    }
    std::cout << forge::pipeline::report_stats(*result);
    if (result->internal_errors > 0) {
        fmt::print(stderr, "{} clip(s) hit internal errors\n", result->internal_errors);
        return kExitFailed;
    }
    return 0;
}

int cmd_validate(const std::string& path) {
    const auto text = read_file(path);
    if (!text) {
        fmt::print(stderr, "cannot read {}\n", path);
        return kExitStartup;
    }
    const auto result = forge::meta::validate_meta_text(*text);
    if (result) {
        fmt::print("ok\n");
        return 0;
    }
    fmt::print("{} {}\n", forge::meta::to_string(result.error().code), result.error().field);
    return kExitFailed;
}

int cmd_depth_check(const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) {
        fmt::print(stderr, "not a directory: {}\n", dir);
        return kExitStartup;
    }
    const auto reports = forge::depth::check_depth_dir(dir);
    int bad = 0;
    for (const auto& r : reports) {
        if (r.ok) {
            fmt::print("ok        {} {}x{} depth [{:.3f}, {:.3f}] m\n", r.path.filename().string(), r.width, r.height,
                       r.min_meters, r.max_meters);
        } else {
            ++bad;
            fmt::print("corrupted {} {}\n", r.path.filename().string(), r.problem);
        }
    }
    fmt::print("{} file(s), {} corrupted\n", reports.size(), bad);
    return bad ? kExitFailed : 0;
}

int cmd_kernel_check(int instances, std::uint64_t seed) {
    forge::kernel::CertifyOptions options;
    options.instances = instances;
    options.seed = seed;
    const auto report = forge::kernel::run_kernel_check(options);
    for (const auto& line : report.lines) {
        fmt::print("{} {:<28} {}\n", line.passed ? "PASS" : "FAIL", line.name, line.detail);
    }
    return report.passed() ? 0 : kExitFailed;
}

int cmd_stats(const std::string& path) {
    const auto text = read_file(path);
    if (!text) {
        fmt::print(stderr, "cannot read {}\n", path);
        return kExitStartup;
    }
    const auto manifest = forge::pipeline::parse_manifest_json(*text);
    if (!manifest) {
        fmt::print(stderr, "malformed run manifest: {}\n", manifest.error());
        return kExitFailed;
    }
    std::cout << forge::pipeline::report_stats(*manifest);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forge: egocentric clip to QA data pipeline"};
    app.require_subcommand(1);

    RunOverrides run;
    auto* run_cmd = app.add_subcommand("run", "run the full pipeline");
    run_cmd->add_option("--config", run.config, "config file (JSON)")->required();
    run_cmd->add_option("--q-min", run.q_min, "minimum quality score");
    run_cmd->add_option("--m-max", run.m_max, "maximum motion score");
    run_cmd->add_option("--lambda-trans", run.lambda_trans, "motion weight per meter of translation");
    run_cmd->add_option("--frames-per-clip", run.frames_per_clip, "frames sampled per clip");
    run_cmd->add_flag("--allow-missing-poses", run.allow_missing_poses, "accept clips without camera poses");
    run_cmd->add_option("--workers", run.workers, "worker threads");
    run_cmd->add_option("--seed", run.seed, "run seed");
    run_cmd->add_option("--output-dir", run.output_dir, "output directory");

    std::string meta_path;
    auto* validate_cmd = app.add_subcommand("validate", "validate one scene-meta JSON file");
    validate_cmd->add_option("meta_file", meta_path)->required();

    std::string clip_dir;
    auto* depth_cmd = app.add_subcommand("depth-check", "decode every depth file in a clip directory");
    depth_cmd->add_option("clip_dir", clip_dir)->required();

    int instances = 100;
    std::uint64_t kernel_seed = forge::kernel::CertifyOptions{}.seed;
    auto* kernel_cmd = app.add_subcommand("kernel-check", "randomized gradient-flow and mask checks");
    kernel_cmd->add_option("--instances", instances, "random instances for the gradient certificate");
    kernel_cmd->add_option("--seed", kernel_seed, "seed");

    std::string manifest_path;
    auto* stats_cmd = app.add_subcommand("stats", "print the funnel and family table of a run manifest");
    stats_cmd->add_option("manifest", manifest_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (run_cmd->parsed()) return cmd_run(run);
    if (validate_cmd->parsed()) return cmd_validate(meta_path);
    if (depth_cmd->parsed()) return cmd_depth_check(clip_dir);
    if (kernel_cmd->parsed()) return cmd_kernel_check(instances, kernel_seed);
    if (stats_cmd->parsed()) return cmd_stats(manifest_path);
    return kExitConfig;
}
