#include "forge/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace forge::pipeline {

namespace {

using Json = nlohmann::json;

struct Bad {
    ConfigError error;
};

[[noreturn]] void bad(std::string field, std::string message) {
    throw Bad{{ConfigErrorKind::invalid, std::move(field), std::move(message)}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.empty() || path.is_absolute() || base.empty()) return path;
    return base / path;
}

double number(const Json& j, const std::string& field) {
    if (!j.is_number()) bad(field, "expected a number");
    return j.get<double>();
}

long long integer(const Json& j, const std::string& field) {
    if (!j.is_number_integer()) bad(field, "expected an integer");
    return j.get<long long>();
}

std::string string(const Json& j, const std::string& field) {
    if (!j.is_string()) bad(field, "expected a string");
    return j.get<std::string>();
}

bool boolean(const Json& j, const std::string& field) {
    if (!j.is_boolean()) bad(field, "expected true or false");
    return j.get<bool>();
}

AnnotatorSpec parse_annotator(const Json& j, const std::string& prefix, const std::filesystem::path& base) {
    if (!j.is_object()) bad(prefix, "expected an object");
    AnnotatorSpec spec;
    for (const auto& [key, value] : j.items()) {
        const std::string field = prefix + "." + key;
        if (key == "mode") {
            const std::string mode = string(value, field);
            if (mode == "stub") {
                spec.mode = AnnotatorMode::stub;
            } else if (mode == "http") {
                spec.mode = AnnotatorMode::http;
            } else {
                bad(field, "expected \"stub\" or \"http\"");
            }
        } else if (key == "id") {
            spec.id = string(value, field);
        } else if (key == "fixtures") {
            spec.fixtures = resolve(base, string(value, field));
        } else if (key == "endpoint") {
            spec.endpoint = string(value, field);
        } else if (key == "model") {
            spec.model = string(value, field);
        } else if (key == "auth_token") {
            spec.auth_token = string(value, field);
        } else if (key == "timeout_seconds") {
            spec.timeout_seconds = static_cast<int>(integer(value, field));
        } else {
            bad(field, "unknown key");
        }
    }
    return spec;
}

RunConfig parse(const Json& root, const std::filesystem::path& base) {
    if (!root.is_object()) bad("<root>", "config must be a JSON object");
    RunConfig cfg;
    cfg.output_dir = resolve(base, cfg.output_dir.string());
    cfg.frame_root = base;
    bool have_annotators = false;
    for (const auto& [key, value] : root.items()) {
        if (key == "manifest") {
            cfg.manifest = resolve(base, string(value, key));
        } else if (key == "output_dir") {
            cfg.output_dir = resolve(base, string(value, key));
        } else if (key == "q_min") {
            cfg.gate.q_min = number(value, key);
        } else if (key == "m_max") {
            cfg.gate.m_max = number(value, key);
        } else if (key == "lambda_trans") {
            cfg.gate.lambda_trans = number(value, key);
        } else if (key == "allow_missing_poses") {
            cfg.gate.allow_missing_poses = boolean(value, key);
        } else if (key == "frames_per_clip") {
            cfg.frames_per_clip = static_cast<int>(integer(value, key));
        } else if (key == "annotators") {
            if (!value.is_array()) bad(key, "expected an array");
            have_annotators = true;
            for (std::size_t i = 0; i < value.size(); ++i) {
                cfg.annotators.push_back(parse_annotator(value[i], fmt::format("annotators[{}]", i), base));
            }
        } else if (key == "prompt_id") {
            cfg.prompt_id = string(value, key);
        } else if (key == "max_response_bytes") {
            const long long n = integer(value, key);
            if (n < 1) bad(key, "must be at least 1");
            cfg.max_response_bytes = static_cast<std::size_t>(n);
        } else if (key == "min_agreement") {
            cfg.min_agreement = number(value, key);
        } else if (key == "depth_root") {
            cfg.depth_root = resolve(base, string(value, key));
        } else if (key == "frame_root") {
            cfg.frame_root = resolve(base, string(value, key));
        } else if (key == "default_budget") {
            cfg.default_budget = static_cast<int>(integer(value, key));
        } else if (key == "budgets") {
            if (!value.is_object()) bad(key, "expected an object of family -> count");
            for (const auto& [name, n] : value.items()) {
                const std::string field = "budgets." + name;
                const auto family = qa::family_from_string(name);
                if (!family) bad(field, "unknown QA family");
                cfg.budgets[*family] = static_cast<int>(integer(n, field));
            }
        } else if (key == "max_per_clip") {
            cfg.max_per_clip = static_cast<int>(integer(value, key));
        } else if (key == "seed") {
            if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0)) {
                bad(key, "expected a non-negative integer");
            }
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(integer(value, key));
        } else {
            bad(key, "unknown key");
        }
    }
    if (!have_annotators) {
        AnnotatorSpec spec;
        spec.id = "stub";
        spec.fixtures = resolve(base, "annotations");
        cfg.annotators.push_back(spec);
    }
    return cfg;
}

}  // namespace

int RunConfig::budget_for(qa::QAFamily family) const {
    const auto it = budgets.find(family);
    return it == budgets.end() ? default_budget : it->second;
}

std::optional<ConfigError> validate_run_config(const RunConfig& c) {
    auto err = [](std::string field, std::string message) {
        return ConfigError{ConfigErrorKind::invalid, std::move(field), std::move(message)};
    };
    if (c.manifest.empty()) return err("manifest", "required");
    if (c.output_dir.empty()) return err("output_dir", "must not be empty");
    if (!(c.gate.q_min >= 0.0 && c.gate.q_min <= 1.0)) return err("q_min", "must lie in [0, 1]");
    if (!(c.gate.m_max >= 0.0)) return err("m_max", "must be >= 0");
    if (!(c.gate.lambda_trans >= 0.0)) return err("lambda_trans", "must be >= 0");
    if (c.frames_per_clip < 1) return err("frames_per_clip", "must be >= 1");
    if (c.annotators.empty()) return err("annotators", "at least one annotator is required");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < c.annotators.size(); ++i) {
        const auto& a = c.annotators[i];
        const std::string prefix = fmt::format("annotators[{}]", i);
        if (a.id.empty()) return err(prefix + ".id", "required");
        if (!ids.insert(a.id).second) return err(prefix + ".id", "duplicate annotator id");
        if (a.mode == AnnotatorMode::stub && a.fixtures.empty()) return err(prefix + ".fixtures", "required in stub mode");
        if (a.mode == AnnotatorMode::http) {
            if (a.endpoint.rfind("http://", 0) != 0 && a.endpoint.rfind("https://", 0) != 0) {
                return err(prefix + ".endpoint", "expected an http:// or https:// URL");
            }
            if (a.timeout_seconds < 1) return err(prefix + ".timeout_seconds", "must be >= 1");
        }
    }
    if (c.max_response_bytes < 1) return err("max_response_bytes", "must be at least 1");
    if (!(c.min_agreement >= 0.0 && c.min_agreement <= 1.0)) return err("min_agreement", "must lie in [0, 1]");
    if (c.default_budget < 0) return err("default_budget", "must be >= 0");
    for (const auto& [family, n] : c.budgets) {
        if (n < 0) return err("budgets." + std::string(qa::to_string(family)), "must be >= 0");
    }
    if (c.max_per_clip < 0) return err("max_per_clip", "must be >= 0");
    if (c.workers < 1 || c.workers > 256) return err("workers", "must lie in [1, 256]");
    return std::nullopt;
}

Expected<RunConfig, ConfigError> parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::exception& e) {
        return Unexpected(ConfigError{ConfigErrorKind::invalid, "<root>", e.what()});
    }
    try {
        RunConfig cfg = parse(root, base_dir);
        if (auto e = validate_run_config(cfg)) return Unexpected(*e);
        return cfg;
    } catch (const Bad& b) {
        return Unexpected(b.error);
    } catch (const Json::exception& e) {
        return Unexpected(ConfigError{ConfigErrorKind::invalid, "<root>", e.what()});
    }
}

Expected<RunConfig, ConfigError> load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return Unexpected(ConfigError{ConfigErrorKind::io, path.string(), "cannot read config file"});
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path.parent_path());
}

std::string config_echo(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["manifest"] = c.manifest.string();
    j["output_dir"] = c.output_dir.string();
    j["q_min"] = c.gate.q_min;
    j["m_max"] = c.gate.m_max;
    j["lambda_trans"] = c.gate.lambda_trans;
    j["allow_missing_poses"] = c.gate.allow_missing_poses;
    j["frames_per_clip"] = c.frames_per_clip;
    auto annotators = nlohmann::ordered_json::array();
    for (const auto& a : c.annotators) {
        nlohmann::ordered_json aj;
        aj["mode"] = a.mode == AnnotatorMode::stub ? "stub" : "http";
        aj["id"] = a.id;
        if (a.mode == AnnotatorMode::stub) {
            aj["fixtures"] = a.fixtures.string();
        } else {
            aj["endpoint"] = a.endpoint;
            aj["model"] = a.model;
            aj["auth_token"] = a.auth_token.empty() ? "" : "<redacted>";
            aj["timeout_seconds"] = a.timeout_seconds;
        }
        annotators.push_back(aj);
    }
    j["annotators"] = annotators;
    j["prompt_id"] = c.prompt_id;
    j["max_response_bytes"] = c.max_response_bytes;
    j["min_agreement"] = c.min_agreement;
    j["depth_root"] = c.depth_root.string();
    j["frame_root"] = c.frame_root.string();
    j["default_budget"] = c.default_budget;
    nlohmann::ordered_json budgets = nlohmann::ordered_json::object();
    for (qa::QAFamily f : qa::kAllFamilies) budgets[std::string(qa::to_string(f))] = c.budget_for(f);
    j["budgets"] = budgets;
    j["max_per_clip"] = c.max_per_clip;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    return j.dump();
}

}  // namespace forge::pipeline
