#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "forge/meta/annotator.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace forge::meta {

namespace {

std::optional<std::string> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

StubAnnotator::StubAnnotator(std::string id, std::map<std::string, Response> responses)
    : id_(std::move(id)), responses_(std::move(responses)) {}

StubAnnotator::StubAnnotator(std::string id, std::filesystem::path directory)
    : id_(std::move(id)), directory_(std::move(directory)) {}

std::string StubAnnotator::annotate(const AnnotatorRequest& request) const {
    if (directory_) {
        if (auto err = read_file(*directory_ / (request.clip_id + ".error"))) {
            throw ClientError(fmt::format("injected failure for {}: {}", request.clip_id, *err));
        }
        if (auto text = read_file(*directory_ / (request.clip_id + ".json"))) return *text;
        throw ClientError(fmt::format("no fixture response for {}", request.clip_id));
    }
    auto it = responses_.find(request.clip_id);
    if (it == responses_.end()) throw ClientError(fmt::format("no fixture response for {}", request.clip_id));
    if (it->second.transport_failure) throw ClientError(it->second.text);
    return it->second.text;
}

HttpAnnotator::HttpAnnotator(HttpAnnotatorConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument(fmt::format("annotator endpoint '{}' has no scheme", config_.endpoint));
    }
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        base_url_ = config_.endpoint;
        path_ = "/";
    } else {
        base_url_ = config_.endpoint.substr(0, path_start);
        path_ = config_.endpoint.substr(path_start);
    }
}

std::string HttpAnnotator::request_body(const AnnotatorRequest& request, const std::string& model) {
    nlohmann::ordered_json body;
    body["prompt_id"] = request.prompt_id;
    body["clip_id"] = request.clip_id;
    body["frame_refs"] = request.frame_refs;
    body["model"] = model;
    return body.dump();
}

std::string HttpAnnotator::annotate(const AnnotatorRequest& request) const {
    // One client per call: httplib clients are not safe to share across threads.
    httplib::Client client(base_url_);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!config_.auth_token.empty()) headers.emplace("Authorization", "Bearer " + config_.auth_token);

    auto res = client.Post(path_, headers, request_body(request, config_.model), "application/json");
    if (!res) {
        throw ClientError(fmt::format("{}: transport error: {}", config_.annotator_id, httplib::to_string(res.error())));
    }
    if (res->status != 200) {
        throw ClientError(fmt::format("{}: HTTP status {}", config_.annotator_id, res->status));
    }
    return res->body;
}

}  // namespace forge::meta
