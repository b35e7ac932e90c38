#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge::meta {

struct AnnotatorRequest {
    std::string clip_id;
    std::vector<std::string> frame_refs;  // sampled frames only
    std::string prompt_id;
};

// Transport-level failure: the annotator could not produce a response at all.
class ClientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An annotator returns raw response text for a request. Implementations must
// be safe to call concurrently from several workers.
class AnnotatorClient {
public:
    virtual ~AnnotatorClient() = default;
    virtual std::string annotator_id() const = 0;
    // Throws ClientError on transport failure.
    virtual std::string annotate(const AnnotatorRequest& request) const = 0;
};

// Deterministic fixture-backed annotator.
//
// Responses come from an in-memory table, or from a directory holding
// <clip_id>.json (returned verbatim) and <clip_id>.error (forces a ClientError
// carrying the file's contents). Unknown clips raise ClientError. Stateless
// after construction.
class StubAnnotator final : public AnnotatorClient {
public:
    struct Response {
        std::string text;
        bool transport_failure = false;
    };

    StubAnnotator(std::string id, std::map<std::string, Response> responses);
    StubAnnotator(std::string id, std::filesystem::path directory);

    std::string annotator_id() const override { return id_; }
    std::string annotate(const AnnotatorRequest& request) const override;

private:
    std::string id_;
    std::map<std::string, Response> responses_;
    std::optional<std::filesystem::path> directory_;
};

struct HttpAnnotatorConfig {
    std::string annotator_id;
    std::string endpoint;  // scheme://host[:port]/path
    std::string model;
    std::string auth_token;
    int timeout_seconds = 120;
};

// POSTs {"prompt_id", "clip_id", "frame_refs", "model"} as JSON to the
// endpoint with a bearer token; a 200 response body is the annotation text.
class HttpAnnotator final : public AnnotatorClient {
public:
    explicit HttpAnnotator(HttpAnnotatorConfig config);

    std::string annotator_id() const override { return config_.annotator_id; }
    std::string annotate(const AnnotatorRequest& request) const override;

    static std::string request_body(const AnnotatorRequest& request, const std::string& model);

private:
    HttpAnnotatorConfig config_;
    std::string base_url_;
    std::string path_;
};

}  // namespace forge::meta
