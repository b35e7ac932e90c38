#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <atomic>
#include <thread>

#include <json.hpp>

#include "forge/meta/annotator.hpp"
#include "forge/meta/meta.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::meta;

namespace {

class CountingClient final : public AnnotatorClient {
public:
    CountingClient(std::string id, std::string text) : id_(std::move(id)), text_(std::move(text)) {}
    std::string annotator_id() const override { return id_; }
    std::string annotate(const AnnotatorRequest&) const override {
        ++calls;
        return text_;
    }
    mutable std::atomic<int> calls{0};

private:
    std::string id_;
    std::string text_;
};

SceneMetaRecord with_main(std::string main) {
    SceneMetaRecord r = testsupport::golden_meta_record(0);
    r.scene_elements.main_object = std::move(main);
    return r;
}

}  // namespace

TEST_SUITE("meta") {

TEST_CASE("golden text validates") {
    const auto rec = validate_meta_text(testsupport::golden_meta_text(), "stub-a");
    REQUIRE(rec.has_value());
    CHECK(rec->scene_elements.main_object == "mug");
    CHECK(rec->scene_elements.other_objects == std::vector<std::string>{"kettle", "cutting board"});
    CHECK(rec->scene_elements.environment == "kitchen counter");
    CHECK(rec->annotator_id == "stub-a");
}

TEST_CASE("every single mutation of the golden text is rejected with its code") {
    const auto cases = testsupport::golden_meta_mutations();
    CHECK(cases.size() == 11);
    for (const auto& c : cases) {
        CAPTURE(c.name);
        const auto r = validate_meta_text(c.text);
        REQUIRE_FALSE(r.has_value());
        CHECK(to_string(r.error().code) == c.expected_code);
        CHECK(r.error().field == c.expected_field);
    }
}

TEST_CASE("initial_layout deleted gives missing_field") {
    auto doc = nlohmann::json::parse(testsupport::golden_meta_text());
    doc["spatial_dynamics"].erase("initial_layout");
    const auto r = validate_meta_text(doc.dump());
    REQUIRE_FALSE(r.has_value());
    CHECK(r.error() == MetaError{MetaFailure::missing_field, "spatial_dynamics.initial_layout"});
}

TEST_CASE("invalid json, empty fields and failure priority") {
    CHECK(validate_meta_text("not json {").error().code == MetaFailure::invalid_json);
    CHECK(validate_meta_text("[1]").error().code == MetaFailure::invalid_json);

    auto doc = nlohmann::json::parse(testsupport::golden_meta_text());
    auto blank = doc;
    blank["scene_elements"]["environment"] = "   ";
    CHECK(validate_meta_text(blank.dump()).error() ==
          MetaError{MetaFailure::empty_field, "scene_elements.environment"});

    auto empty_list = doc;
    empty_list["scene_elements"]["other_objects"] = nlohmann::json::array();
    CHECK(validate_meta_text(empty_list.dump()).error().code == MetaFailure::empty_field);

    auto blank_item = doc;
    blank_item["scene_elements"]["visual_details"].push_back("");
    CHECK(validate_meta_text(blank_item.dump()).error().code == MetaFailure::empty_field);

    // unknown beats missing beats empty
    auto mixed = doc;
    mixed["spatial_dynamics"].erase("spatial_change");
    mixed["action_execution"]["instruction_brief"] = "";
    CHECK(validate_meta_text(mixed.dump()).error().code == MetaFailure::missing_field);
    mixed["extra"] = 1;
    CHECK(validate_meta_text(mixed.dump()).error() == MetaError{MetaFailure::unknown_field, "extra"});

    auto nested_unknown = doc;
    nested_unknown["scene_elements"]["color"] = "red";
    CHECK(validate_meta_text(nested_unknown.dump()).error() ==
          MetaError{MetaFailure::unknown_field, "scene_elements.color"});

    auto wrong_type = doc;
    wrong_type["scene_elements"]["main_object"] = 3;
    CHECK(validate_meta_text(wrong_type.dump()).error().code == MetaFailure::missing_field);
}

TEST_CASE("serialize_meta round trips through validation") {
    for (int s = 0; s < testsupport::kGoldenClips; ++s) {
        SceneMetaRecord r = testsupport::golden_meta_record(s);
        r.annotator_id = "x";
        const auto back = validate_meta_text(serialize_meta(r), "x");
        REQUIRE(back.has_value());
        CHECK(*back == r);
    }
}

TEST_CASE("cross-check agreement") {
    const SceneMetaRecord g = testsupport::golden_meta_record(0);
    std::vector<SceneMetaRecord> same{g, g, g};
    for (int i = 0; i < 3; ++i) same[i].annotator_id = "a" + std::to_string(i);
    const auto unanimous = cross_check(same, "c");
    CHECK(unanimous.annotator_count == 3);
    CHECK(unanimous.agreement.size() == 8);
    for (const auto& [field, v] : unanimous.agreement) CHECK(v == 1.0);

    std::vector<SceneMetaRecord> split{with_main("mug"), with_main("cup")};
    split[0].annotator_id = "a";
    split[1].annotator_id = "b";
    CHECK(cross_check(split).agreement.at("scene_elements.main_object") == 0.5);

    split[0].scene_elements.other_objects = {"a", "B"};
    split[1].scene_elements.other_objects = {"b", "c"};
    CHECK(cross_check(split).agreement.at("scene_elements.other_objects") == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(cross_check(std::vector<SceneMetaRecord>{}), std::invalid_argument);
    split[1].annotator_id = "a";
    CHECK_THROWS_AS(cross_check(split), std::invalid_argument);
}

TEST_CASE("agreement is invariant to annotator order") {
    std::vector<SceneMetaRecord> recs;
    for (int i = 0; i < 4; ++i) {
        SceneMetaRecord r = testsupport::golden_meta_record(i % 2);
        r.annotator_id = "a" + std::to_string(i);
        recs.push_back(r);
    }
    const auto forward = cross_check(recs).agreement;
    std::reverse(recs.begin(), recs.end());
    CHECK(cross_check(recs).agreement == forward);
    std::swap(recs[0], recs[2]);
    CHECK(cross_check(recs).agreement == forward);
}

TEST_CASE("extract_meta with a stub client") {
    const ClipRecord clip = testsupport::golden_clip(0);
    const std::vector<int> frames{0, 4, 8};
    StubAnnotator stub("stub-a", {{clip.clip_id, {testsupport::golden_meta_text(), false}}});
    const AnnotatorClient* clients[] = {&stub};
    StatusLedger ledger;
    const auto out = extract_meta(clip, frames, clients, ExtractConfig{}, &ledger);
    CHECK(out.ok());
    REQUIRE(out.records.size() == 1);
    CHECK(out.records[0].annotator_id == "stub-a");
    CHECK(ledger.snapshot().at(0).outcome == Outcome::accepted());
}

TEST_CASE("transport failure becomes client_error with a failed ledger entry") {
    const ClipRecord clip = testsupport::golden_clip(0);
    StubAnnotator stub("stub-a", {{clip.clip_id, {"connection reset", true}}});
    const AnnotatorClient* clients[] = {&stub};
    StatusLedger ledger;
    const std::vector<int> frames{0};
    const auto out = extract_meta(clip, frames, clients, ExtractConfig{}, &ledger);
    CHECK_FALSE(out.ok());
    REQUIRE(out.failure.has_value());
    CHECK(out.failure->code == MetaFailure::client_error);
    CHECK(ledger.snapshot().at(0).outcome == Outcome::failed("client_error"));
}

TEST_CASE("no frames short-circuits without calling the client") {
    const ClipRecord clip = testsupport::golden_clip(0);
    CountingClient client("c", testsupport::golden_meta_text());
    const AnnotatorClient* clients[] = {&client};
    StatusLedger ledger;
    const auto out = extract_meta(clip, {}, clients, ExtractConfig{}, &ledger);
    CHECK(out.failure->code == MetaFailure::no_frames);
    CHECK(client.calls == 0);
    CHECK(ledger.counts(Stage::meta) == StageCounts{1, 0, 0, 1});
}

TEST_CASE("oversized response is a generation_limit failure") {
    const ClipRecord clip = testsupport::golden_clip(0);
    CountingClient client("c", testsupport::golden_meta_text());
    const AnnotatorClient* clients[] = {&client};
    ExtractConfig cfg;
    cfg.max_response_bytes = 32;
    const std::vector<int> frames{0};
    CHECK(extract_meta(clip, frames, clients, cfg).failure->code == MetaFailure::generation_limit);
}

TEST_CASE("one failing annotator does not sink the others") {
    const ClipRecord clip = testsupport::golden_clip(0);
    CountingClient good("good", testsupport::golden_meta_text());
    CountingClient bad("bad", "{ nope");
    const AnnotatorClient* clients[] = {&bad, &good};
    const std::vector<int> frames{0};
    const auto out = extract_meta(clip, frames, clients, ExtractConfig{});
    CHECK(out.ok());
    CHECK(out.records.size() == 1);
    REQUIRE(out.annotator_failures.size() == 1);
    CHECK(out.annotator_failures[0].annotator_id == "bad");
    CHECK(out.annotator_failures[0].error.code == MetaFailure::invalid_json);
}

TEST_CASE("low agreement is a rejection") {
    const ClipRecord clip = testsupport::golden_clip(0);
    CountingClient a("a", serialize_meta(testsupport::golden_meta_record(0)));
    CountingClient b("b", serialize_meta(testsupport::golden_meta_record(1)));
    const AnnotatorClient* clients[] = {&a, &b};
    ExtractConfig cfg;
    cfg.min_agreement = 0.9;
    StatusLedger ledger;
    const std::vector<int> frames{0};
    const auto out = extract_meta(clip, frames, clients, cfg, &ledger);
    CHECK_FALSE(out.ok());
    CHECK(out.low_agreement);
    CHECK(ledger.snapshot().at(0).outcome == Outcome::rejected("low_agreement"));
}

TEST_CASE("stub annotator reads fixture directories") {
    testsupport::TempDir dir("stubdir");
    testsupport::write_text(dir.path() / "ok.json", "{}");
    testsupport::write_text(dir.path() / "broken.error", "injected");
    StubAnnotator stub("s", dir.path());
    CHECK(stub.annotate({"ok", {}, "p"}) == "{}");
    CHECK_THROWS_AS(stub.annotate({"broken", {}, "p"}), ClientError);
    CHECK_THROWS_AS(stub.annotate({"absent", {}, "p"}), ClientError);
}

TEST_CASE("http annotator against a local server") {
    httplib::Server server;
    std::string seen_body;
    std::string seen_auth;
    server.Post("/v1/annotate", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = req.body;
        seen_auth = req.get_header_value("Authorization");
        res.set_content(testsupport::golden_meta_text(), "application/json");
    });
    server.Post("/v1/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    HttpAnnotator client({"remote", base + "/v1/annotate", "annotator-model", "secret", 5});
    const std::string text = client.annotate({"clip-001", {"a.jpg", "b.jpg"}, "scene-meta-json-v1"});
    CHECK(validate_meta_text(text).has_value());
    CHECK(seen_auth == "Bearer secret");
    const auto body = nlohmann::json::parse(seen_body);
    CHECK(body.at("clip_id") == "clip-001");
    CHECK(body.at("prompt_id") == "scene-meta-json-v1");
    CHECK(body.at("frame_refs").size() == 2);
    CHECK(body.at("model") == "annotator-model");

    HttpAnnotator broken({"remote", base + "/v1/broken", "m", "", 5});
    CHECK_THROWS_AS(broken.annotate({"clip-001", {"a.jpg"}, "p"}), ClientError);

    server.stop();
    thread.join();

    HttpAnnotator down({"remote", base + "/v1/annotate", "m", "", 1});
    CHECK_THROWS_AS(down.annotate({"clip-001", {"a.jpg"}, "p"}), ClientError);
}

}  // TEST_SUITE
