#include "forge/pipeline/stats.hpp"

#include <array>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace forge::pipeline {

namespace {

using OJson = nlohmann::ordered_json;

OJson counts_json(const RunManifest& m) {
    OJson j;
    j["clips_in"] = m.clips_in;
    OJson stages = OJson::object();
    for (Stage s : kAllStages) {
        const auto it = m.stages.find(s);
        const StageCounts c = it == m.stages.end() ? StageCounts{} : it->second;
        stages[std::string(to_string(s))] = {
            {"entered", c.entered}, {"accepted", c.accepted}, {"rejected", c.rejected}, {"failed", c.failed}};
    }
    j["stages"] = stages;
    OJson families = OJson::object();
    for (qa::QAFamily f : qa::kAllFamilies) {
        const auto it = m.family_counts.find(f);
        if (it != m.family_counts.end() && it->second > 0) families[std::string(qa::to_string(f))] = it->second;
    }
    j["qa_families"] = families;
    j["qa_total"] = m.qa_total;
    return j;
}

}  // namespace

bool RunManifest::conserved() const {
    for (const auto& [stage, c] : stages) {
        if (!c.conserved()) return false;
    }
    return true;
}

bool RunManifest::funnel_monotone() const {
    auto get = [&](Stage s) {
        const auto it = stages.find(s);
        return it == stages.end() ? StageCounts{} : it->second;
    };
    for (std::size_t k = 0; k + 1 < kAllStages.size(); ++k) {
        if (get(kAllStages[k + 1]).entered != get(kAllStages[k]).accepted) return false;
    }
    return true;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr);
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
}

std::string stats_json(const RunManifest& m) { return counts_json(m).dump(2) + "\n"; }

std::string manifest_json(const RunManifest& m) {
    OJson j;
    j["counts"] = counts_json(m);
    OJson clips = OJson::object();
    for (const auto& [clip, stages] : m.clip_status) {
        OJson cj = OJson::object();
        for (const auto& [stage, status] : stages) cj[std::string(to_string(stage))] = status;
        clips[clip] = cj;
    }
    j["clips"] = clips;
    j["config"] = OJson::parse(m.config_json.empty() ? "{}" : m.config_json);
    j["file_digests"] = m.file_digests;
    j["digest"] = m.digest;
    j["internal_errors"] = m.internal_errors;
    return j.dump(2) + "\n";
}

Expected<RunManifest, std::string> parse_manifest_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        RunManifest m;
        const auto& counts = j.at("counts");
        m.clips_in = counts.at("clips_in").get<std::size_t>();
        for (const auto& [name, c] : counts.at("stages").items()) {
            const auto stage = stage_from_string(name);
            if (!stage) return Unexpected(std::string("unknown stage ") + name);
            m.stages[*stage] = StageCounts{c.at("entered").get<std::size_t>(), c.at("accepted").get<std::size_t>(),
                                           c.at("rejected").get<std::size_t>(), c.at("failed").get<std::size_t>()};
        }
        for (const auto& [name, n] : counts.at("qa_families").items()) {
            const auto family = qa::family_from_string(name);
            if (!family) return Unexpected(std::string("unknown QA family ") + name);
            m.family_counts[*family] = n.get<std::size_t>();
        }
        m.qa_total = counts.at("qa_total").get<std::size_t>();
        for (const auto& [clip, stages] : j.at("clips").items()) {
            for (const auto& [name, status] : stages.items()) {
                const auto stage = stage_from_string(name);
                if (!stage) return Unexpected(std::string("unknown stage ") + name);
                m.clip_status[clip][*stage] = status.get<std::string>();
            }
        }
        m.config_json = j.at("config").dump();
        m.file_digests = j.at("file_digests").get<std::map<std::string, std::string>>();
        m.digest = j.at("digest").get<std::string>();
        m.internal_errors = j.value("internal_errors", std::size_t{0});
        return m;
    } catch (const nlohmann::json::exception& e) {
        return Unexpected(std::string(e.what()));
    }
}

std::string report_stats(const RunManifest& m) {
    std::string out = fmt::format("clips in: {}\n\n", m.clips_in);
    out += fmt::format("{:<8} {:>8} {:>8} {:>8} {:>8}\n", "stage", "entered", "accepted", "rejected", "failed");
    for (Stage s : kAllStages) {
        const auto it = m.stages.find(s);
        const StageCounts c = it == m.stages.end() ? StageCounts{} : it->second;
        out += fmt::format("{:<8} {:>8} {:>8} {:>8} {:>8}\n", to_string(s), c.entered, c.accepted, c.rejected,
                           c.failed);
    }
    out += fmt::format("\n{:<28} {:>8}\n", "family", "examples");
    std::size_t total = 0;
    for (qa::QAFamily f : qa::kAllFamilies) {
        const auto it = m.family_counts.find(f);
        if (it == m.family_counts.end() || it->second == 0) continue;
        out += fmt::format("{:<28} {:>8}\n", qa::to_string(f), it->second);
        total += it->second;
    }
    out += fmt::format("{:<28} {:>8}\n", "total", total);
    if (!m.digest.empty()) out += fmt::format("\ndigest: {}\n", m.digest);
    return out;
}

}  // namespace forge::pipeline
