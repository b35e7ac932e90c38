#include "forge/pipeline/run.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <optional>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "forge/depth/depth.hpp"
#include "forge/ingest/ingest.hpp"
#include "forge/meta/meta.hpp"
#include "forge/qa/render.hpp"

namespace forge::pipeline {

namespace {

struct ParsedLine {
    std::string ledger_id;  // clip_id, or line:N when the line cannot be used
    std::optional<ClipRecord> clip;
    std::string failure;  // set iff !clip
};

struct ClipResult {
    std::vector<QAExample> qa;
    bool internal_error = false;
};

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

// Sequential pre-pass so duplicate handling does not depend on scheduling.
std::vector<ParsedLine> parse_lines(const std::vector<std::string>& lines) {
    std::vector<ParsedLine> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (blank(lines[i])) continue;
        const std::string line_id = fmt::format("line:{}", i + 1);
        auto parsed = parse_clip_record(lines[i]);
        if (!parsed) {
            out.push_back({line_id, std::nullopt, std::string(to_string(parsed.error().code))});
        } else if (!seen.insert(parsed->clip_id).second || parsed->clip_id.rfind("line:", 0) == 0) {
            out.push_back({line_id, std::nullopt, "duplicate_clip_id"});
        } else {
            out.push_back({parsed->clip_id, std::move(*parsed), {}});
        }
    }
    return out;
}

ClipResult process_clip(const ClipRecord& clip, const RunConfig& cfg,
                        const std::vector<const meta::AnnotatorClient*>& clients, StatusLedger& ledger) {
    ClipResult result;
    const auto decision = ingest::gate_clip(clip, cfg.gate, &ledger);
    if (!decision.accepted) return result;

    const int n = static_cast<int>(clip.frame_refs.size());
    const std::vector<int> frames = ingest::sample_frame_indices(n, std::min(cfg.frames_per_clip, n));

    meta::ExtractConfig ecfg;
    ecfg.prompt_id = cfg.prompt_id;
    ecfg.max_response_bytes = cfg.max_response_bytes;
    ecfg.min_agreement = cfg.min_agreement;
    // The worker pool already parallelizes across clips.
    ecfg.parallel_annotators = false;
    const auto extracted = meta::extract_meta(clip, frames, clients, ecfg, &ledger);
    if (!extracted.ok()) return result;

    const depth::DepthSource source{cfg.depth_root, cfg.frame_root};
    std::vector<DepthInfo> depth_infos;
    for (std::size_t i = 0; i < extracted.records.size(); ++i) {
        depth_infos.push_back(
            depth::augment_clip(clip, extracted.records[i], frames, source, i == 0 ? &ledger : nullptr));
    }

    ledger.enter(clip.clip_id, Stage::qa);
    std::map<qa::QAFamily, int> budgets;
    for (qa::QAFamily f : qa::kAllFamilies) budgets[f] = cfg.budget_for(f);
    for (std::size_t i = 0; i < extracted.records.size(); ++i) {
        const auto& meta = extracted.records[i];
        auto eligible = qa::family_eligibility(meta, depth_infos[i], clip.auxiliary);
        const auto plan = qa::make_render_plan(clip.clip_id, std::move(eligible), budgets, cfg.max_per_clip,
                                               cfg.seed, frames);
        auto rendered = qa::render_qa(clip, meta, depth_infos[i], plan);
        if (!rendered) {
            ledger.record(clip.clip_id, Stage::qa, Outcome::failed("ineligible_family"));
            result.qa.clear();
            return result;
        }
        for (auto& ex : *rendered) result.qa.push_back(std::move(ex));
    }
    ledger.record(clip.clip_id, Stage::qa,
                  result.qa.empty() ? Outcome::rejected("no_examples") : Outcome::accepted());
    return result;
}

// Closes whichever stage a throwing clip left open so conservation still holds.
void close_open_stage(const std::string& clip_id, StatusLedger& ledger) {
    for (Stage s : kAllStages) {
        try {
            ledger.record(clip_id, s, Outcome::failed("internal_error"));
        } catch (const LedgerError&) {
            // not entered, or already terminal
        }
    }
}

std::string stage_status(const Outcome& o) {
    if (o.kind == OutcomeKind::accepted) return "accepted";
    return fmt::format("{}:{}", to_string(o.kind), o.reason);
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::string qa_text(const std::vector<QAExample>& qa) {
    std::vector<std::string> lines;
    lines.reserve(qa.size());
    for (const auto& ex : qa) lines.push_back(serialize_qa(ex));
    return join_lines(lines);
}

std::string ledger_text(const std::vector<LedgerEntry>& ledger, bool canonical) {
    std::vector<std::string> lines;
    lines.reserve(ledger.size());
    for (const auto& e : ledger) {
        lines.push_back(canonical ? serialize_ledger_entry_canonical(e) : serialize_ledger_entry(e));
    }
    return join_lines(lines);
}

bool write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    return static_cast<bool>(out);
}

}  // namespace

std::vector<std::unique_ptr<meta::AnnotatorClient>> make_annotators(const RunConfig& config) {
    std::vector<std::unique_ptr<meta::AnnotatorClient>> out;
    for (const auto& spec : config.annotators) {
        if (spec.mode == AnnotatorMode::stub) {
            out.push_back(std::make_unique<meta::StubAnnotator>(spec.id, spec.fixtures));
        } else {
            out.push_back(std::make_unique<meta::HttpAnnotator>(meta::HttpAnnotatorConfig{
                spec.id, spec.endpoint, spec.model, spec.auth_token, spec.timeout_seconds}));
        }
    }
    return out;
}

RunOutputs execute(const RunConfig& config, const std::vector<std::string>& manifest_lines,
                   const std::vector<const meta::AnnotatorClient*>& clients) {
    const std::vector<ParsedLine> parsed = parse_lines(manifest_lines);
    StatusLedger ledger;
    std::vector<ClipResult> results(parsed.size());

    for (std::size_t i = 0; i < parsed.size(); ++i) {
        if (!parsed[i].clip) {
            ledger.enter_and_record(parsed[i].ledger_id, Stage::ingest, Outcome::failed(parsed[i].failure));
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < parsed.size(); i = next++) {
            if (!parsed[i].clip) continue;
            try {
                results[i] = process_clip(*parsed[i].clip, config, clients, ledger);
            } catch (const std::exception&) {
                results[i] = ClipResult{{}, true};
                close_open_stage(parsed[i].ledger_id, ledger);
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(parsed.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }

    RunOutputs out;
    std::vector<std::size_t> order(parsed.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return parsed[a].ledger_id < parsed[b].ledger_id; });
    RunManifest& m = out.manifest;
    for (std::size_t i : order) {
        if (results[i].internal_error) ++m.internal_errors;
        for (auto& ex : results[i].qa) out.qa.push_back(std::move(ex));
    }

    out.ledger = ledger.snapshot();
    std::stable_sort(out.ledger.begin(), out.ledger.end(), [](const LedgerEntry& a, const LedgerEntry& b) {
        if (a.clip_id != b.clip_id) return a.clip_id < b.clip_id;
        return a.stage < b.stage;
    });

    m.clips_in = parsed.size();
    for (Stage s : kAllStages) m.stages[s] = ledger.counts(s);
    for (const auto& ex : out.qa) {
        if (auto f = qa::family_from_string(ex.family)) ++m.family_counts[*f];
    }
    m.qa_total = out.qa.size();
    for (const auto& e : out.ledger) m.clip_status[e.clip_id][e.stage] = stage_status(e.outcome);
    m.config_json = config_echo(config);

    m.file_digests["qa.jsonl"] = sha256_hex(qa_text(out.qa));
    m.file_digests["ledger.jsonl"] = sha256_hex(ledger_text(out.ledger, true));
    m.file_digests["stats.json"] = sha256_hex(stats_json(m));
    std::string all;
    for (const auto& [name, d] : m.file_digests) all += name + ":" + d + "\n";
    m.digest = sha256_hex(all);
    return out;
}

Expected<RunManifest, RunError> run_pipeline(const RunConfig& config) {
    std::ifstream in(config.manifest, std::ios::binary);
    if (!in) return Unexpected(RunError{RunErrorKind::startup, "cannot read manifest " + config.manifest.string()});
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    if (in.bad()) return Unexpected(RunError{RunErrorKind::startup, "error reading " + config.manifest.string()});

    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config.output_dir)) {
        return Unexpected(RunError{RunErrorKind::startup, "cannot create output directory " + config.output_dir.string()});
    }

    std::vector<std::unique_ptr<meta::AnnotatorClient>> owned;
    try {
        owned = make_annotators(config);
    } catch (const std::exception& e) {
        return Unexpected(RunError{RunErrorKind::startup, e.what()});
    }
    std::vector<const meta::AnnotatorClient*> clients;
    for (const auto& c : owned) clients.push_back(c.get());

    RunOutputs out = execute(config, lines, clients);
    const auto& dir = config.output_dir;
    const bool ok = write_file(dir / "qa.jsonl", qa_text(out.qa)) &&
                    write_file(dir / "ledger.jsonl", ledger_text(out.ledger, false)) &&
                    write_file(dir / "stats.json", stats_json(out.manifest)) &&
                    write_file(dir / "manifest.json", manifest_json(out.manifest));
    if (!ok) return Unexpected(RunError{RunErrorKind::output, "cannot write outputs under " + dir.string()});
    return out.manifest;
}

}  // namespace forge::pipeline
