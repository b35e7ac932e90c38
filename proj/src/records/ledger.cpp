#include "forge/records/ledger.hpp"

#include <chrono>

#include "json_fields.hpp"

namespace forge {

using detail::fail;
using detail::Json;
using detail::OrderedJson;

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::ingest: return "ingest";
        case Stage::meta: return "meta";
        case Stage::depth: return "depth";
        case Stage::qa: return "qa";
    }
    return "unknown";
}

std::optional<Stage> stage_from_string(std::string_view name) {
    for (Stage s : kAllStages) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

std::string_view to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::accepted: return "accepted";
        case OutcomeKind::rejected: return "rejected";
        case OutcomeKind::failed: return "failed";
    }
    return "unknown";
}

namespace {

OrderedJson entry_json(const LedgerEntry& e, bool with_timestamp) {
    OrderedJson doc;
    doc["clip_id"] = e.clip_id;
    doc["stage"] = std::string(to_string(e.stage));
    doc["outcome"] = std::string(to_string(e.outcome.kind));
    if (e.outcome.kind != OutcomeKind::accepted) doc["reason"] = e.outcome.reason;
    if (with_timestamp) doc["timestamp_ms"] = e.timestamp_ms;
    return doc;
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string serialize_ledger_entry(const LedgerEntry& entry) {
    return detail::dump_line(entry_json(entry, true));
}

std::string serialize_ledger_entry_canonical(const LedgerEntry& entry) {
    return detail::dump_line(entry_json(entry, false));
}

Expected<LedgerEntry, FormatError> parse_ledger_entry(std::string_view line) {
    try {
        Json doc = detail::parse_object_line(line);
        LedgerEntry e;
        e.clip_id = detail::get_string(doc, "clip_id");
        auto stage = stage_from_string(detail::get_string(doc, "stage"));
        if (!stage) fail(FormatErrorCode::out_of_range, "unknown stage");
        e.stage = *stage;
        const std::string kind = detail::get_string(doc, "outcome");
        if (kind == "accepted") {
            e.outcome = Outcome::accepted();
        } else if (kind == "rejected") {
            e.outcome = Outcome::rejected(detail::get_string(doc, "reason"));
        } else if (kind == "failed") {
            e.outcome = Outcome::failed(detail::get_string(doc, "reason"));
        } else {
            fail(FormatErrorCode::out_of_range, "unknown outcome");
        }
        e.timestamp_ms = detail::get_integer(doc, "timestamp_ms");
        return e;
    } catch (const detail::FormatFailure& f) {
        return Unexpected(FormatError{f.code, f.detail});
    }
}

void StatusLedger::enter(const std::string& clip_id, Stage stage) {
    std::lock_guard lock(mutex_);
    if (!entered_.emplace(clip_id, stage).second) {
        throw LedgerError(fmt::format("{} entered stage {} twice", clip_id, to_string(stage)));
    }
}

void StatusLedger::record(const std::string& clip_id, Stage stage, Outcome outcome) {
    std::lock_guard lock(mutex_);
    record_locked(clip_id, stage, std::move(outcome));
}

void StatusLedger::enter_and_record(const std::string& clip_id, Stage stage, Outcome outcome) {
    std::lock_guard lock(mutex_);
    if (!entered_.emplace(clip_id, stage).second) {
        throw LedgerError(fmt::format("{} entered stage {} twice", clip_id, to_string(stage)));
    }
    record_locked(clip_id, stage, std::move(outcome));
}

void StatusLedger::record_locked(const std::string& clip_id, Stage stage, Outcome outcome) {
    if (!entered_.count({clip_id, stage})) {
        throw LedgerError(fmt::format("{} has not entered stage {}", clip_id, to_string(stage)));
    }
    if (!terminal_.emplace(clip_id, stage).second) {
        throw LedgerError(fmt::format("{} already has a terminal entry for {}", clip_id, to_string(stage)));
    }
    entries_.push_back(LedgerEntry{clip_id, stage, std::move(outcome), now_ms()});
}

std::vector<LedgerEntry> StatusLedger::snapshot() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

StageCounts StatusLedger::counts(Stage stage) const {
    std::lock_guard lock(mutex_);
    StageCounts c;
    for (const auto& key : entered_) {
        if (key.second == stage) ++c.entered;
    }
    for (const auto& e : entries_) {
        if (e.stage != stage) continue;
        switch (e.outcome.kind) {
            case OutcomeKind::accepted: ++c.accepted; break;
            case OutcomeKind::rejected: ++c.rejected; break;
            case OutcomeKind::failed: ++c.failed; break;
        }
    }
    return c;
}

std::size_t StatusLedger::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

}  // namespace forge
