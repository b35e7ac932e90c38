#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/common/expected.hpp"
#include "forge/records/records.hpp"

namespace forge {

enum class Stage { ingest, meta, depth, qa };
inline constexpr std::array<Stage, 4> kAllStages{Stage::ingest, Stage::meta, Stage::depth, Stage::qa};

std::string_view to_string(Stage stage);
std::optional<Stage> stage_from_string(std::string_view name);

enum class OutcomeKind { accepted, rejected, failed };
std::string_view to_string(OutcomeKind kind);

struct Outcome {
    OutcomeKind kind = OutcomeKind::accepted;
    std::string reason;  // rejection reason or failure code; empty when accepted

    static Outcome accepted() { return {OutcomeKind::accepted, {}}; }
    static Outcome rejected(std::string reason) { return {OutcomeKind::rejected, std::move(reason)}; }
    static Outcome failed(std::string code) { return {OutcomeKind::failed, std::move(code)}; }

    bool operator==(const Outcome&) const = default;
};

struct LedgerEntry {
    std::string clip_id;
    Stage stage = Stage::ingest;
    Outcome outcome;
    std::int64_t timestamp_ms = 0;  // wall clock, milliseconds since the Unix epoch

    bool operator==(const LedgerEntry&) const = default;
};

std::string serialize_ledger_entry(const LedgerEntry& entry);
// Same as serialize_ledger_entry with the timestamp omitted; used for digests.
std::string serialize_ledger_entry_canonical(const LedgerEntry& entry);
Expected<LedgerEntry, FormatError> parse_ledger_entry(std::string_view line);

struct StageCounts {
    std::size_t entered = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t failed = 0;

    bool conserved() const { return accepted + rejected + failed == entered; }
    bool operator==(const StageCounts&) const = default;
};

class LedgerError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Append-only record of per-clip stage outcomes.
//
// A clip must enter() a stage before its terminal outcome is recorded, and
// records at most one terminal outcome per stage. All mutation goes through an
// internal mutex, so concurrent workers are serialized into a single writer;
// snapshot() gives readers a consistent copy.
class StatusLedger {
public:
    void enter(const std::string& clip_id, Stage stage);
    void record(const std::string& clip_id, Stage stage, Outcome outcome);
    // enter() + record() in one step.
    void enter_and_record(const std::string& clip_id, Stage stage, Outcome outcome);

    std::vector<LedgerEntry> snapshot() const;
    StageCounts counts(Stage stage) const;
    std::size_t size() const;

private:
    void record_locked(const std::string& clip_id, Stage stage, Outcome outcome);

    mutable std::mutex mutex_;
    std::vector<LedgerEntry> entries_;
    std::set<std::pair<std::string, Stage>> entered_;
    std::set<std::pair<std::string, Stage>> terminal_;
};

}  // namespace forge
