#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtec/interval.hpp"
#include "rtec/record.hpp"
#include "rtec/rule_language.hpp"
#include "rtec/sde_store.hpp"

namespace rtec {

enum class ReportMode { Asap, Partial, Final };
enum class Stability { Open, Partial, Final };

const char* to_string(ReportMode m);
const char* to_string(Stability s);
/// Accepts asap, partial (or partial_stable) and final.
ReportMode parse_report_mode(std::string_view s);

struct EngineConfig {
    Timepoint wm = 250;
    Timepoint step = 125;
    ReportMode mode = ReportMode::Asap;
    double tick_ms = 40.0;

    /// Throws std::invalid_argument on nonpositive sizes or wm < step.
    void validate() const;
};

struct EngineOptions {
    /// Members of domains declared `= input`, by domain name.
    std::map<std::string, std::vector<std::string>> domains;
    /// This engine evaluates units assigned to shard `shard_index` of `shard_count`.
    std::size_t shard_count = 1;
    std::size_t shard_index = 0;
};

struct ResultEntry {
    std::string name;
    std::vector<std::string> args;
    std::string value;
    Interval interval;
    Stability stability = Stability::Open;

    friend bool operator==(const ResultEntry&, const ResultEntry&) = default;
};

/// Orders by name, args, value, then start.
bool entry_less(const ResultEntry& a, const ResultEntry& b);

struct RecognitionResult {
    Timepoint q = 0;
    std::vector<ResultEntry> entries;
};

/// A grounded fluent or event: the unit of evaluation and of sharding.
struct Unit {
    SymbolId name = 0;
    Args args;
    friend bool operator==(const Unit&, const Unit&) = default;
};

/// State visible to a reference evaluator: what the last query saw.
struct EngineSnapshot {
    Timepoint q = 0;
    Timepoint boundary = 0;
    std::vector<SdeStore::Fact> facts;
    /// Input fluent-values that held at the boundary point itself.
    std::vector<GroundKey> held_at_boundary;
    /// Simple fluent-values carried across the boundary: raw initiation point.
    std::unordered_map<GroundKey, Timepoint, GroundKeyHash> kept_starts;
    /// Statically determined fluent-values carried across the boundary.
    std::unordered_map<GroundKey, Interval, GroundKeyHash> prefixes;
    /// Computed fluent-value lists and derived event times for required units.
    std::unordered_map<GroundKey, IntervalList, GroundKeyHash> fluents;
    std::unordered_map<GroundKey, std::vector<Timepoint>, GroundKeyHash> events;
    std::vector<Unit> owned;
    std::vector<Unit> required;
};

/// Windowed recognition over one event description. Not thread-safe; run one
/// instance per thread.
class Engine {
public:
    using HistorySink = std::function<void(const ResultEntry&, Timepoint q)>;

    Engine(const EventDescription& ed, EngineConfig cfg, EngineOptions opts = {});
    ~Engine();
    Engine(Engine&&) noexcept;
    Engine& operator=(Engine&&) noexcept;

    /// Buffers records; they take effect at the next query, in arrival order.
    void ingest(std::span<const InputRecord> records);
    void ingest(const InputRecord& record);

    /// Runs the query at `qi`, which must equal next_query().
    RecognitionResult query(Timepoint qi);
    RecognitionResult query_next() { return query(next_query()); }
    Timepoint next_query() const;

    const EngineConfig& config() const;
    const EventDescription& description() const;

    /// Warnings accumulated since the last clear.
    const std::vector<Diagnostic>& diagnostics() const;
    void clear_diagnostics();

    /// Receives intervals of owned units as they leave the window.
    void set_history_sink(HistorySink sink);

    EngineSnapshot snapshot() const;
    std::size_t resident_facts() const;
    /// Earliest timepoint of any resident fact, or kOpen when empty.
    Timepoint earliest_resident() const;
    std::size_t owned_unit_count() const;
    /// Number of argument groups that shards are dealt from.
    std::size_t shard_groups() const;

    SymbolId intern(std::string_view s);
    Value value_of(std::string_view s);
    std::string text_of(const Value& v) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rtec
