#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rtec/engine.hpp"
#include "rtec/record.hpp"
#include "rtec/rule_language.hpp"

namespace rtec {

/// The surveillance rule pack shipped with the library.
std::string_view bundled_rules();

/// A stream ready for the query loop: every record carries an arrival,
/// coordinate samples have been turned into close records, and the members
/// of `= input` domains are known.
struct PreparedStream {
    std::vector<InputRecord> records;  // sorted by arrival, stable
    std::map<std::string, std::vector<std::string>> domains;
    Timepoint last_arrival = 0;
    /// Largest finite content timepoint, or the latest start of an open interval.
    Timepoint last_content = 0;
    std::size_t sde_count = 0;
};

/// Fills arrivals (a missing arrival means in order: the occurrence, or for
/// a bare retraction the previous record's arrival) and converts coord
/// records. A close tick becomes known once both samples have arrived; runs
/// are split where that happens in different query buckets of `step`.
/// Throws std::invalid_argument when coords are present without a threshold.
PreparedStream prepare_stream(std::span<const InputRecord> raw, const EventDescription& ed, Timepoint step,
                              std::optional<double> close_threshold);

/// First query time at which a record arriving at `arrival` is applied.
Timepoint bucket_of(Timepoint arrival, Timepoint step);

struct DriveOptions {
    EngineConfig config;
    std::size_t shards = 1;
    /// Keep querying until every content point has left the window, so that
    /// all intervals reach final stability.
    bool drain = true;
};

struct ShardRun {
    std::vector<RecognitionResult> results;
    std::vector<double> query_ms;
    std::vector<Diagnostic> diagnostics;
};

struct DriveOutput {
    /// Per query, the union of all shards' entries in entry order.
    std::vector<RecognitionResult> results;
    /// Per query, the slowest shard's recognition time.
    std::vector<double> query_ms;
    std::vector<ShardRun> shards;
    std::vector<Diagnostic> diagnostics;
    std::size_t shard_count = 1;
    double wall_ms = 0;
};

/// Query times visited for a stream: step, 2*step, ... up to the last bucket
/// holding a record, or further while draining.
std::vector<Timepoint> query_schedule(const PreparedStream& s, const EngineConfig& cfg, bool drain);

/// Runs one engine per shard over the full stream. The parallel form runs
/// shards concurrently, one OpenMP thread each; the serial form runs them one
/// after another and is the reference for tests. Shard counts above the number
/// of argument groups are clamped with a warning.
DriveOutput drive(const EventDescription& ed, const PreparedStream& s, const DriveOptions& opts);
DriveOutput drive_serial(const EventDescription& ed, const PreparedStream& s, const DriveOptions& opts);

/// Every entry that reached final stability, each reported once per run.
std::vector<ResultEntry> final_entries(std::span<const RecognitionResult> results);

struct GenSpec {
    std::size_t entities = 10;
    Timepoint duration = 4500;
    std::uint64_t seed = 1;
    std::size_t copies = 1;
    /// Activity intervals are delivered in pieces of at most this many ticks;
    /// 1 reports every frame, as a video tracker does.
    Timepoint chunk = 1;

    /// Throws std::invalid_argument unless entities >= 2, copies >= 1,
    /// duration >= 1 and chunk >= 1.
    void validate() const;
};

/// Synthetic tracker output: appear/disappear events, activity intervals
/// and per-tick coordinates. Copy c > 0 renames every entity with suffix
/// "_c<c>" and shifts it far enough that copies never come close.
std::vector<InputRecord> generate(const GenSpec& spec);

struct BenchReport {
    Timepoint wm = 0;
    Timepoint step = 0;
    std::size_t shards = 1;
    double avg_ms = 0;
    double p95_ms = 0;
    double max_ms = 0;
    /// Records per second of stream time.
    double sde_rate = 0;
    bool realtime = false;
};

/// Summarizes per-query times. `realtime` holds when the average is below
/// the step's wall budget (step * tick_ms).
BenchReport summarize(std::span<const double> query_ms, const EngineConfig& cfg, std::size_t shards,
                      double sde_rate);

struct BenchOptions {
    std::vector<Timepoint> wms;
    Timepoint step = 125;
    std::size_t shards = 1;
    double tick_ms = 40.0;
    /// Each WM is timed this many times and the fastest run is kept.
    std::size_t repeat = 1;
};

/// Per WM, timings cover the queries at which the window is full (all
/// queries when the stream is shorter than WM).
std::vector<BenchReport> bench(const EventDescription& ed, const PreparedStream& s, const BenchOptions& opts,
                               std::vector<Diagnostic>* diagnostics = nullptr);

void write_bench_csv(std::ostream& out, std::span<const BenchReport> reports);

}  // namespace rtec
