#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtec/engine.hpp"
#include "rtec/record.hpp"
#include "rtec/rule_language.hpp"

namespace rtec {

/// Malformed input line; the message starts with "line N:".
class StreamError : public std::runtime_error {
public:
    StreamError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Parses JSONL records. Throws StreamError on schema violations and on an
/// assert whose id is already live; warnings (e.g. an update of an unknown
/// id) go to `diagnostics` when given.
std::vector<InputRecord> read_stream(std::istream& in, std::vector<Diagnostic>* diagnostics = nullptr);
std::vector<InputRecord> read_stream_file(const std::string& path, std::vector<Diagnostic>* diagnostics = nullptr);

void write_stream(std::ostream& out, std::span<const InputRecord> records);
void write_stream_file(const std::string& path, std::span<const InputRecord> records);

/// One JSON line per entry, ordered by q, name, args, value, start. Open
/// ends are written as null.
void write_results(std::ostream& out, std::span<const RecognitionResult> results);
void write_results_file(const std::string& path, std::span<const RecognitionResult> results);
std::string result_line(const ResultEntry& e, Timepoint q);

struct DelayModel {
    enum class Kind { None, Fixed, Uniform };

    Kind kind = Kind::None;
    Timepoint lo = 0;  // Fixed uses lo
    Timepoint hi = 0;
    std::uint64_t seed = 0;

    static DelayModel none() { return {}; }
    static DelayModel fixed(Timepoint d) { return {Kind::Fixed, d, d, 0}; }
    static DelayModel uniform(Timepoint lo, Timepoint hi, std::uint64_t seed) { return {Kind::Uniform, lo, hi, seed}; }
};

/// Sets arrival = occurrence + delay and sorts by (arrival, occurrence, id).
/// The None model returns the input unchanged.
std::vector<InputRecord> simulate_delays(std::vector<InputRecord> records, const DelayModel& model);

struct CoordSample {
    std::string entity;
    Timepoint t = 0;
    double x = 0;
    double y = 0;
};

/// close(A, B) = true holds at t when both entities are sampled at t and lie
/// within `threshold` pixels. Each unordered pair is computed once and
/// reported in both argument orders as maximal interval records.
std::vector<InputRecord> closeness(std::span<const CoordSample> samples, double threshold);
/// Single-threaded reference for `closeness`.
std::vector<InputRecord> closeness_serial(std::span<const CoordSample> samples, double threshold);

/// Coordinate samples carried by coord records.
std::vector<CoordSample> coord_samples(std::span<const InputRecord> records);

/// Sorted, distinct entity identifiers: arguments of event and interval
/// records and entities of coord records.
std::vector<std::string> collect_entities(std::span<const InputRecord> records);

}  // namespace rtec
