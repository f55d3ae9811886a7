#pragma once

// Random input streams and whole-run checks shared by the unit tests and the
// acceptance binary.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rtec/engine.hpp"
#include "rtec/record.hpp"
#include "rtec/rule_language.hpp"

namespace rtec::testing {

/// A canonical list of at most `max_items` intervals inside [0, max_t]; the
/// last one is sometimes left open.
IntervalList random_list(std::mt19937_64& rng, Timepoint max_t, std::size_t max_items, bool allow_open = true);

/// Sorted distinct timepoints in [0, max_t], each present with probability p.
std::vector<Timepoint> random_points(std::mt19937_64& rng, Timepoint max_t, double p);

struct StreamShape {
    std::size_t entities = 4;
    Timepoint duration = 300;
    /// Longest piece an activity interval is delivered in.
    Timepoint max_chunk = 12;
};

/// Activities, appear/disappear events and close intervals (both argument
/// orders) for entities e0, e1, ...; records are in occurrence order and
/// carry no arrival.
std::vector<InputRecord> random_surveillance(std::uint64_t seed, const StreamShape& shape);

/// walking and close intervals only, with every endpoint even, so that any
/// overlap of the three moving conjuncts lasts at least two ticks.
std::vector<InputRecord> random_walking_close(std::uint64_t seed, const StreamShape& shape);

EventDescription surveillance_description();

/// Outcome of replaying a stream through one engine and checking every query
/// against the pointwise evaluator.
struct WindowCheck {
    bool ok = true;
    std::string detail;  // first mismatch
    std::size_t queries = 0;
    /// Every query left nothing resident at or before its boundary.
    bool bounded = true;
};

/// Runs the stream in asap mode, draining, and compares the engine's
/// computed lists and emitted entries with evaluate_window at each query.
WindowCheck check_against_reference(const EventDescription& ed, const std::vector<InputRecord>& records,
                                    Timepoint wm, Timepoint step);

/// Final-stability entries of a full drained run.
std::vector<ResultEntry> final_run(const EventDescription& ed, const std::vector<InputRecord>& records,
                                   Timepoint wm, Timepoint step, std::size_t shards = 1);

std::string describe(const ResultEntry& e);

}  // namespace rtec::testing
