#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rtec {

/// Integer stream time. One tick is one frame of the input (40 ms by default).
using Timepoint = std::int64_t;

/// End marker for an interval whose end is not known yet ("holds since start").
inline constexpr Timepoint kOpen = std::numeric_limits<Timepoint>::max();

class IntervalError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Closed-open interval [start, end). `end == kOpen` means no end is known yet.
struct Interval {
    Timepoint start = 0;
    Timepoint end = 0;

    bool open() const { return end == kOpen; }
    bool contains(Timepoint t) const { return start <= t && t < end; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

std::ostream& operator<<(std::ostream& os, const Interval& iv);

/// Canonical list of maximal intervals: ascending, disjoint, non-abutting,
/// and only the last element may be open.
class IntervalList {
public:
    using const_iterator = std::vector<Interval>::const_iterator;

    IntervalList() = default;
    IntervalList(std::initializer_list<Interval> items);

    /// Merges overlapping and abutting intervals. Throws IntervalError on a
    /// malformed interval (start >= end).
    static IntervalList normalize(std::vector<Interval> raw);

    /// Adopts `items` after checking the canonical-form invariants.
    static IntervalList from_canonical(std::vector<Interval> items);

    std::span<const Interval> items() const { return items_; }
    const_iterator begin() const { return items_.begin(); }
    const_iterator end() const { return items_.end(); }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const Interval& front() const { return items_.front(); }
    const Interval& back() const { return items_.back(); }
    const Interval& operator[](std::size_t i) const { return items_[i]; }

    friend bool operator==(const IntervalList&, const IntervalList&) = default;

private:
    struct Adopt {};
    IntervalList(Adopt, std::vector<Interval> items) : items_(std::move(items)) {}

    std::vector<Interval> items_;

    friend IntervalList adopt_canonical(std::vector<Interval> items);
};

std::ostream& operator<<(std::ostream& os, const IntervalList& list);

/// True when `list` satisfies every canonical-form invariant.
bool is_canonical(std::span<const Interval> items);

IntervalList normalize(std::vector<Interval> raw);

/// Every timepoint that belongs to at least one list.
IntervalList union_all(std::span<const IntervalList* const> lists);
IntervalList union_all(std::span<const IntervalList> lists);
IntervalList union_all(std::initializer_list<IntervalList> lists);

/// Every timepoint that belongs to all lists. Throws IntervalError on an empty
/// argument: "all time" has no finite representation.
IntervalList intersect_all(std::span<const IntervalList* const> lists);
IntervalList intersect_all(std::span<const IntervalList> lists);
IntervalList intersect_all(std::initializer_list<IntervalList> lists);

/// Timepoints of `base` that belong to none of `lists`.
IntervalList relative_complement_all(const IntervalList& base,
                                     std::span<const IntervalList* const> lists);
IntervalList relative_complement_all(const IntervalList& base, std::span<const IntervalList> lists);
IntervalList relative_complement_all(const IntervalList& base,
                                     std::initializer_list<IntervalList> lists);

bool holds_at(const IntervalList& list, Timepoint t);

/// Splits at t+1: prefix holds the points <= t, suffix the points > t.
std::pair<IntervalList, IntervalList> clip_before(const IntervalList& list, Timepoint t);

/// Joins a history prefix with freshly computed intervals. Every prefix
/// interval must end at or before the first fresh start; an abutting pair
/// becomes one interval. Throws std::logic_error on overlap.
IntervalList amalgamate(const IntervalList& prefix, const IntervalList& fresh);

std::vector<Timepoint> start_points(const IntervalList& list);
/// Finite end bounds only; an open interval contributes nothing.
std::vector<Timepoint> end_points(const IntervalList& list);

/// Domain-independent holdsFor for inertial fluents. A start at Ts holds from
/// Ts+1 until the first break Tf > Ts (exclusive), or stays open when no such
/// break exists. Starts inside a held interval do not split it. Both inputs
/// must be sorted and free of duplicates, with every point <= now.
IntervalList make_intervals(std::span<const Timepoint> starts, std::span<const Timepoint> breaks,
                            Timepoint now);

}  // namespace rtec
