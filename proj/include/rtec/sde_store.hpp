#pragma once

#include <queue>
#include <unordered_set>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtec/interval.hpp"
#include "rtec/value.hpp"

namespace rtec {

/// Input facts resident in the window, indexed by ground key, by name and by
/// (name, first argument). Events are keyed without a value, durative facts
/// with one.
class SdeStore {
public:
    struct Fact {
        std::string id;
        GroundKey key;
        bool is_event = false;
        Timepoint t = 0;      // events
        Interval span{};      // durative facts
    };

    enum class InsertResult { Inserted, DuplicateId };

    InsertResult insert(Fact fact);
    /// False when `id` is not resident.
    bool erase(const std::string& id);
    bool contains(const std::string& id) const { return ids_.count(id) != 0; }

    /// Drops events at or before `boundary` and clips durative facts so that
    /// nothing at or before it remains. Keys that held at the boundary itself
    /// are remembered, so that a fluent ending right after it still has an end.
    void forget(Timepoint boundary);
    const std::unordered_set<GroundKey, GroundKeyHash>& held_at_boundary() const { return held_; }

    /// Marks every memoized view stale; views are rebuilt on demand.
    void begin_query(Timepoint boundary, Timepoint q);

    /// Occurrence times of `key` in (boundary, q], ascending and unique.
    const std::vector<Timepoint>& event_times(const GroundKey& key);
    /// Maximal intervals of `key` as visible at q: content after q is not
    /// yet known, so an interval reaching past q is open. A key that held at
    /// the boundary also covers the boundary point.
    const IntervalList& intervals(const GroundKey& key);

    /// Keys ever stored under a name, or a name and first argument. Keys
    /// whose facts were all dropped have empty views.
    const std::vector<GroundKey>& keys_by_name(SymbolId name) const;
    const std::vector<GroundKey>& keys_by_first(SymbolId name, const Value& first) const;

    std::size_t size() const { return ids_.size(); }
    std::vector<Fact> facts() const;

private:
    struct Slot {
        Fact fact;
        std::uint32_t incarnation = 0;
        bool alive = false;
    };
    struct Member {
        std::uint32_t slot;
        std::uint32_t incarnation;
    };
    struct KeyEntry {
        std::vector<Member> members;
        std::size_t live = 0;
        std::uint64_t view_epoch = 0;
        std::vector<Timepoint> times;
        IntervalList list;
    };
    struct HeapItem {
        Timepoint from;
        std::uint32_t slot;
        std::uint32_t incarnation;
        bool operator>(const HeapItem& o) const { return from > o.from; }
    };
    struct NameFirst {
        SymbolId name;
        Value first;
        friend bool operator==(const NameFirst&, const NameFirst&) = default;
    };
    struct NameFirstHash {
        std::size_t operator()(const NameFirst& k) const { return k.name * 2654435761u ^ ValueHash{}(k.first); }
    };

    bool live(const Member& m) const {
        return slots_[m.slot].alive && slots_[m.slot].incarnation == m.incarnation;
    }
    void kill(std::uint32_t slot);
    KeyEntry* refresh(const GroundKey& key);

    std::vector<Slot> slots_;
    std::vector<std::uint32_t> free_;
    std::unordered_map<std::string, std::uint32_t> ids_;
    std::unordered_map<GroundKey, KeyEntry, GroundKeyHash> keys_;
    std::unordered_map<SymbolId, std::vector<GroundKey>> by_name_;
    std::unordered_map<NameFirst, std::vector<GroundKey>, NameFirstHash> by_first_;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap_;

    std::unordered_set<GroundKey, GroundKeyHash> held_;
    Timepoint held_boundary_ = 0;
    std::uint64_t epoch_ = 0;
    Timepoint boundary_ = 0;
    Timepoint q_ = 0;
};

}  // namespace rtec
