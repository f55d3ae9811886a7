#include "rtec/sde_store.hpp"

#include <algorithm>

namespace rtec {

namespace {
const std::vector<GroundKey> kNoKeys;
const std::vector<Timepoint> kNoTimes;
const IntervalList kNoIntervals;
}  // namespace

SdeStore::InsertResult SdeStore::insert(Fact fact) {
    if (ids_.count(fact.id) != 0) return InsertResult::DuplicateId;
    std::uint32_t slot;
    if (!free_.empty()) {
        slot = free_.back();
        free_.pop_back();
    } else {
        slot = static_cast<std::uint32_t>(slots_.size());
        slots_.emplace_back();
    }
    Slot& s = slots_[slot];
    ++s.incarnation;
    s.alive = true;
    s.fact = std::move(fact);
    ids_.emplace(s.fact.id, slot);

    auto [it, fresh] = keys_.try_emplace(s.fact.key);
    if (fresh) {
        by_name_[s.fact.key.name].push_back(s.fact.key);
        if (!s.fact.key.args.empty()) by_first_[{s.fact.key.name, s.fact.key.args[0]}].push_back(s.fact.key);
    }
    it->second.members.push_back({slot, s.incarnation});
    ++it->second.live;
    it->second.view_epoch = 0;
    heap_.push({s.fact.is_event ? s.fact.t : s.fact.span.start, slot, s.incarnation});
    return InsertResult::Inserted;
}

void SdeStore::kill(std::uint32_t slot) {
    Slot& s = slots_[slot];
    ids_.erase(s.fact.id);
    s.alive = false;
    KeyEntry& entry = keys_.at(s.fact.key);
    --entry.live;
    entry.view_epoch = 0;
    // Compact once tombstones outnumber live members.
    if (entry.members.size() > 2 * entry.live + 8) {
        std::erase_if(entry.members, [this](const Member& m) { return !live(m); });
    }
    free_.push_back(slot);
}

bool SdeStore::erase(const std::string& id) {
    auto it = ids_.find(id);
    if (it == ids_.end()) return false;
    kill(it->second);
    return true;
}

void SdeStore::forget(Timepoint boundary) {
    held_.clear();
    held_boundary_ = boundary;
    while (!heap_.empty() && heap_.top().from <= boundary) {
        const HeapItem top = heap_.top();
        heap_.pop();
        Slot& s = slots_[top.slot];
        if (!s.alive || s.incarnation != top.incarnation) continue;
        if (!s.fact.is_event && s.fact.span.end > boundary) held_.insert(s.fact.key);
        if (s.fact.is_event || s.fact.span.end <= boundary + 1) {
            kill(top.slot);
            continue;
        }
        s.fact.span.start = boundary + 1;
        keys_.at(s.fact.key).view_epoch = 0;
        heap_.push({boundary + 1, top.slot, top.incarnation});
    }
}

void SdeStore::begin_query(Timepoint boundary, Timepoint q) {
    ++epoch_;
    boundary_ = boundary;
    q_ = q;
}

SdeStore::KeyEntry* SdeStore::refresh(const GroundKey& key) {
    auto it = keys_.find(key);
    if (it == keys_.end()) return nullptr;
    KeyEntry& e = it->second;
    if (e.view_epoch == epoch_) return &e;
    e.view_epoch = epoch_;
    e.times.clear();
    std::vector<Interval> raw;
    if (held_boundary_ == boundary_ && held_.count(key) != 0) raw.push_back({boundary_, boundary_ + 1});
    for (const Member& m : e.members) {
        if (!live(m)) continue;
        const Fact& f = slots_[m.slot].fact;
        if (f.is_event) {
            if (f.t > boundary_ && f.t <= q_) e.times.push_back(f.t);
        } else if (f.span.start <= q_) {
            raw.push_back({f.span.start, f.span.end <= q_ ? f.span.end : kOpen});
        }
    }
    std::sort(e.times.begin(), e.times.end());
    e.times.erase(std::unique(e.times.begin(), e.times.end()), e.times.end());
    e.list = IntervalList::normalize(std::move(raw));
    return &e;
}

const std::vector<Timepoint>& SdeStore::event_times(const GroundKey& key) {
    KeyEntry* e = refresh(key);
    return e == nullptr ? kNoTimes : e->times;
}

const IntervalList& SdeStore::intervals(const GroundKey& key) {
    KeyEntry* e = refresh(key);
    return e == nullptr ? kNoIntervals : e->list;
}

const std::vector<GroundKey>& SdeStore::keys_by_name(SymbolId name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? kNoKeys : it->second;
}

const std::vector<GroundKey>& SdeStore::keys_by_first(SymbolId name, const Value& first) const {
    auto it = by_first_.find({name, first});
    return it == by_first_.end() ? kNoKeys : it->second;
}

std::vector<SdeStore::Fact> SdeStore::facts() const {
    std::vector<Fact> out;
    out.reserve(ids_.size());
    for (const auto& s : slots_) {
        if (s.alive) out.push_back(s.fact);
    }
    return out;
}

}  // namespace rtec
