#include "rtec/interval.hpp"

#include <algorithm>
#include <sstream>

namespace rtec {

IntervalList adopt_canonical(std::vector<Interval> items);

IntervalList adopt_canonical(std::vector<Interval> items) {
    return IntervalList(IntervalList::Adopt{}, std::move(items));
}

namespace {

void check_well_formed(const Interval& iv) {
    if (iv.start >= iv.end) {
        std::ostringstream msg;
        msg << "malformed interval " << iv << ": start must precede end";
        throw IntervalError(msg.str());
    }
}

std::vector<const IntervalList*> pointers(std::span<const IntervalList> lists) {
    std::vector<const IntervalList*> out;
    out.reserve(lists.size());
    for (const auto& l : lists) out.push_back(&l);
    return out;
}

// Two-list intersection by a merge sweep.
std::vector<Interval> intersect_two(std::span<const Interval> a, std::span<const Interval> b) {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const Timepoint lo = std::max(a[i].start, b[j].start);
        const Timepoint hi = std::min(a[i].end, b[j].end);
        if (lo < hi) out.push_back({lo, hi});
        if (a[i].end < b[j].end) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

// Removes the points of `cut` from `base`; both canonical.
std::vector<Interval> subtract(std::span<const Interval> base, std::span<const Interval> cut) {
    std::vector<Interval> out;
    std::size_t j = 0;
    for (Interval cur : base) {
        while (j < cut.size() && cut[j].end <= cur.start) ++j;
        std::size_t k = j;
        bool consumed = false;
        while (k < cut.size() && cut[k].start < cur.end) {
            if (cut[k].start > cur.start) out.push_back({cur.start, cut[k].start});
            if (cut[k].end >= cur.end) {
                consumed = true;
                break;
            }
            cur.start = cut[k].end;
            ++k;
        }
        if (!consumed) out.push_back(cur);
    }
    return out;
}

}  // namespace

std::ostream& operator<<(std::ostream& os, const Interval& iv) {
    os << '(' << iv.start << ',';
    if (iv.open()) {
        os << "inf";
    } else {
        os << iv.end;
    }
    return os << ')';
}

std::ostream& operator<<(std::ostream& os, const IntervalList& list) {
    os << '[';
    bool first = true;
    for (const auto& iv : list) {
        if (!first) os << ',';
        os << iv;
        first = false;
    }
    return os << ']';
}

IntervalList::IntervalList(std::initializer_list<Interval> items)
    : IntervalList(from_canonical(std::vector<Interval>(items))) {}

bool is_canonical(std::span<const Interval> items) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].start >= items[i].end) return false;
        if (i + 1 < items.size()) {
            // Only the last element may be open; consecutive items must leave a gap.
            if (items[i].open() || items[i].end >= items[i + 1].start) return false;
        }
    }
    return true;
}

IntervalList IntervalList::from_canonical(std::vector<Interval> items) {
    for (const auto& iv : items) check_well_formed(iv);
    if (!is_canonical(items)) {
        throw IntervalError("interval list is not canonical (sorted, disjoint, non-abutting)");
    }
    return IntervalList(Adopt{}, std::move(items));
}

IntervalList IntervalList::normalize(std::vector<Interval> raw) {
    for (const auto& iv : raw) check_well_formed(iv);
    if (raw.empty()) return {};
    std::sort(raw.begin(), raw.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> out;
    out.reserve(raw.size());
    out.push_back(raw.front());
    for (std::size_t i = 1; i < raw.size(); ++i) {
        Interval& last = out.back();
        if (raw[i].start <= last.end) {
            last.end = std::max(last.end, raw[i].end);
        } else {
            out.push_back(raw[i]);
        }
    }
    return IntervalList(Adopt{}, std::move(out));
}

IntervalList normalize(std::vector<Interval> raw) { return IntervalList::normalize(std::move(raw)); }

IntervalList union_all(std::span<const IntervalList* const> lists) {
    std::size_t total = 0;
    for (const auto* l : lists) total += l->size();
    std::vector<Interval> raw;
    raw.reserve(total);
    for (const auto* l : lists) raw.insert(raw.end(), l->begin(), l->end());
    return IntervalList::normalize(std::move(raw));
}

IntervalList union_all(std::span<const IntervalList> lists) {
    const auto ptrs = pointers(lists);
    return union_all(std::span<const IntervalList* const>(ptrs));
}

IntervalList union_all(std::initializer_list<IntervalList> lists) {
    return union_all(std::span<const IntervalList>(lists.begin(), lists.size()));
}

IntervalList intersect_all(std::span<const IntervalList* const> lists) {
    if (lists.empty()) throw IntervalError("intersect_all requires at least one list");
    std::vector<Interval> acc(lists.front()->begin(), lists.front()->end());
    for (std::size_t i = 1; i < lists.size() && !acc.empty(); ++i) {
        acc = intersect_two(acc, lists[i]->items());
    }
    return adopt_canonical(std::move(acc));
}

IntervalList intersect_all(std::span<const IntervalList> lists) {
    const auto ptrs = pointers(lists);
    return intersect_all(std::span<const IntervalList* const>(ptrs));
}

IntervalList intersect_all(std::initializer_list<IntervalList> lists) {
    return intersect_all(std::span<const IntervalList>(lists.begin(), lists.size()));
}

IntervalList relative_complement_all(const IntervalList& base,
                                     std::span<const IntervalList* const> lists) {
    if (lists.empty() || base.empty()) return base;
    const IntervalList cut = union_all(lists);
    return adopt_canonical(subtract(base.items(), cut.items()));
}

IntervalList relative_complement_all(const IntervalList& base, std::span<const IntervalList> lists) {
    const auto ptrs = pointers(lists);
    return relative_complement_all(base, std::span<const IntervalList* const>(ptrs));
}

IntervalList relative_complement_all(const IntervalList& base,
                                     std::initializer_list<IntervalList> lists) {
    return relative_complement_all(base, std::span<const IntervalList>(lists.begin(), lists.size()));
}

bool holds_at(const IntervalList& list, Timepoint t) {
    // First interval whose end is beyond t.
    auto it = std::upper_bound(list.begin(), list.end(), t,
                               [](Timepoint v, const Interval& iv) { return v < iv.end; });
    return it != list.end() && it->start <= t;
}

std::pair<IntervalList, IntervalList> clip_before(const IntervalList& list, Timepoint t) {
    const Timepoint cut = t + 1;
    std::vector<Interval> prefix;
    std::vector<Interval> suffix;
    for (const auto& iv : list) {
        if (iv.end <= cut) {
            prefix.push_back(iv);
        } else if (iv.start >= cut) {
            suffix.push_back(iv);
        } else {
            prefix.push_back({iv.start, cut});
            suffix.push_back({cut, iv.end});
        }
    }
    return {adopt_canonical(std::move(prefix)), adopt_canonical(std::move(suffix))};
}

IntervalList amalgamate(const IntervalList& prefix, const IntervalList& fresh) {
    if (prefix.empty()) return fresh;
    if (fresh.empty()) return prefix;
    if (prefix.back().end > fresh.front().start) {
        std::ostringstream msg;
        msg << "amalgamate: prefix " << prefix << " overlaps fresh intervals " << fresh;
        throw std::logic_error(msg.str());
    }
    std::vector<Interval> out(prefix.begin(), prefix.end());
    auto it = fresh.begin();
    if (out.back().end == it->start) {
        out.back().end = it->end;
        ++it;
    }
    out.insert(out.end(), it, fresh.end());
    return adopt_canonical(std::move(out));
}

std::vector<Timepoint> start_points(const IntervalList& list) {
    std::vector<Timepoint> out;
    out.reserve(list.size());
    for (const auto& iv : list) out.push_back(iv.start);
    return out;
}

std::vector<Timepoint> end_points(const IntervalList& list) {
    std::vector<Timepoint> out;
    out.reserve(list.size());
    for (const auto& iv : list) {
        if (!iv.open()) out.push_back(iv.end);
    }
    return out;
}

IntervalList make_intervals(std::span<const Timepoint> starts, std::span<const Timepoint> breaks,
                            Timepoint now) {
    auto check = [now](std::span<const Timepoint> pts, const char* what) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i > 0 && pts[i - 1] >= pts[i]) {
                throw IntervalError(std::string("make_intervals: ") + what +
                                    " must be sorted without duplicates");
            }
            if (pts[i] > now) {
                throw IntervalError(std::string("make_intervals: ") + what +
                                    " contain a point after the query time");
            }
        }
    };
    check(starts, "starts");
    check(breaks, "breaks");

    std::vector<Interval> out;
    std::size_t b = 0;
    std::size_t s = 0;
    while (s < starts.size()) {
        const Timepoint ts = starts[s];
        while (b < breaks.size() && breaks[b] <= ts) ++b;
        if (b == breaks.size()) {
            out.push_back({ts + 1, kOpen});
            break;
        }
        const Timepoint tf = breaks[b];
        // Initiated at ts and broken at ts+1 never holds.
        if (ts + 1 < tf) out.push_back({ts + 1, tf});
        // Re-initiations before the break are absorbed.
        while (s < starts.size() && starts[s] < tf) ++s;
    }
    return adopt_canonical(std::move(out));
}

}  // namespace rtec
