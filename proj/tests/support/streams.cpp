#include "streams.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "reference.hpp"
#include "rtec/harness.hpp"

namespace rtec::testing {

namespace {

using Rng = std::mt19937_64;

Timepoint uniform(Rng& rng, Timepoint lo, Timepoint hi) {
    return std::uniform_int_distribution<Timepoint>(lo, hi)(rng);
}

std::string entity(std::size_t i) { return "e" + std::to_string(i); }

InputRecord interval_record(const std::string& name, std::vector<std::string> args, Timepoint from, Timepoint to) {
    InputRecord r;
    r.kind = RecordKind::Interval;
    r.name = name;
    r.args = std::move(args);
    r.from = from;
    r.to = to;
    r.id = "iv:" + name;
    for (const auto& a : r.args) r.id += ":" + a;
    r.id += ":" + std::to_string(from);
    return r;
}

InputRecord event_record(const std::string& name, const std::string& arg, Timepoint t) {
    InputRecord r;
    r.kind = RecordKind::Event;
    r.name = name;
    r.args = {arg};
    r.t = t;
    r.id = "ev:" + name + ":" + arg + ":" + std::to_string(t);
    return r;
}

// Splits [from, to) into pieces of random length at most `chunk`.
void chunked(Rng& rng, const std::string& name, const std::vector<std::string>& args, Timepoint from, Timepoint to,
             Timepoint chunk, std::vector<InputRecord>& out) {
    while (from < to) {
        const Timepoint len = std::min(to - from, uniform(rng, 1, std::max<Timepoint>(1, chunk)));
        out.push_back(interval_record(name, args, from, from + len));
        from += len;
    }
}

// Disjoint random intervals inside [0, duration), endpoints multiples of `grain`.
std::vector<Interval> random_runs(Rng& rng, Timepoint duration, Timepoint grain, Timepoint max_gap, Timepoint max_len) {
    std::vector<Interval> out;
    Timepoint t = grain * uniform(rng, 0, max_gap / grain);
    while (true) {
        const Timepoint len = grain * uniform(rng, 1, std::max<Timepoint>(1, max_len / grain));
        if (t + len > duration) break;
        out.push_back({t, t + len});
        t += len + grain * uniform(rng, 1, std::max<Timepoint>(1, max_gap / grain));
    }
    return out;
}

void sort_records(std::vector<InputRecord>& out) {
    std::stable_sort(out.begin(), out.end(), [](const InputRecord& a, const InputRecord& b) {
        const Timepoint ta = a.occurrence();
        const Timepoint tb = b.occurrence();
        return std::tie(ta, a.id) < std::tie(tb, b.id);
    });
}

}  // namespace

IntervalList random_list(std::mt19937_64& rng, Timepoint max_t, std::size_t max_items, bool allow_open) {
    const auto n = static_cast<std::size_t>(uniform(rng, 0, static_cast<Timepoint>(max_items)));
    std::set<Timepoint> cuts;
    while (cuts.size() < 2 * n) cuts.insert(uniform(rng, 0, max_t + 1));
    std::vector<Interval> items;
    for (auto it = cuts.begin(); it != cuts.end(); std::advance(it, 2)) items.push_back({*it, *std::next(it)});
    if (allow_open && !items.empty() && uniform(rng, 0, 3) == 0) items.back().end = kOpen;
    return IntervalList::from_canonical(std::move(items));
}

std::vector<Timepoint> random_points(std::mt19937_64& rng, Timepoint max_t, double p) {
    std::bernoulli_distribution keep(p);
    std::vector<Timepoint> out;
    for (Timepoint t = 0; t <= max_t; ++t) {
        if (keep(rng)) out.push_back(t);
    }
    return out;
}

std::vector<InputRecord> random_surveillance(std::uint64_t seed, const StreamShape& shape) {
    Rng rng(seed);
    std::vector<InputRecord> out;
    static const char* const activities[] = {"walking", "active", "inactive", "running", "abrupt"};
    for (std::size_t i = 0; i < shape.entities; ++i) {
        const std::string id = entity(i);
        Timepoint t = uniform(rng, 0, 20);
        while (t < shape.duration) {
            const Timepoint len = std::min(shape.duration - t, uniform(rng, 3, 40));
            const int pick = static_cast<int>(uniform(rng, 0, 5));
            if (pick < 5) chunked(rng, activities[pick], {id}, t, t + len, shape.max_chunk, out);
            t += len;
        }
        for (int k = uniform(rng, 0, 3); k > 0; --k) out.push_back(event_record("appear", id, uniform(rng, 0, shape.duration - 1)));
        for (int k = uniform(rng, 0, 2); k > 0; --k) out.push_back(event_record("disappear", id, uniform(rng, 0, shape.duration - 1)));
    }
    for (std::size_t i = 0; i < shape.entities; ++i) {
        for (std::size_t j = i + 1; j < shape.entities; ++j) {
            for (const auto& iv : random_runs(rng, shape.duration, 1, 60, 50)) {
                chunked(rng, "close", {entity(i), entity(j)}, iv.start, iv.end, shape.max_chunk, out);
                chunked(rng, "close", {entity(j), entity(i)}, iv.start, iv.end, shape.max_chunk, out);
            }
        }
    }
    // Duplicate event ids (same name, entity and tick) collapse to one record.
    std::set<std::string> ids;
    std::erase_if(out, [&](const InputRecord& r) { return !ids.insert(r.id).second; });
    sort_records(out);
    return out;
}

std::vector<InputRecord> random_walking_close(std::uint64_t seed, const StreamShape& shape) {
    Rng rng(seed);
    std::vector<InputRecord> out;
    for (std::size_t i = 0; i < shape.entities; ++i) {
        for (const auto& iv : random_runs(rng, shape.duration, 2, 30, 80)) {
            out.push_back(interval_record("walking", {entity(i)}, iv.start, iv.end));
        }
    }
    for (std::size_t i = 0; i < shape.entities; ++i) {
        for (std::size_t j = i + 1; j < shape.entities; ++j) {
            for (const auto& iv : random_runs(rng, shape.duration, 2, 40, 60)) {
                out.push_back(interval_record("close", {entity(i), entity(j)}, iv.start, iv.end));
                out.push_back(interval_record("close", {entity(j), entity(i)}, iv.start, iv.end));
            }
        }
    }
    sort_records(out);
    return out;
}

EventDescription surveillance_description() { return load_description(bundled_rules()); }

std::string describe(const ResultEntry& e) {
    std::ostringstream s;
    s << e.name << '(';
    for (std::size_t i = 0; i < e.args.size(); ++i) s << (i ? "," : "") << e.args[i];
    s << ")=" << e.value << ' ' << e.interval;
    return s.str();
}

namespace {

std::vector<ResultEntry> entries_of(Engine& engine, const EngineSnapshot& snap,
                                    const reference::WindowResult& ref) {
    std::vector<ResultEntry> out;
    const auto& symbols = engine.description().symbols;
    for (const Unit& u : snap.owned) {
        const Declaration* d = engine.description().find_declaration(u.name);
        if (d == nullptr || !is_fluent(d->kind)) continue;
        for (const Value& v : engine.description().head_values(u.name)) {
            const GroundKey key{u.name, u.args, true, v};
            for (const auto& iv : ref.fluent(key)) {
                ResultEntry e;
                e.name = symbols.name(u.name);
                for (const auto& a : u.args) e.args.push_back(engine.text_of(a));
                e.value = engine.text_of(v);
                e.interval = iv;
                out.push_back(std::move(e));
            }
        }
    }
    std::sort(out.begin(), out.end(), entry_less);
    return out;
}

std::string key_text(const Engine& engine, const GroundKey& k) {
    std::string s = engine.description().symbols.name(k.name) + "(";
    for (std::size_t i = 0; i < k.args.size(); ++i) s += (i ? "," : "") + engine.text_of(k.args[i]);
    s += ")";
    if (k.has_value) s += "=" + engine.text_of(k.value);
    return s;
}

std::string list_text(const IntervalList& l) {
    std::ostringstream s;
    s << l;
    return s.str();
}

}  // namespace

WindowCheck check_against_reference(const EventDescription& ed, const std::vector<InputRecord>& records,
                                    Timepoint wm, Timepoint step) {
    WindowCheck check;
    EngineConfig cfg;
    cfg.wm = wm;
    cfg.step = step;
    cfg.mode = ReportMode::Asap;
    const PreparedStream s = prepare_stream(records, ed, step, std::nullopt);
    EngineOptions opts;
    opts.domains = s.domains;
    Engine engine(ed, cfg, opts);
    std::size_t next = 0;
    for (const Timepoint q : query_schedule(s, cfg, true)) {
        const std::size_t first = next;
        while (next < s.records.size() && bucket_of(*s.records[next].arrival, step) <= q) ++next;
        engine.ingest(std::span(s.records).subspan(first, next - first));
        RecognitionResult result = engine.query(q);
        ++check.queries;

        const Timepoint earliest = engine.earliest_resident();
        if (earliest != kOpen && earliest <= q - wm) check.bounded = false;

        const EngineSnapshot snap = engine.snapshot();
        const reference::WindowResult ref = reference::evaluate_window(engine.description(), snap);
        auto fail = [&](const std::string& what) {
            check.ok = false;
            check.detail = "q=" + std::to_string(q) + " wm=" + std::to_string(wm) + " step=" + std::to_string(step) +
                           ": " + what;
        };
        // Computed lists, in both directions.
        for (const auto& [key, list] : snap.fluents) {
            if (!(ref.fluent(key) == list)) {
                fail(key_text(engine, key) + " engine " + list_text(list) + " reference " + list_text(ref.fluent(key)));
                return check;
            }
        }
        for (const auto& [key, list] : ref.fluents) {
            auto it = snap.fluents.find(key);
            if (it == snap.fluents.end() || !(it->second == list)) {
                fail(key_text(engine, key) + " missing from engine; reference " + list_text(list));
                return check;
            }
        }
        // Emitted entries, ignoring stability.
        std::vector<ResultEntry> got = result.entries;
        for (auto& e : got) e.stability = Stability::Open;
        std::sort(got.begin(), got.end(), entry_less);
        const std::vector<ResultEntry> want = entries_of(engine, snap, ref);
        if (got != want) {
            std::string msg = "emitted entries differ:";
            for (const auto& e : got) {
                if (std::find(want.begin(), want.end(), e) == want.end()) msg += " extra " + describe(e);
            }
            for (const auto& e : want) {
                if (std::find(got.begin(), got.end(), e) == got.end()) msg += " missing " + describe(e);
            }
            fail(msg);
            return check;
        }
    }
    return check;
}

std::vector<ResultEntry> final_run(const EventDescription& ed, const std::vector<InputRecord>& records,
                                   Timepoint wm, Timepoint step, std::size_t shards) {
    DriveOptions opts;
    opts.config.wm = wm;
    opts.config.step = step;
    opts.config.mode = ReportMode::Final;
    opts.shards = shards;
    const PreparedStream s = prepare_stream(records, ed, step, std::nullopt);
    return final_entries(drive(ed, s, opts).results);
}

}  // namespace rtec::testing
