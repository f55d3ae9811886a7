#include "rtec/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "rtec/stream_io.hpp"

namespace rtec {

namespace {

bool has_payload(const InputRecord& r) { return r.action != Action::Retract || !r.name.empty() || !r.entity.empty(); }

void warn(std::vector<Diagnostic>& out, std::string code, std::string message) {
    out.push_back({Diagnostic::Severity::Warning, std::move(code), std::move(message), {}});
}

// Latest surviving version of every coord record, with its arrival.
struct CoordState {
    std::vector<CoordSample> samples;
    std::vector<Timepoint> arrivals;
};

CoordState settle_coords(std::span<const InputRecord> coords) {
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::optional<std::pair<CoordSample, Timepoint>>> table;
    for (const auto& r : coords) {
        auto it = slot.find(r.id);
        if (r.action == Action::Retract) {
            if (it != slot.end()) table[it->second].reset();
            continue;
        }
        std::pair<CoordSample, Timepoint> v{{r.entity, r.t, r.x, r.y}, *r.arrival};
        if (it == slot.end()) {
            slot.emplace(r.id, table.size());
            table.emplace_back(std::move(v));
        } else {
            table[it->second] = std::move(v);
        }
    }
    CoordState s;
    for (auto& e : table) {
        if (!e) continue;
        s.samples.push_back(std::move(e->first));
        s.arrivals.push_back(e->second);
    }
    return s;
}

std::vector<InputRecord> close_records(const CoordState& coords, double threshold, Timepoint step) {
    std::unordered_map<std::string, std::unordered_map<Timepoint, Timepoint>> known;
    for (std::size_t i = 0; i < coords.samples.size(); ++i) {
        auto& at = known[coords.samples[i].entity][coords.samples[i].t];
        at = std::max(at, coords.arrivals[i]);
    }
    std::vector<InputRecord> out;
    for (const auto& rec : closeness(coords.samples, threshold)) {
        const auto& pa = known.at(rec.args[0]);
        const auto& pb = known.at(rec.args[1]);
        auto ready = [&](Timepoint t) { return std::max(pa.at(t), pb.at(t)); };
        Timepoint seg = rec.from;
        Timepoint seg_arrival = ready(seg);
        for (Timepoint t = rec.from; t <= rec.to; ++t) {
            const bool at_end = t == rec.to;
            const Timepoint a = at_end ? 0 : ready(t);
            if (!at_end && bucket_of(a, step) == bucket_of(seg_arrival, step)) {
                seg_arrival = std::max(seg_arrival, a);
                continue;
            }
            InputRecord piece = rec;
            piece.id = "close:" + rec.args[0] + ":" + rec.args[1] + ":" + std::to_string(seg);
            piece.from = seg;
            piece.to = t;
            piece.arrival = seg_arrival;
            out.push_back(std::move(piece));
            seg = t;
            seg_arrival = a;
        }
    }
    return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

ShardRun run_shard(const EventDescription& ed, const PreparedStream& s, const EngineConfig& cfg,
                   std::span<const Timepoint> schedule, std::size_t shard_count, std::size_t shard_index) {
    EngineOptions opts;
    opts.domains = s.domains;
    opts.shard_count = shard_count;
    opts.shard_index = shard_index;
    Engine engine(ed, cfg, opts);
    ShardRun run;
    std::size_t next = 0;
    for (const Timepoint q : schedule) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t first = next;
        while (next < s.records.size() && bucket_of(*s.records[next].arrival, cfg.step) <= q) ++next;
        engine.ingest(std::span(s.records).subspan(first, next - first));
        run.results.push_back(engine.query(q));
        run.query_ms.push_back(elapsed_ms(t0));
    }
    run.diagnostics = engine.diagnostics();
    return run;
}

std::size_t clamp_shards(const EventDescription& ed, const PreparedStream& s, const DriveOptions& opts,
                         std::vector<Diagnostic>& diags) {
    if (opts.shards == 0) throw std::invalid_argument("shard count must be at least 1");
    if (opts.shards == 1) return 1;
    EngineOptions probe;
    probe.domains = s.domains;
    const std::size_t groups = std::max<std::size_t>(1, Engine(ed, opts.config, probe).shard_groups());
    if (opts.shards <= groups) return opts.shards;
    warn(diags, "shards-clamped",
         std::to_string(opts.shards) + " shards requested but only " + std::to_string(groups) +
             " argument groups exist; using " + std::to_string(groups));
    return groups;
}

DriveOutput merge(std::vector<ShardRun> runs, std::vector<Diagnostic> diags, std::size_t shard_count,
                  std::span<const Timepoint> schedule) {
    DriveOutput out;
    out.shard_count = shard_count;
    out.diagnostics = std::move(diags);
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        RecognitionResult merged;
        merged.q = schedule[i];
        double slowest = 0;
        for (const auto& run : runs) {
            const auto& e = run.results[i].entries;
            merged.entries.insert(merged.entries.end(), e.begin(), e.end());
            slowest = std::max(slowest, run.query_ms[i]);
        }
        std::sort(merged.entries.begin(), merged.entries.end(), entry_less);
        out.results.push_back(std::move(merged));
        out.query_ms.push_back(slowest);
    }
    for (const auto& run : runs) out.diagnostics.insert(out.diagnostics.end(), run.diagnostics.begin(), run.diagnostics.end());
    out.shards = std::move(runs);
    return out;
}

}  // namespace

Timepoint bucket_of(Timepoint arrival, Timepoint step) {
    if (arrival <= step) return step;
    return (arrival + step - 1) / step * step;
}

PreparedStream prepare_stream(std::span<const InputRecord> raw, const EventDescription& ed, Timepoint step,
                              std::optional<double> close_threshold) {
    if (step <= 0) throw std::invalid_argument("step must be positive");
    PreparedStream s;
    std::vector<InputRecord> coords;
    Timepoint previous = 0;
    for (const auto& r : raw) {
        InputRecord rec = r;
        if (!rec.arrival) rec.arrival = has_payload(rec) ? rec.occurrence() : previous;
        previous = *rec.arrival;
        if (rec.kind == RecordKind::Coord) {
            coords.push_back(std::move(rec));
        } else {
            s.records.push_back(std::move(rec));
        }
    }
    if (!coords.empty()) {
        if (!close_threshold) {
            throw std::invalid_argument("the stream carries coordinates; a close threshold in pixels is required");
        }
        auto close = close_records(settle_coords(coords), *close_threshold, step);
        s.records.insert(s.records.end(), std::make_move_iterator(close.begin()), std::make_move_iterator(close.end()));
    }
    std::stable_sort(s.records.begin(), s.records.end(),
                     [](const InputRecord& a, const InputRecord& b) { return *a.arrival < *b.arrival; });

    for (const auto& r : s.records) {
        s.last_arrival = std::max(s.last_arrival, *r.arrival);
        if (r.action == Action::Retract) continue;
        s.last_content = std::max(s.last_content, r.last_point() == kOpen ? r.from : r.last_point());
    }
    s.sde_count = s.records.size();

    std::set<std::string> entities;
    for (const auto& list : {collect_entities(raw), collect_entities(s.records)}) entities.insert(list.begin(), list.end());
    for (const auto& d : ed.domains) {
        if (d.from_input) s.domains[std::string(ed.symbols.name(d.name))] = {entities.begin(), entities.end()};
    }
    return s;
}

std::vector<Timepoint> query_schedule(const PreparedStream& s, const EngineConfig& cfg, bool drain) {
    std::vector<Timepoint> qs;
    if (s.records.empty()) return qs;
    const Timepoint last = bucket_of(s.last_arrival, cfg.step);
    for (Timepoint q = cfg.step; q <= last || (drain && q - cfg.wm < s.last_content); q += cfg.step) qs.push_back(q);
    return qs;
}

DriveOutput drive(const EventDescription& ed, const PreparedStream& s, const DriveOptions& opts) {
    opts.config.validate();
    std::vector<Diagnostic> diags;
    const std::size_t n = clamp_shards(ed, s, opts, diags);
    const auto schedule = query_schedule(s, opts.config, opts.drain);
    std::vector<ShardRun> runs(n);
    std::vector<std::exception_ptr> errors(n);
    const auto t0 = std::chrono::steady_clock::now();
#pragma omp parallel for num_threads(static_cast<int>(n)) schedule(static, 1)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        try {
            runs[i] = run_shard(ed, s, opts.config, schedule, n, static_cast<std::size_t>(i));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    const double wall = elapsed_ms(t0);
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    DriveOutput out = merge(std::move(runs), std::move(diags), n, schedule);
    out.wall_ms = wall;
    return out;
}

DriveOutput drive_serial(const EventDescription& ed, const PreparedStream& s, const DriveOptions& opts) {
    opts.config.validate();
    std::vector<Diagnostic> diags;
    const std::size_t n = clamp_shards(ed, s, opts, diags);
    const auto schedule = query_schedule(s, opts.config, opts.drain);
    std::vector<ShardRun> runs;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n; ++i) runs.push_back(run_shard(ed, s, opts.config, schedule, n, i));
    const double wall = elapsed_ms(t0);
    DriveOutput out = merge(std::move(runs), std::move(diags), n, schedule);
    out.wall_ms = wall;
    return out;
}

std::vector<ResultEntry> final_entries(std::span<const RecognitionResult> results) {
    std::vector<ResultEntry> out;
    for (const auto& r : results) {
        for (const auto& e : r.entries) {
            if (e.stability == Stability::Final) out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(), entry_less);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic streams

void GenSpec::validate() const {
    if (entities < 2) throw std::invalid_argument("at least two entities are required");
    if (copies < 1) throw std::invalid_argument("at least one copy is required");
    if (duration < 1) throw std::invalid_argument("duration must be positive");
    if (chunk < 1) throw std::invalid_argument("chunk must be positive");
}

namespace {

enum Activity : std::uint8_t { Walking, Active, Inactive, Running, Abrupt, Absent };
constexpr const char* kActivityName[] = {"walking", "active", "inactive", "running", "abrupt"};

constexpr double kWidth = 640;
constexpr double kHeight = 480;
constexpr double kCopyShift = 10000;

struct Track {
    bool person = false;
    Timepoint appear = 0;
    Timepoint vanish = 0;  // exclusive; equals duration when never disappearing
    bool disappears = false;
    std::vector<Activity> act;  // per tick of [0, duration)
    std::vector<double> x, y;
};

class Scene {
public:
    Scene(const GenSpec& spec) : spec_(spec), rng_(spec.seed), tracks_(spec.entities) {
        for (auto& t : tracks_) {
            t.act.assign(spec.duration, Absent);
            t.x.assign(spec.duration, 0);
            t.y.assign(spec.duration, 0);
        }
        for (std::size_t i = 0; i < tracks_.size(); ++i) tracks_[i].person = i == 0 || !chance(0.3);
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (tracks_[i].person) plan_person(i);
        }
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (!tracks_[i].person) plan_object(i);
        }
    }

    const std::vector<Track>& tracks() const { return tracks_; }

private:
    bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
    Timepoint uniform(Timepoint lo, Timepoint hi) { return std::uniform_int_distribution<Timepoint>(lo, hi)(rng_); }
    double uniform_real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    Activity pick_activity() {
        const double u = uniform_real(0, 1);
        if (u < 0.5) return Walking;
        if (u < 0.7) return Active;
        if (u < 0.8) return Inactive;
        if (u < 0.9) return Running;
        return Abrupt;
    }

    void plan_person(std::size_t i) {
        Track& tr = tracks_[i];
        const Timepoint d = spec_.duration;
        std::vector<std::size_t> leaders;
        for (std::size_t j = 0; j < i; ++j) {
            if (tracks_[j].person) leaders.push_back(j);
        }
        if (!leaders.empty() && chance(0.3)) {
            follow(i, leaders[uniform(0, static_cast<Timepoint>(leaders.size()) - 1)]);
            return;
        }
        tr.appear = i == 0 ? 0 : uniform(0, d / 5);
        tr.disappears = i != 0 && chance(0.3) && tr.appear + d / 2 < d;
        tr.vanish = tr.disappears ? uniform(tr.appear + d / 2, d - 1) : d;
        if (tr.vanish <= tr.appear) {
            tr.disappears = false;
            tr.vanish = d;
        }
        double x = uniform_real(0, kWidth);
        double y = uniform_real(0, kHeight);
        Timepoint t = tr.appear;
        while (t < tr.vanish) {
            const Activity a = pick_activity();
            const Timepoint end = std::min(tr.vanish, t + uniform(25, 250));
            const double heading = uniform_real(0, 2 * std::numbers::pi);
            const double speed = a == Walking ? 1.0 : a == Running ? 3.0 : 0.0;
            double dx = std::cos(heading) * speed;
            double dy = std::sin(heading) * speed;
            for (; t < end; ++t) {
                tr.act[t] = a;
                tr.x[t] = std::round(x * 100) / 100;
                tr.y[t] = std::round(y * 100) / 100;
                x += dx;
                y += dy;
                if (x < 0 || x > kWidth) {
                    dx = -dx;
                    x = std::clamp(x, 0.0, kWidth);
                }
                if (y < 0 || y > kHeight) {
                    dy = -dy;
                    y = std::clamp(y, 0.0, kHeight);
                }
            }
        }
    }

    // Walks beside a leader, copying its activity at a fixed offset.
    void follow(std::size_t i, std::size_t leader) {
        Track& tr = tracks_[i];
        const Track& lt = tracks_[leader];
        tr.appear = uniform(lt.appear, lt.appear + (lt.vanish - lt.appear) / 4);
        tr.vanish = lt.vanish;
        tr.disappears = lt.disappears;
        const double ox = uniform_real(-8, 8);
        const double oy = uniform_real(-8, 8);
        for (Timepoint t = tr.appear; t < tr.vanish; ++t) {
            tr.act[t] = lt.act[t];
            tr.x[t] = std::round((lt.x[t] + ox) * 100) / 100;
            tr.y[t] = std::round((lt.y[t] + oy) * 100) / 100;
        }
    }

    // An object is set down next to a carrier and later taken away.
    void plan_object(std::size_t i) {
        Track& tr = tracks_[i];
        const Timepoint d = spec_.duration;
        std::vector<std::size_t> carriers;
        for (std::size_t j = 0; j < tracks_.size(); ++j) {
            if (tracks_[j].person && tracks_[j].vanish - tracks_[j].appear > 50) carriers.push_back(j);
        }
        double x = uniform_real(0, kWidth);
        double y = uniform_real(0, kHeight);
        if (carriers.empty()) {
            tr.appear = uniform(0, d - 1);
        } else {
            const Track& ct = tracks_[carriers[uniform(0, static_cast<Timepoint>(carriers.size()) - 1)]];
            tr.appear = uniform(ct.appear + 25, ct.vanish - 1);
            x = ct.x[tr.appear] + 5;
            y = ct.y[tr.appear];
        }
        const Timepoint life = uniform(100, 600);
        tr.disappears = tr.appear + life < d;
        tr.vanish = tr.disappears ? tr.appear + life : d;
        for (Timepoint t = tr.appear; t < tr.vanish; ++t) {
            tr.act[t] = Inactive;
            tr.x[t] = x;
            tr.y[t] = y;
        }
    }

    const GenSpec& spec_;
    std::mt19937_64 rng_;
    std::vector<Track> tracks_;
};

void emit_track(const Track& tr, const std::string& id, double shift, Timepoint chunk, std::vector<InputRecord>& out) {
    auto event = [&](const char* name, Timepoint t) {
        InputRecord r;
        r.id = std::string("ev:") + name + ":" + id + ":" + std::to_string(t);
        r.kind = RecordKind::Event;
        r.name = name;
        r.args = {id};
        r.t = t;
        out.push_back(std::move(r));
    };
    event("appear", tr.appear);
    if (tr.disappears) event("disappear", tr.vanish);

    Timepoint t = tr.appear;
    while (t < tr.vanish) {
        const Activity a = tr.act[t];
        Timepoint end = t + 1;
        while (end < tr.vanish && end - t < chunk && tr.act[end] == a) ++end;
        InputRecord r;
        r.id = std::string("iv:") + kActivityName[a] + ":" + id + ":" + std::to_string(t);
        r.kind = RecordKind::Interval;
        r.name = kActivityName[a];
        r.args = {id};
        r.from = t;
        r.to = end;
        out.push_back(std::move(r));
        t = end;
    }
    for (t = tr.appear; t < tr.vanish; ++t) {
        InputRecord r;
        r.id = "xy:" + id + ":" + std::to_string(t);
        r.kind = RecordKind::Coord;
        r.entity = id;
        r.t = t;
        r.x = tr.x[t] + shift;
        r.y = tr.y[t];
        out.push_back(std::move(r));
    }
}

}  // namespace

std::vector<InputRecord> generate(const GenSpec& spec) {
    spec.validate();
    const Scene scene(spec);
    std::vector<InputRecord> out;
    for (std::size_t c = 0; c < spec.copies; ++c) {
        const std::string suffix = c == 0 ? "" : "_c" + std::to_string(c);
        for (std::size_t i = 0; i < scene.tracks().size(); ++i) {
            emit_track(scene.tracks()[i], "id" + std::to_string(i) + suffix, static_cast<double>(c) * kCopyShift,
                       spec.chunk, out);
        }
    }
    std::sort(out.begin(), out.end(), [](const InputRecord& a, const InputRecord& b) {
        if (a.occurrence() != b.occurrence()) return a.occurrence() < b.occurrence();
        return a.id < b.id;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Benchmarking

BenchReport summarize(std::span<const double> query_ms, const EngineConfig& cfg, std::size_t shards,
                      double sde_rate) {
    BenchReport r;
    r.wm = cfg.wm;
    r.step = cfg.step;
    r.shards = shards;
    r.sde_rate = sde_rate;
    if (!query_ms.empty()) {
        std::vector<double> sorted(query_ms.begin(), query_ms.end());
        std::sort(sorted.begin(), sorted.end());
        double sum = 0;
        for (double v : sorted) sum += v;
        r.avg_ms = sum / static_cast<double>(sorted.size());
        const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
        r.p95_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
        r.max_ms = sorted.back();
    }
    r.realtime = r.avg_ms < static_cast<double>(cfg.step) * cfg.tick_ms;
    return r;
}

std::vector<BenchReport> bench(const EventDescription& ed, const PreparedStream& s, const BenchOptions& opts,
                               std::vector<Diagnostic>* diagnostics) {
    if (opts.repeat < 1) throw std::invalid_argument("repeat must be at least 1");
    std::vector<BenchReport> reports;
    for (const Timepoint wm : opts.wms) {
        DriveOptions d;
        d.config.wm = wm;
        d.config.step = opts.step;
        d.config.tick_ms = opts.tick_ms;
        d.shards = opts.shards;
        d.drain = false;
        std::optional<BenchReport> best;
        for (std::size_t k = 0; k < opts.repeat; ++k) {
            const DriveOutput run = drive(ed, s, d);
            const double span_s = static_cast<double>(run.results.size()) * static_cast<double>(opts.step) *
                                  opts.tick_ms / 1000.0;
            const double rate = span_s > 0 ? static_cast<double>(s.sde_count) / span_s : 0;
            // Queries before the window first fills see less than WM of stream.
            std::vector<double> steady;
            for (std::size_t i = 0; i < run.results.size(); ++i) {
                if (run.results[i].q >= wm) steady.push_back(run.query_ms[i]);
            }
            BenchReport r = summarize(steady.empty() ? run.query_ms : steady, d.config, run.shard_count, rate);
            if (!best || r.avg_ms < best->avg_ms) best = r;
            if (diagnostics != nullptr && k == 0) {
                diagnostics->insert(diagnostics->end(), run.diagnostics.begin(), run.diagnostics.end());
            }
        }
        reports.push_back(*best);
    }
    return reports;
}

void write_bench_csv(std::ostream& out, std::span<const BenchReport> reports) {
    out << "wm,step,shards,avg_ms,p95_ms,max_ms,realtime\n";
    const auto flags = out.flags();
    out << std::fixed << std::setprecision(3);
    for (const auto& r : reports) {
        out << r.wm << ',' << r.step << ',' << r.shards << ',' << r.avg_ms << ',' << r.p95_ms << ',' << r.max_ms
            << ',' << (r.realtime ? "true" : "false") << '\n';
    }
    out.flags(flags);
}

}  // namespace rtec
