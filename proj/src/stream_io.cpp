#include "rtec/stream_io.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include "json.hpp"

namespace rtec {

using nlohmann::json;
using nlohmann::ordered_json;

StreamError::StreamError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

class LineReader {
public:
    LineReader(const json& obj, std::size_t line) : obj_(obj), line_(line) {}

    [[noreturn]] void fail(const std::string& msg) const { throw StreamError(line_, msg); }

    bool has(const char* field) const { return obj_.contains(field) && !obj_.at(field).is_null(); }

    std::string str(const char* field) const {
        if (!has(field)) fail(std::string("missing field \"") + field + "\"");
        const json& v = obj_.at(field);
        if (!v.is_string()) fail(std::string("field \"") + field + "\" must be a string");
        return v.get<std::string>();
    }

    Timepoint tick(const char* field) const {
        if (!has(field)) fail(std::string("missing field \"") + field + "\"");
        const json& v = obj_.at(field);
        if (!v.is_number_integer()) fail(std::string("field \"") + field + "\" must be an integer");
        const auto t = v.get<std::int64_t>();
        if (t < 0) fail(std::string("field \"") + field + "\" must be non-negative");
        return t;
    }

    double number(const char* field) const {
        if (!has(field)) fail(std::string("missing field \"") + field + "\"");
        const json& v = obj_.at(field);
        if (!v.is_number()) fail(std::string("field \"") + field + "\" must be a number");
        return v.get<double>();
    }

    std::vector<std::string> args() const {
        std::vector<std::string> out;
        if (!has("args")) return out;
        const json& v = obj_.at("args");
        if (!v.is_array()) fail("field \"args\" must be an array");
        for (const auto& a : v) {
            if (a.is_string()) {
                out.push_back(a.get<std::string>());
            } else if (a.is_number_integer()) {
                out.push_back(std::to_string(a.get<std::int64_t>()));
            } else {
                fail("arguments must be strings or integers");
            }
        }
        return out;
    }

private:
    const json& obj_;
    std::size_t line_;
};

InputRecord parse_record(const json& obj, std::size_t line) {
    LineReader r(obj, line);
    if (!obj.is_object()) r.fail("expected a JSON object");
    InputRecord rec;
    rec.id = r.str("id");
    if (rec.id.empty()) r.fail("empty id");
    if (r.has("arrival")) rec.arrival = r.tick("arrival");

    const std::string action = r.str("action");
    if (action == "assert") {
        rec.action = Action::Assert;
    } else if (action == "retract") {
        rec.action = Action::Retract;
    } else if (action == "update") {
        rec.action = Action::Update;
    } else {
        r.fail("unknown action \"" + action + "\"");
    }

    // A retraction needs only an id; any payload is kept for round trips.
    const bool payload_required = rec.action != Action::Retract;
    if (!r.has("kind")) {
        if (payload_required) r.fail("missing field \"kind\"");
        return rec;
    }
    const std::string kind = r.str("kind");
    if (kind == "event") {
        rec.kind = RecordKind::Event;
    } else if (kind == "interval") {
        rec.kind = RecordKind::Interval;
    } else if (kind == "coord") {
        rec.kind = RecordKind::Coord;
    } else {
        r.fail("unknown kind \"" + kind + "\"");
    }

    auto optional_tick = [&](const char* f, Timepoint& out) {
        if (payload_required || r.has(f)) out = r.tick(f);
    };
    switch (rec.kind) {
        case RecordKind::Event:
            if (payload_required || r.has("name")) rec.name = r.str("name");
            rec.args = r.args();
            optional_tick("t", rec.t);
            break;
        case RecordKind::Interval:
            if (payload_required || r.has("name")) rec.name = r.str("name");
            rec.args = r.args();
            if (r.has("value")) rec.value = r.str("value");
            optional_tick("from", rec.from);
            rec.to = r.has("to") ? r.tick("to") : kOpen;
            if (payload_required && rec.from >= rec.to) r.fail("interval must satisfy from < to");
            break;
        case RecordKind::Coord:
            if (payload_required || r.has("entity")) rec.entity = r.str("entity");
            optional_tick("t", rec.t);
            if (payload_required || r.has("x")) rec.x = r.number("x");
            if (payload_required || r.has("y")) rec.y = r.number("y");
            break;
    }
    return rec;
}

ordered_json record_json(const InputRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    if (r.arrival) j["arrival"] = *r.arrival;
    j["action"] = to_string(r.action);
    j["kind"] = to_string(r.kind);
    switch (r.kind) {
        case RecordKind::Event:
            j["name"] = r.name;
            j["args"] = r.args;
            j["t"] = r.t;
            break;
        case RecordKind::Interval:
            j["name"] = r.name;
            j["args"] = r.args;
            j["value"] = r.value;
            j["from"] = r.from;
            if (r.to == kOpen) {
                j["to"] = nullptr;
            } else {
                j["to"] = r.to;
            }
            break;
        case RecordKind::Coord:
            j["entity"] = r.entity;
            j["t"] = r.t;
            j["x"] = r.x;
            j["y"] = r.y;
            break;
    }
    return j;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

// Per-entity sample tracks, sorted by time; entity order is by name.
struct Tracks {
    std::vector<std::string> names;
    std::vector<std::vector<CoordSample>> samples;
};

Tracks build_tracks(std::span<const CoordSample> samples, double threshold) {
    if (threshold < 0 || std::isnan(threshold)) throw std::invalid_argument("close threshold must be non-negative");
    std::map<std::string, std::vector<CoordSample>> by_entity;
    for (const auto& s : samples) by_entity[s.entity].push_back(s);
    Tracks t;
    for (auto& [name, v] : by_entity) {
        std::stable_sort(v.begin(), v.end(), [](const CoordSample& a, const CoordSample& b) { return a.t < b.t; });
        t.names.push_back(name);
        t.samples.push_back(std::move(v));
    }
    return t;
}

// Maximal runs of consecutive close ticks for one pair, by a merge walk.
std::vector<Interval> close_runs(const std::vector<CoordSample>& a, const std::vector<CoordSample>& b,
                                 double threshold) {
    std::vector<Interval> runs;
    const double limit = threshold * threshold;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].t < b[j].t) {
            ++i;
        } else if (b[j].t < a[i].t) {
            ++j;
        } else {
            const double dx = a[i].x - b[j].x;
            const double dy = a[i].y - b[j].y;
            if (dx * dx + dy * dy <= limit) {
                const Timepoint t = a[i].t;
                if (!runs.empty() && runs.back().end >= t) {
                    runs.back().end = std::max(runs.back().end, t + 1);
                } else {
                    runs.push_back({t, t + 1});
                }
            }
            ++i;
            ++j;
        }
    }
    return runs;
}

void append_close(std::vector<InputRecord>& out, const std::string& a, const std::string& b,
                  const std::vector<Interval>& runs) {
    for (const auto& iv : runs) {
        for (int side = 0; side < 2; ++side) {
            const std::string& p = side == 0 ? a : b;
            const std::string& q = side == 0 ? b : a;
            InputRecord r;
            r.id = "close:" + p + ":" + q + ":" + std::to_string(iv.start);
            r.kind = RecordKind::Interval;
            r.name = "close";
            r.args = {p, q};
            r.from = iv.start;
            r.to = iv.end;
            out.push_back(std::move(r));
        }
    }
}

void sort_close(std::vector<InputRecord>& out) {
    std::sort(out.begin(), out.end(), [](const InputRecord& x, const InputRecord& y) {
        if (x.from != y.from) return x.from < y.from;
        return x.id < y.id;
    });
}

}  // namespace

std::vector<InputRecord> read_stream(std::istream& in, std::vector<Diagnostic>* diagnostics) {
    std::vector<InputRecord> out;
    std::unordered_set<std::string> live;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            throw StreamError(line, std::string("malformed JSON: ") + e.what());
        }
        InputRecord rec = parse_record(obj, line);
        switch (rec.action) {
            case Action::Assert:
                if (!live.insert(rec.id).second) throw StreamError(line, "duplicate id \"" + rec.id + "\"");
                break;
            case Action::Retract:
            case Action::Update:
                if (live.count(rec.id) == 0 && diagnostics != nullptr) {
                    diagnostics->push_back({Diagnostic::Severity::Warning, "unknown-id",
                                            std::string(to_string(rec.action)) + " of unknown id \"" + rec.id + "\"",
                                            {static_cast<int>(line), 1}});
                }
                if (rec.action == Action::Retract) {
                    live.erase(rec.id);
                } else {
                    live.insert(rec.id);
                }
                break;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<InputRecord> read_stream_file(const std::string& path, std::vector<Diagnostic>* diagnostics) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_stream(in, diagnostics);
}

void write_stream(std::ostream& out, std::span<const InputRecord> records) {
    for (const auto& r : records) out << record_json(r).dump() << '\n';
}

void write_stream_file(const std::string& path, std::span<const InputRecord> records) {
    auto out = open_out(path);
    write_stream(out, records);
}

std::string result_line(const ResultEntry& e, Timepoint q) {
    ordered_json j;
    j["name"] = e.name;
    j["args"] = e.args;
    j["value"] = e.value;
    j["from"] = e.interval.start;
    if (e.interval.open()) {
        j["to"] = nullptr;
    } else {
        j["to"] = e.interval.end;
    }
    j["stability"] = to_string(e.stability);
    j["q"] = q;
    return j.dump();
}

void write_results(std::ostream& out, std::span<const RecognitionResult> results) {
    std::vector<const RecognitionResult*> order;
    for (const auto& r : results) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->q < b->q; });
    for (const auto* r : order) {
        std::vector<const ResultEntry*> entries;
        for (const auto& e : r->entries) entries.push_back(&e);
        std::sort(entries.begin(), entries.end(), [](const auto* a, const auto* b) { return entry_less(*a, *b); });
        for (const auto* e : entries) out << result_line(*e, r->q) << '\n';
    }
}

void write_results_file(const std::string& path, std::span<const RecognitionResult> results) {
    auto out = open_out(path);
    write_results(out, results);
}

std::vector<InputRecord> simulate_delays(std::vector<InputRecord> records, const DelayModel& model) {
    if (model.kind == DelayModel::Kind::None) return records;
    if (model.lo < 0 || model.hi < model.lo) throw std::invalid_argument("delay bounds must satisfy 0 <= lo <= hi");
    std::mt19937_64 rng(model.seed);
    std::uniform_int_distribution<Timepoint> dist(model.lo, model.hi);
    for (auto& r : records) {
        const Timepoint d = model.kind == DelayModel::Kind::Fixed ? model.lo : dist(rng);
        r.arrival = r.occurrence() + d;
    }
    std::stable_sort(records.begin(), records.end(), [](const InputRecord& a, const InputRecord& b) {
        if (*a.arrival != *b.arrival) return *a.arrival < *b.arrival;
        if (a.occurrence() != b.occurrence()) return a.occurrence() < b.occurrence();
        return a.id < b.id;
    });
    return records;
}

std::vector<InputRecord> closeness(std::span<const CoordSample> samples, double threshold) {
    const Tracks tracks = build_tracks(samples, threshold);
    const auto n = static_cast<std::int64_t>(tracks.names.size());
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    std::vector<std::vector<Interval>> runs(pairs.size());
    const auto np = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t k = 0; k < np; ++k) {
        const auto [i, j] = pairs[k];
        runs[k] = close_runs(tracks.samples[i], tracks.samples[j], threshold);
    }
    std::vector<InputRecord> out;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        append_close(out, tracks.names[pairs[k].first], tracks.names[pairs[k].second], runs[k]);
    }
    sort_close(out);
    return out;
}

std::vector<InputRecord> closeness_serial(std::span<const CoordSample> samples, double threshold) {
    const Tracks tracks = build_tracks(samples, threshold);
    std::vector<InputRecord> out;
    for (std::size_t i = 0; i < tracks.names.size(); ++i) {
        for (std::size_t j = i + 1; j < tracks.names.size(); ++j) {
            append_close(out, tracks.names[i], tracks.names[j],
                         close_runs(tracks.samples[i], tracks.samples[j], threshold));
        }
    }
    sort_close(out);
    return out;
}

std::vector<CoordSample> coord_samples(std::span<const InputRecord> records) {
    std::vector<CoordSample> out;
    for (const auto& r : records) {
        if (r.kind == RecordKind::Coord && r.action != Action::Retract) out.push_back({r.entity, r.t, r.x, r.y});
    }
    return out;
}

std::vector<std::string> collect_entities(std::span<const InputRecord> records) {
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (r.kind == RecordKind::Coord) {
            if (!r.entity.empty()) seen.insert(r.entity);
        } else {
            seen.insert(r.args.begin(), r.args.end());
        }
    }
    return {seen.begin(), seen.end()};
}

}  // namespace rtec
