#include "rtec/engine.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <deque>
#include <set>
#include <sstream>

namespace rtec {

namespace {

const IntervalList kEmptyList;
const std::vector<Timepoint> kNoTimes;

bool parse_integer(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    // Only canonical spellings become integers, so "007" stays a symbol.
    return ec == std::errc() && p == s.data() + s.size() && std::to_string(out) == s;
}

template <class T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

struct UnitHash {
    std::size_t operator()(const Unit& u) const { return GroundKeyHash{}(GroundKey{u.name, u.args, false, {}}); }
};

GroundKey key_of(const Unit& u) { return {u.name, u.args, false, {}}; }
GroundKey key_of(const Unit& u, const Value& v) { return {u.name, u.args, true, v}; }

struct NameFirst {
    SymbolId name;
    Value first;
    friend bool operator==(const NameFirst&, const NameFirst&) = default;
};
struct NameFirstHash {
    std::size_t operator()(const NameFirst& k) const { return k.name * 2654435761u ^ ValueHash{}(k.first); }
};

}  // namespace

const char* to_string(ReportMode m) {
    switch (m) {
        case ReportMode::Asap: return "asap";
        case ReportMode::Partial: return "partial";
        case ReportMode::Final: return "final";
    }
    return "?";
}

const char* to_string(Stability s) {
    switch (s) {
        case Stability::Open: return "open";
        case Stability::Partial: return "partial";
        case Stability::Final: return "final";
    }
    return "?";
}

ReportMode parse_report_mode(std::string_view s) {
    if (s == "asap") return ReportMode::Asap;
    if (s == "partial" || s == "partial_stable") return ReportMode::Partial;
    if (s == "final") return ReportMode::Final;
    throw std::invalid_argument("unknown report mode '" + std::string(s) + "' (expected asap, partial or final)");
}

void EngineConfig::validate() const {
    if (wm <= 0 || step <= 0) throw std::invalid_argument("wm and step must be positive");
    if (wm < step) {
        throw std::invalid_argument("wm (" + std::to_string(wm) + ") must not be smaller than step (" +
                                    std::to_string(step) + ")");
    }
    if (!(tick_ms > 0)) throw std::invalid_argument("tick duration must be positive");
}

bool entry_less(const ResultEntry& a, const ResultEntry& b) {
    if (a.name != b.name) return a.name < b.name;
    if (a.args != b.args) return a.args < b.args;
    if (a.value != b.value) return a.value < b.value;
    if (a.interval.start != b.interval.start) return a.interval.start < b.interval.start;
    return a.interval.end < b.interval.end;
}

// ---------------------------------------------------------------------------

struct Engine::Impl {
    // A body literal every answer of a rule must satisfy with non-empty
    // data, and which fixes some head arguments. Units that no key of the
    // literal can reach, and that carry no state, cannot produce anything.
    struct Guard {
        bool is_event = false;
        SymbolId name = 0;
        const std::vector<Term>* args = nullptr;
        const Term* value = nullptr;
        std::vector<std::pair<std::size_t, std::size_t>> binds;  // (literal arg, head position)
    };

    struct NameInfo {
        SymbolId name = 0;
        ItemKind kind = ItemKind::SimpleFluent;
        int level = 0;
        std::vector<const Rule*> rules;
        std::vector<Value> values;         // fluents: head values in first-rule order
        std::vector<std::size_t> units;    // required units, indices into `units`
        std::vector<std::uint32_t> value_rank;  // position of each value in text order
        std::vector<Guard> guards;
        bool all_active = true;                 // some rule has no usable guard
        /// Required units by argument position and value, for partial guards.
        std::vector<std::unordered_map<Value, std::vector<std::size_t>, ValueHash>> by_position;
    };

    struct EmitKey {
        std::uint32_t unit_rank;
        std::uint32_t value_rank;
        Timepoint start;
        Timepoint end;
        std::uint32_t index;
    };

    struct FluentState {
        IntervalList list;
        std::optional<Timepoint> kept;       // start carried into the current query
        std::optional<Timepoint> kept_next;  // start to carry into the next one
        std::optional<Interval> prefix;      // SD: piece before the boundary
        bool seen = false;
    };

    Impl(const EventDescription& description, EngineConfig c, EngineOptions o)
        : ed(description), cfg(c), opts(std::move(o)) {
        cfg.validate();
        if (opts.shard_count == 0 || opts.shard_index >= opts.shard_count) {
            throw std::invalid_argument("shard index out of range");
        }
        next_q = cfg.step;
        build_static();
    }

    // ---- static structure ----

    void build_static() {
        for (const auto& dom : ed.domains) {
            std::vector<Value> members;
            if (dom.from_input) {
                auto it = opts.domains.find(ed.symbols.name(dom.name));
                if (it != opts.domains.end()) {
                    for (const auto& m : it->second) members.push_back(value_of(m));
                }
            } else {
                members = dom.members;
            }
            domains[dom.name] = std::move(members);
        }

        for (const auto& d : ed.declarations) {
            if (is_input(d.kind)) continue;
            NameInfo info;
            info.name = d.name;
            info.kind = d.kind;
            auto lv = ed.name_levels.find(d.name);
            info.level = lv == ed.name_levels.end() ? 1 : lv->second;
            for (const auto& r : ed.rules) {
                if (r.head_name() == d.name) info.rules.push_back(&r);
            }
            if (d.kind != ItemKind::Event) info.values = ed.head_values(d.name);
            names.push_back(std::move(info));
        }
        for (const auto& r : ed.rules) {
            if (ed.name_levels.count(r.head_name()) == 0) {
                throw std::invalid_argument("event description is not stratified; call load_description");
            }
        }
        std::stable_sort(names.begin(), names.end(),
                         [](const NameInfo& a, const NameInfo& b) { return a.level < b.level; });
        for (std::size_t i = 0; i < names.size(); ++i) name_index[names[i].name] = i;

        // Units of every defined item.
        for (const auto& d : ed.declarations) {
            if (is_input(d.kind)) continue;
            ground(d, [&](const Args& args) { units.push_back({d.name, args}); });
        }
        for (std::size_t i = 0; i < units.size(); ++i) unit_index[units[i]] = i;
        rank_by_text();

        assign_shards();
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (required[i]) names[name_index.at(units[i].name)].units.push_back(i);
        }
        live_states.assign(units.size(), 0);
        active.assign(units.size(), 0);
        for (auto& info : names) plan_guards(info);
    }

    static std::optional<Guard> guard_of(const Rule& r, const Literal& lit, const std::vector<Term>& head,
                                         const std::vector<bool>& strict) {
        Guard g;
        const std::vector<Term>* args = nullptr;
        if (const auto* h = std::get_if<HappensAt>(&lit.node)) {
            if (h->event.kind == EventPattern::Kind::Plain) {
                g.is_event = true;
                g.name = h->event.name;
                args = &h->event.args;
            } else {
                g.name = h->event.fluent.name;
                args = &h->event.fluent.args;
                g.value = &h->event.fluent.value;
            }
        } else if (const auto* h = std::get_if<HoldsAt>(&lit.node)) {
            g.name = h->fluent.name;
            args = &h->fluent.args;
            g.value = &h->fluent.value;
        } else if (const auto* h = std::get_if<HoldsFor>(&lit.node)) {
            if (r.kind != RuleKind::HoldsFor || !strict[h->interval]) return std::nullopt;
            g.name = h->fluent.name;
            args = &h->fluent.args;
            g.value = &h->fluent.value;
        } else {
            return std::nullopt;
        }
        g.args = args;
        for (std::size_t i = 0; i < args->size(); ++i) {
            const Term& t = (*args)[i];
            if (!t.is_var()) continue;
            for (std::size_t j = 0; j < head.size(); ++j) {
                if (head[j].is_var() && head[j].var == t.var) {
                    g.binds.emplace_back(i, j);
                    break;
                }
            }
        }
        if (g.binds.empty()) return std::nullopt;
        return g;
    }

    // Interval variables that are empty whenever `seed` is empty.
    static std::vector<bool> strict_from(const Rule& r, VarId seed) {
        std::vector<bool> strict(r.var_names.size(), false);
        strict[seed] = true;
        for (const auto& lit : r.body) {
            const auto* c = std::get_if<IntervalConstruct>(&lit.node);
            if (c == nullptr) continue;
            bool out = false;
            switch (c->op) {
                case IntervalConstruct::Op::Intersect:
                    out = std::any_of(c->inputs.begin(), c->inputs.end(), [&](VarId v) { return strict[v]; });
                    break;
                case IntervalConstruct::Op::Union:
                    out = !c->inputs.empty() &&
                          std::all_of(c->inputs.begin(), c->inputs.end(), [&](VarId v) { return strict[v]; });
                    break;
                case IntervalConstruct::Op::RelativeComplement: out = strict[c->base]; break;
            }
            if (out) strict[c->output] = true;
        }
        return strict;
    }

    void plan_guards(NameInfo& info) {
        info.all_active = false;
        for (const Rule* r : info.rules) {
            // Terminations alone never start anything; units with state are always evaluated.
            if (r->kind == RuleKind::TerminatedAt) continue;
            if (r->kind == RuleKind::InitiatedAt && r->fluent_head.value.is_var()) continue;
            const auto& head = r->kind == RuleKind::HappensAt ? r->event_head.args : r->fluent_head.args;
            std::optional<Guard> best;
            for (const auto& lit : r->body) {
                std::vector<bool> strict;
                if (const auto* h = std::get_if<HoldsFor>(&lit.node); h != nullptr && r->kind == RuleKind::HoldsFor) {
                    strict = strict_from(*r, h->interval);
                    if (!strict[r->interval]) continue;
                }
                auto g = guard_of(*r, lit, head, strict);
                if (g && (!best || g->binds.size() > best->binds.size())) best = std::move(g);
            }
            if (!best) {
                info.all_active = true;
                info.guards.clear();
                return;
            }
            info.guards.push_back(std::move(*best));
        }
        std::size_t arity = 0;
        for (std::size_t ui : info.units) arity = std::max(arity, units[ui].args.size());
        info.by_position.resize(arity);
        for (std::size_t ui : info.units) {
            for (std::size_t p = 0; p < units[ui].args.size(); ++p) info.by_position[p][units[ui].args[p]].push_back(ui);
        }
    }

    // Marks required units of `info` that some guard can reach this query.
    void mark_active(const NameInfo& info) {
        // A shard may hold no units of this name; the position index is then empty.
        if (info.units.empty()) return;
        for (const Guard& g : info.guards) {
            for (const GroundKey& key : candidates(g.name, std::nullopt)) {
                if (key.args.size() != g.args->size()) continue;
                if (g.is_event ? event_list(key).empty() : fluent_list(key).empty()) continue;
                if (g.value != nullptr && !g.value->is_var() && !(g.value->constant == key.value)) continue;
                bool ok = true;
                for (std::size_t i = 0; ok && i < g.args->size(); ++i) {
                    const Term& t = (*g.args)[i];
                    if (!t.is_var()) ok = t.constant == key.args[i];
                }
                if (!ok) continue;
                Unit probe{info.name, {}};
                bool full = g.binds.size() == info.by_position.size();
                std::array<std::optional<Value>, kMaxArity> at{};
                for (const auto& [li, hp] : g.binds) {
                    if (at[hp] && !(*at[hp] == key.args[li])) ok = false;
                    at[hp] = key.args[li];
                }
                if (!ok) continue;
                for (std::size_t p = 0; full && p < info.by_position.size(); ++p) {
                    if (!at[p]) {
                        full = false;
                    } else {
                        probe.args.push_back(*at[p]);
                    }
                }
                if (full) {
                    auto it = unit_index.find(probe);
                    if (it != unit_index.end()) active[it->second] = 1;
                    continue;
                }
                const std::size_t lead = g.binds.front().second;
                auto it = info.by_position[lead].find(*at[lead]);
                if (it == info.by_position[lead].end()) continue;
                for (std::size_t ui : it->second) {
                    bool match = true;
                    for (std::size_t p = 0; match && p < units[ui].args.size(); ++p) {
                        match = !at[p] || *at[p] == units[ui].args[p];
                    }
                    if (match) active[ui] = 1;
                }
            }
        }
    }

    // Output order is textual; ranking once spares string comparisons per query.
    void rank_by_text() {
        std::vector<std::pair<std::string, std::vector<std::string>>> text(units.size());
        for (std::size_t i = 0; i < units.size(); ++i) {
            text[i].first = ed.symbols.name(units[i].name);
            for (const auto& a : units[i].args) text[i].second.push_back(text_of(a));
        }
        std::vector<std::uint32_t> order(units.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return text[a] < text[b]; });
        unit_rank.assign(units.size(), 0);
        for (std::size_t r = 0; r < order.size(); ++r) unit_rank[order[r]] = static_cast<std::uint32_t>(r);
        for (auto& info : names) {
            std::vector<std::uint32_t> vo(info.values.size());
            for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = static_cast<std::uint32_t>(i);
            std::sort(vo.begin(), vo.end(),
                      [&](std::uint32_t a, std::uint32_t b) { return text_of(info.values[a]) < text_of(info.values[b]); });
            info.value_rank.assign(vo.size(), 0);
            for (std::size_t r = 0; r < vo.size(); ++r) info.value_rank[vo[r]] = static_cast<std::uint32_t>(r);
        }
    }

    template <class F>
    void ground(const Declaration& d, F&& emit) {
        if (!d.grounding) {
            if (d.arity == 0) emit(Args{});
            return;
        }
        const Grounding& g = *d.grounding;
        auto members = [&](SymbolId dom) -> const std::vector<Value>& {
            static const std::vector<Value> none;
            auto it = domains.find(dom);
            return it == domains.end() ? none : it->second;
        };
        if (g.shape != Grounding::Shape::Product) {
            const auto& ms = members(g.domains.front());
            for (std::size_t i = 0; i < ms.size(); ++i) {
                for (std::size_t j = 0; j < ms.size(); ++j) {
                    if (i == j) continue;
                    if (g.shape == Grounding::Shape::UnorderedPairs &&
                        text_of(ms[i]).compare(text_of(ms[j])) > 0) {
                        continue;
                    }
                    emit(Args{ms[i], ms[j]});
                }
            }
            return;
        }
        Args cur;
        std::function<void(std::size_t)> rec = [&](std::size_t pos) {
            if (pos == g.domains.size()) {
                emit(cur);
                return;
            }
            for (const auto& m : members(g.domains[pos])) {
                Args saved = cur;
                cur.push_back(m);
                rec(pos + 1);
                cur = saved;
            }
        };
        rec(0);
    }

    // Groups units by their set of distinct arguments, deals the groups
    // round-robin, and closes each shard's set under static dependencies.
    void assign_shards() {
        std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < units.size(); ++i) {
            std::vector<std::string> key;
            for (const auto& a : units[i].args) key.push_back(text_of(a));
            sort_unique(key);
            groups[key].push_back(i);
        }
        group_count = groups.size();
        owned.assign(units.size(), false);
        std::size_t g = 0;
        for (const auto& [key, members] : groups) {
            if (g % opts.shard_count == opts.shard_index) {
                for (std::size_t i : members) owned[i] = true;
            }
            ++g;
        }
        required = owned;
        std::vector<std::size_t> work;
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (owned[i]) work.push_back(i);
        }
        while (!work.empty()) {
            const std::size_t u = work.back();
            work.pop_back();
            for_each_static_dependency(units[u], [&](std::size_t d) {
                if (!required[d]) {
                    required[d] = true;
                    work.push_back(d);
                }
            });
        }
    }

    template <class F>
    void for_each_static_dependency(const Unit& u, F&& visit) {
        const NameInfo& info = names[name_index.at(u.name)];
        for (const Rule* r : info.rules) {
            const auto& head_args = r->kind == RuleKind::HappensAt ? r->event_head.args : r->fluent_head.args;
            std::vector<std::optional<Value>> vals(r->var_names.size());
            bool applies = true;
            for (std::size_t i = 0; i < head_args.size() && applies; ++i) {
                const Term& t = head_args[i];
                if (!t.is_var()) {
                    applies = t.constant == u.args[i];
                } else if (vals[t.var] && !(*vals[t.var] == u.args[i])) {
                    applies = false;
                } else {
                    vals[t.var] = u.args[i];
                }
            }
            if (!applies) continue;
            auto depend = [&](SymbolId name, const std::vector<Term>& args) {
                auto ni = name_index.find(name);
                if (ni == name_index.end()) return;  // input
                std::vector<std::optional<Value>> pattern;
                bool complete = true;
                for (const auto& a : args) {
                    if (!a.is_var()) {
                        pattern.emplace_back(a.constant);
                    } else {
                        pattern.push_back(vals[a.var]);
                        complete = complete && vals[a.var].has_value();
                    }
                }
                if (complete) {
                    Unit dep{name, {}};
                    for (const auto& p : pattern) dep.args.push_back(*p);
                    auto it = unit_index.find(dep);
                    if (it != unit_index.end()) visit(it->second);
                    return;
                }
                for (std::size_t i = 0; i < units.size(); ++i) {
                    if (units[i].name != name) continue;
                    bool match = true;
                    for (std::size_t k = 0; k < pattern.size() && match; ++k) {
                        match = !pattern[k] || *pattern[k] == units[i].args[k];
                    }
                    if (match) visit(i);
                }
            };
            for (const auto& lit : r->body) {
                if (const auto* h = std::get_if<HappensAt>(&lit.node)) {
                    if (h->event.kind == EventPattern::Kind::Plain) {
                        depend(h->event.name, h->event.args);
                    } else {
                        depend(h->event.fluent.name, h->event.fluent.args);
                    }
                } else if (const auto* h = std::get_if<HoldsAt>(&lit.node)) {
                    depend(h->fluent.name, h->fluent.args);
                } else if (const auto* h = std::get_if<HoldsFor>(&lit.node)) {
                    depend(h->fluent.name, h->fluent.args);
                }
            }
        }
    }

    // ---- values ----

    Value value_of(std::string_view s) {
        std::int64_t n = 0;
        if (parse_integer(s, n)) return Value::integer(n);
        return Value::symbol(ed.symbols.intern(s));
    }

    std::string text_of(const Value& v) const { return to_string(v, ed.symbols); }

    void warn(std::string code, std::string message) {
        diags.push_back({Diagnostic::Severity::Warning, std::move(code), std::move(message), {}});
    }

    // ---- input ----

    void apply(const InputRecord& r, Timepoint boundary) {
        if (r.action == Action::Retract || r.action == Action::Update) {
            if (!store.erase(r.id)) {
                warn("unknown-id", std::string(to_string(r.action)) + " of unknown or evicted record '" + r.id + "'");
            }
            if (r.action == Action::Retract) return;
        }
        if (r.kind == RecordKind::Coord) {
            warn("coord-record", "coordinate record '" + r.id + "' reached the engine; convert it to close first");
            return;
        }
        const Declaration* d = ed.find_declaration(r.name);
        const bool want_event = r.kind == RecordKind::Event;
        if (d == nullptr || !is_input(d->kind) || (d->kind == ItemKind::InputEvent) != want_event) {
            warn("unknown-input", "record '" + r.id + "' names '" + r.name + "', which is not a declared input " +
                                      (want_event ? "event" : "fluent"));
            return;
        }
        if (d->arity != r.args.size()) {
            warn("arity", "record '" + r.id + "' has " + std::to_string(r.args.size()) + " arguments; '" + r.name +
                              "' takes " + std::to_string(d->arity));
            return;
        }
        if (!want_event && r.from >= r.to) {
            warn("malformed", "record '" + r.id + "' has an empty interval");
            return;
        }
        if (r.last_point() <= boundary) {
            warn("late-record", "record '" + r.id + "' lies at or before the window start " +
                                    std::to_string(boundary) + " and was dropped");
            return;
        }
        SdeStore::Fact f;
        f.id = r.id;
        f.key.name = d->name;
        for (const auto& a : r.args) f.key.args.push_back(value_of(a));
        f.is_event = want_event;
        if (want_event) {
            f.t = r.t;
        } else {
            f.key.has_value = true;
            f.key.value = value_of(r.value);
            f.span = {r.from, r.to};
        }
        if (store.insert(std::move(f)) == SdeStore::InsertResult::DuplicateId) {
            warn("duplicate-id", "record id '" + r.id + "' is already resident; assert ignored");
        }
    }

    // ---- evaluation ----

    const IntervalList& fluent_list(const GroundKey& key) {
        if (name_index.count(key.name) == 0) return store.intervals(key);
        auto it = fluents.find(key);
        return it == fluents.end() ? kEmptyList : it->second.list;
    }

    const std::vector<Timepoint>& event_list(const GroundKey& key) {
        if (name_index.count(key.name) == 0) return store.event_times(key);
        auto it = events.find(key);
        return it == events.end() ? kNoTimes : it->second;
    }

    // Candidate keys for a name with the first argument possibly bound.
    const std::vector<GroundKey>& candidates(SymbolId name, const std::optional<Value>& first) {
        static const std::vector<GroundKey> none;
        if (name_index.count(name) == 0) {
            return first ? store.keys_by_first(name, *first) : store.keys_by_name(name);
        }
        if (first) {
            auto it = derived_by_first.find({name, *first});
            return it == derived_by_first.end() ? none : it->second;
        }
        auto it = derived_by_name.find(name);
        return it == derived_by_name.end() ? none : it->second;
    }

    void publish(const GroundKey& key) {
        derived_by_name[key.name].push_back(key);
        if (!key.args.empty()) derived_by_first[{key.name, key.args[0]}].push_back(key);
    }

    class Solver;
    std::unordered_map<const Rule*, std::unique_ptr<Solver>> solver_cache;
    Solver& solver_for(const Rule& r);

    void evaluate_simple(NameInfo& info, const Unit& u);
    void evaluate_sd(NameInfo& info, const Unit& u);
    void evaluate_event(NameInfo& info, const Unit& u);
    RecognitionResult run_query(Timepoint qi);
    void emit(const GroundKey& key, const IntervalList& list, std::uint32_t unit_rank, std::uint32_t value_rank,
              RecognitionResult& out);
    ResultEntry make_entry(const GroundKey& key, const Interval& iv) const;
    void evict(const GroundKey& key, const IntervalList& previous);

    Stability classify(const Interval& iv) const {
        if (iv.open()) return Stability::Open;
        return iv.end <= next_boundary ? Stability::Final : Stability::Partial;
    }

    EventDescription ed;
    EngineConfig cfg;
    EngineOptions opts;
    SdeStore store;
    std::vector<InputRecord> pending;
    std::vector<Diagnostic> diags;
    HistorySink sink;

    std::unordered_map<SymbolId, std::vector<Value>> domains;
    std::vector<NameInfo> names;
    std::unordered_map<SymbolId, std::size_t> name_index;
    std::vector<Unit> units;
    std::unordered_map<Unit, std::size_t, UnitHash> unit_index;
    std::vector<bool> owned;
    std::vector<bool> required;
    std::vector<std::uint32_t> unit_rank;
    std::vector<std::uint16_t> live_states;  // per unit: fluent-values with state
    std::vector<char> active;
    std::size_t current_unit = 0;
    std::vector<EmitKey> emit_order;
    std::vector<std::vector<Timepoint>> scratch_inits, scratch_terms;
    std::vector<Timepoint> scratch_starts, scratch_breaks;
    std::size_t group_count = 0;

    std::unordered_map<GroundKey, FluentState, GroundKeyHash> fluents;
    std::unordered_map<GroundKey, std::vector<Timepoint>, GroundKeyHash> events;
    std::unordered_map<SymbolId, std::vector<GroundKey>> derived_by_name;
    std::unordered_map<NameFirst, std::vector<GroundKey>, NameFirstHash> derived_by_first;

    Timepoint next_q = 0;
    Timepoint q = 0;
    Timepoint boundary = 0;
    Timepoint next_boundary = 0;
    bool started = false;
    bool owned_now = false;
};

// Left-to-right backtracking over a rule body with head arguments pre-bound.
class Engine::Impl::Solver {
public:
    Solver(Impl& eng, const Rule& rule) : eng_(eng), rule_(rule) {
        vals_.resize(rule.var_names.size());
        bound_.assign(rule.var_names.size(), false);
        ivs_.assign(rule.var_names.size(), nullptr);
    }

    /// Calls `on_solution` with the solver's bindings for each answer.
    template <class F>
    void run(const Unit& u, F&& on_solution) {
        const auto& head_args = rule_.kind == RuleKind::HappensAt ? rule_.event_head.args : rule_.fluent_head.args;
        undo(0);
        if (!arena_.empty()) arena_.clear();
        bool ok = true;
        for (std::size_t i = 0; ok && i < head_args.size(); ++i) ok = unify(head_args[i], u.args[i]);
        if (ok) {
            std::function<void()> cb = [&] { on_solution(*this); };
            solve(0, cb);
        }
        undo(0);
        if (!arena_.empty()) arena_.clear();
    }

    std::optional<Value> value(const Term& t) const {
        if (!t.is_var()) return t.constant;
        if (bound_[t.var]) return vals_[t.var];
        return std::nullopt;
    }

    const IntervalList* interval(VarId v) const { return ivs_[v]; }

private:
    bool unify(const Term& t, const Value& v) {
        if (!t.is_var()) return t.constant == v;
        if (bound_[t.var]) return vals_[t.var] == v;
        bound_[t.var] = true;
        vals_[t.var] = v;
        trail_.push_back(t.var);
        return true;
    }

    void undo(std::size_t mark) {
        while (trail_.size() > mark) {
            bound_[trail_.back()] = false;
            ivs_[trail_.back()] = nullptr;
            trail_.pop_back();
        }
    }

    bool bind_interval(VarId v, const IntervalList* list) {
        if (bound_[v]) return *ivs_[v] == *list;
        bound_[v] = true;
        ivs_[v] = list;
        trail_.push_back(v);
        return true;
    }

    bool unify_key(const std::vector<Term>& args, const Term* value, const GroundKey& key) {
        if (key.args.size() != args.size()) return false;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (!unify(args[i], key.args[i])) return false;
        }
        return value == nullptr || unify(*value, key.value);
    }

    // Visits every key matching a pattern, with its bindings in place.
    // Fully bound patterns visit their key even when nothing is stored.
    template <class F>
    void for_each_key(SymbolId name, const std::vector<Term>& args, const Term* value, F&& f) {
        GroundKey probe{name, {}, value != nullptr, {}};
        bool complete = true;
        for (const auto& a : args) {
            auto v = this->value(a);
            if (!v) {
                complete = false;
                break;
            }
            probe.args.push_back(*v);
        }
        if (complete && value != nullptr) {
            if (auto v = this->value(*value)) {
                probe.value = *v;
                f(probe);
                return;
            }
        }
        if (complete && value == nullptr) {
            f(probe);
            return;
        }
        std::optional<Value> first;
        if (!args.empty()) first = this->value(args[0]);
        const auto& keys = eng_.candidates(name, first);
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const GroundKey& key = keys[i];
            const std::size_t mark = trail_.size();
            if (unify_key(args, value, key)) f(key);
            undo(mark);
        }
    }

    template <class F>
    void for_each_fluent(const FluentPattern& fp, F&& f) {
        for_each_key(fp.name, fp.args, &fp.value, [&](const GroundKey& key) { f(eng_.fluent_list(key)); });
    }

    void emit_time(Timepoint t, const Term& time, const std::function<void()>& next, std::size_t i) {
        const std::size_t mark = trail_.size();
        if (unify(time, Value::integer(t))) solve(i + 1, next);
        undo(mark);
    }

    void solve(std::size_t i, const std::function<void()>& done) {
        if (i == rule_.body.size()) {
            done();
            return;
        }
        const Literal& lit = rule_.body[i];
        const Timepoint lo = eng_.boundary;
        const Timepoint hi = eng_.q;
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, HappensAt>) {
                    const auto bound_time = value(n.time);
                    auto visit_times = [&](auto&& times_in_window) {
                        if (bound_time) {
                            if (!bound_time->is_integer()) return;
                            const Timepoint t = bound_time->data;
                            if (t <= lo || t > hi) return;
                            if (times_in_window(t)) solve(i + 1, done);
                        } else {
                            times_in_window(std::nullopt);
                        }
                    };
                    if (n.event.kind == EventPattern::Kind::Plain) {
                        for_each_key(n.event.name, n.event.args, nullptr, [&](const GroundKey& key) {
                            const auto& times = eng_.event_list(key);
                            if (times.empty()) return;
                            visit_times([&](std::optional<Timepoint> probe) {
                                if (probe) return std::binary_search(times.begin(), times.end(), *probe);
                                for (Timepoint t : times) emit_time(t, n.time, done, i);
                                return false;
                            });
                        });
                    } else {
                        const bool start = n.event.kind == EventPattern::Kind::Start;
                        for_each_fluent(n.event.fluent, [&](const IntervalList& list) {
                            if (list.empty()) return;
                            visit_times([&](std::optional<Timepoint> probe) {
                                for (const auto& iv : list) {
                                    const Timepoint p = start ? iv.start : iv.end;
                                    if (!start && iv.open()) continue;
                                    if (p <= lo || p > hi) continue;
                                    if (probe) {
                                        if (p == *probe) return true;
                                    } else {
                                        emit_time(p, n.time, done, i);
                                    }
                                }
                                return false;
                            });
                        });
                    }
                } else if constexpr (std::is_same_v<T, HoldsAt>) {
                    const auto t = value(n.time);
                    if (!t || !t->is_integer()) return;
                    for_each_fluent(n.fluent, [&](const IntervalList& list) {
                        if (holds_at(list, t->data)) solve(i + 1, done);
                    });
                } else if constexpr (std::is_same_v<T, HoldsFor>) {
                    const bool enumerating = std::any_of(n.fluent.args.begin(), n.fluent.args.end(),
                                                         [&](const Term& a) { return !value(a); }) ||
                                             !value(n.fluent.value);
                    for_each_fluent(n.fluent, [&](const IntervalList& list) {
                        if (enumerating && list.empty()) return;
                        const std::size_t mark = trail_.size();
                        if (bind_interval(n.interval, &list)) solve(i + 1, done);
                        undo(mark);
                    });
                } else if constexpr (std::is_same_v<T, IntervalConstruct>) {
                    std::vector<const IntervalList*> inputs;
                    inputs.reserve(n.inputs.size());
                    for (VarId v : n.inputs) {
                        if (!bound_[v]) throw std::logic_error("unbound interval variable " + rule_.var_names[v]);
                        inputs.push_back(ivs_[v]);
                    }
                    IntervalList result;
                    switch (n.op) {
                        case IntervalConstruct::Op::Union: result = union_all(inputs); break;
                        case IntervalConstruct::Op::Intersect: result = intersect_all(inputs); break;
                        case IntervalConstruct::Op::RelativeComplement:
                            if (!bound_[n.base]) {
                                throw std::logic_error("unbound interval variable " + rule_.var_names[n.base]);
                            }
                            result = relative_complement_all(*ivs_[n.base], inputs);
                            break;
                    }
                    arena_.push_back(std::move(result));
                    const std::size_t mark = trail_.size();
                    if (bind_interval(n.output, &arena_.back())) solve(i + 1, done);
                    undo(mark);
                } else if constexpr (std::is_same_v<T, Comparison>) {
                    const auto a = value(n.lhs);
                    const auto b = value(n.rhs);
                    if (!a || !b) return;
                    bool ok = false;
                    if (n.op == Comparison::Op::Eq) {
                        ok = *a == *b;
                    } else if (n.op == Comparison::Op::Ne) {
                        ok = !(*a == *b);
                    } else {
                        const auto c = compare_values(*a, *b, eng_.ed.symbols);
                        switch (n.op) {
                            case Comparison::Op::Lt: ok = c < 0; break;
                            case Comparison::Op::Le: ok = c <= 0; break;
                            case Comparison::Op::Gt: ok = c > 0; break;
                            case Comparison::Op::Ge: ok = c >= 0; break;
                            default: break;
                        }
                    }
                    if (ok) solve(i + 1, done);
                } else {
                    auto it = eng_.domains.find(n.domain);
                    if (it == eng_.domains.end()) return;
                    for (const auto& m : it->second) {
                        const std::size_t mark = trail_.size();
                        if (unify(n.term, m)) solve(i + 1, done);
                        undo(mark);
                    }
                }
            },
            lit.node);
    }

    Impl& eng_;
    const Rule& rule_;
    std::vector<Value> vals_;
    std::vector<bool> bound_;
    std::vector<const IntervalList*> ivs_;
    std::vector<VarId> trail_;
    std::deque<IntervalList> arena_;
};

Engine::Impl::Solver& Engine::Impl::solver_for(const Rule& r) {
    auto& slot = solver_cache[&r];
    if (!slot) slot = std::make_unique<Solver>(*this, r);
    return *slot;
}

void Engine::Impl::evict(const GroundKey& key, const IntervalList& previous) {
    if (!sink) return;
    for (const auto& iv : previous) {
        if (!iv.open() && iv.end <= boundary) sink(make_entry(key, iv), q);
    }
}

void Engine::Impl::evaluate_simple(NameInfo& info, const Unit& u) {
    const std::size_t nv = info.values.size();
    auto& inits = scratch_inits;
    auto& terms = scratch_terms;
    if (inits.size() < nv) {
        inits.resize(nv);
        terms.resize(nv);
    }
    for (std::size_t vi = 0; vi < nv; ++vi) {
        inits[vi].clear();
        terms[vi].clear();
    }
    for (const Rule* r : info.rules) {
        if (r->fluent_head.value.is_var()) continue;
        const std::size_t vi = static_cast<std::size_t>(
            std::find(info.values.begin(), info.values.end(), r->fluent_head.value.constant) - info.values.begin());
        if (vi == nv) continue;  // terminates a value nothing initiates
        auto& out = r->kind == RuleKind::InitiatedAt ? inits[vi] : terms[vi];
        solver_for(*r).run(u, [&](const Solver& sol) {
            const auto t = sol.value(r->time);
            if (t && t->is_integer() && t->data > boundary && t->data <= q) out.push_back(t->data);
        });
    }
    for (std::size_t vi = 0; vi < nv; ++vi) {
        sort_unique(inits[vi]);
        sort_unique(terms[vi]);
    }

    // Simultaneous initiations of different values: the earlier-declared value wins.
    if (nv > 1) {
        for (std::size_t a = 0; a < nv; ++a) {
            for (std::size_t b = a + 1; b < nv; ++b) {
                std::vector<Timepoint> clash;
                std::set_intersection(inits[a].begin(), inits[a].end(), inits[b].begin(), inits[b].end(),
                                      std::back_inserter(clash));
                if (clash.empty()) continue;
                std::vector<Timepoint> kept;
                std::set_difference(inits[b].begin(), inits[b].end(), clash.begin(), clash.end(),
                                    std::back_inserter(kept));
                inits[b] = std::move(kept);
                std::ostringstream msg;
                msg << "simultaneous initiation of " << text_of(Value::symbol(info.name)) << " values "
                    << text_of(info.values[a]) << " and " << text_of(info.values[b]) << " at " << clash.front()
                    << "; keeping " << text_of(info.values[a]);
                warn("tie", msg.str());
            }
        }
    }

    for (std::size_t vi = 0; vi < nv; ++vi) {
        GroundKey key = key_of(u, info.values[vi]);
        auto found = fluents.find(key);
        // Nothing carried and nothing initiated: the list stays empty.
        if (found == fluents.end() && inits[vi].empty()) continue;
        if (found == fluents.end()) {
            found = fluents.emplace(std::move(key), FluentState{}).first;
            ++live_states[current_unit];
        }
        const GroundKey& k = found->first;
        FluentState& st = found->second;
        if (owned_now) evict(k, st.list);
        st.kept = st.seen ? st.kept_next : std::nullopt;
        auto& starts = scratch_starts;
        starts.clear();
        if (st.kept) starts.push_back(*st.kept);
        starts.insert(starts.end(), inits[vi].begin(), inits[vi].end());
        auto& breaks = scratch_breaks;
        breaks.assign(terms[vi].begin(), terms[vi].end());
        for (std::size_t o = 0; o < nv; ++o) {
            if (o != vi) breaks.insert(breaks.end(), inits[o].begin(), inits[o].end());
        }
        sort_unique(breaks);
        st.list = make_intervals(starts, breaks, q);
        st.seen = true;

        // The start that survives the next boundary, decided now.
        const auto s_end = std::upper_bound(starts.begin(), starts.end(), next_boundary);
        const auto b_end = std::upper_bound(breaks.begin(), breaks.end(), next_boundary);
        const IntervalList before = make_intervals(std::span<const Timepoint>(starts.begin(), s_end),
                                                   std::span<const Timepoint>(breaks.begin(), b_end),
                                                   std::max(next_boundary, q));
        st.kept_next = std::nullopt;
        if (!before.empty() && before.back().open()) st.kept_next = before.back().start - 1;

        if (!st.list.empty()) {
            publish(k);
        } else if (!st.kept && !st.kept_next) {
            fluents.erase(found);
            --live_states[current_unit];
        }
    }
}

void Engine::Impl::evaluate_sd(NameInfo& info, const Unit& u) {
    for (const Value& v : info.values) {
        std::vector<IntervalList> parts;
        for (const Rule* r : info.rules) {
            if (r->fluent_head.value.is_var() || !(r->fluent_head.value.constant == v)) continue;
            solver_for(*r).run(u, [&](const Solver& sol) {
                const IntervalList* l = sol.interval(r->interval);
                if (l != nullptr && !l->empty()) parts.push_back(*l);
            });
        }
        GroundKey key = key_of(u, v);
        auto found = fluents.find(key);
        if (found == fluents.end() && parts.empty()) continue;
        if (found == fluents.end()) {
            found = fluents.emplace(std::move(key), FluentState{}).first;
            ++live_states[current_unit];
        }
        const GroundKey& k = found->first;
        FluentState& st = found->second;
        if (owned_now) evict(k, st.list);
        st.prefix.reset();
        if (st.seen) {
            for (const auto& iv : st.list) {
                if (iv.contains(boundary)) st.prefix = Interval{iv.start, boundary + 1};
            }
        }
        IntervalList fresh = clip_before(union_all(std::span<const IntervalList>(parts)), boundary).second;
        st.list = st.prefix ? amalgamate(IntervalList{*st.prefix}, fresh) : std::move(fresh);
        st.seen = true;
        if (st.list.empty()) {
            fluents.erase(found);
            --live_states[current_unit];
        } else {
            publish(k);
        }
    }
}

void Engine::Impl::evaluate_event(NameInfo& info, const Unit& u) {
    std::vector<Timepoint> times;
    for (const Rule* r : info.rules) {
        solver_for(*r).run(u, [&](const Solver& sol) {
            const auto t = sol.value(r->time);
            if (t && t->is_integer() && t->data > boundary && t->data <= q) times.push_back(t->data);
        });
    }
    sort_unique(times);
    const GroundKey key = key_of(u);
    if (times.empty()) {
        events.erase(key);
        live_states[current_unit] = 0;
        return;
    }
    events[key] = std::move(times);
    live_states[current_unit] = 1;
    publish(key);
}

ResultEntry Engine::Impl::make_entry(const GroundKey& key, const Interval& iv) const {
    ResultEntry e;
    e.name = ed.symbols.name(key.name);
    for (const auto& a : key.args) e.args.push_back(text_of(a));
    e.value = text_of(key.value);
    e.interval = iv;
    e.stability = classify(iv);
    return e;
}

void Engine::Impl::emit(const GroundKey& key, const IntervalList& list, std::uint32_t urank, std::uint32_t vrank,
                        RecognitionResult& out) {
    for (const auto& iv : list) {
        const Stability s = classify(iv);
        bool report = true;
        switch (cfg.mode) {
            case ReportMode::Asap: break;
            case ReportMode::Partial: report = iv.start <= next_boundary; break;
            case ReportMode::Final: report = s == Stability::Final; break;
        }
        if (!report) continue;
        emit_order.push_back({urank, vrank, iv.start, iv.end, static_cast<std::uint32_t>(out.entries.size())});
        out.entries.push_back(make_entry(key, iv));
    }
}

RecognitionResult Engine::Impl::run_query(Timepoint qi) {
    if (qi != next_q) {
        throw std::invalid_argument("query at " + std::to_string(qi) + " out of schedule; expected " +
                                    std::to_string(next_q));
    }
    q = qi;
    boundary = qi - cfg.wm;
    next_boundary = qi + cfg.step - cfg.wm;

    for (const auto& r : pending) apply(r, boundary);
    pending.clear();
    store.forget(boundary);
    store.begin_query(boundary, q);
    derived_by_name.clear();
    derived_by_first.clear();

    RecognitionResult out;
    out.q = qi;
    for (auto& info : names) {
        if (!info.all_active) mark_active(info);
        for (std::size_t ui : info.units) {
            if (!info.all_active) {
                const bool skip = !active[ui] && live_states[ui] == 0;
                active[ui] = 0;
                if (skip) continue;
            }
            const Unit& u = units[ui];
            current_unit = ui;
            owned_now = owned[ui];
            switch (info.kind) {
                case ItemKind::SimpleFluent: evaluate_simple(info, u); break;
                case ItemKind::SdFluent: evaluate_sd(info, u); break;
                case ItemKind::Event: evaluate_event(info, u); break;
                default: break;
            }
            if (owned[ui] && info.kind != ItemKind::Event) {
                for (std::size_t vi = 0; vi < info.values.size(); ++vi) {
                    auto it = fluents.find(key_of(u, info.values[vi]));
                    if (it != fluents.end()) emit(it->first, it->second.list, unit_rank[ui], info.value_rank[vi], out);
                }
            }
        }
    }
    std::sort(emit_order.begin(), emit_order.end(), [](const EmitKey& a, const EmitKey& b) {
        return std::tie(a.unit_rank, a.value_rank, a.start, a.end) < std::tie(b.unit_rank, b.value_rank, b.start, b.end);
    });
    std::vector<ResultEntry> sorted;
    sorted.reserve(out.entries.size());
    for (const auto& k : emit_order) sorted.push_back(std::move(out.entries[k.index]));
    out.entries = std::move(sorted);
    emit_order.clear();
    next_q = qi + cfg.step;
    started = true;
    return out;
}

// ---------------------------------------------------------------------------

Engine::Engine(const EventDescription& ed, EngineConfig cfg, EngineOptions opts)
    : impl_(std::make_unique<Impl>(ed, cfg, std::move(opts))) {}
Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

void Engine::ingest(std::span<const InputRecord> records) {
    impl_->pending.insert(impl_->pending.end(), records.begin(), records.end());
}

void Engine::ingest(const InputRecord& record) { impl_->pending.push_back(record); }

RecognitionResult Engine::query(Timepoint qi) { return impl_->run_query(qi); }
Timepoint Engine::next_query() const { return impl_->next_q; }
const EngineConfig& Engine::config() const { return impl_->cfg; }
const EventDescription& Engine::description() const { return impl_->ed; }
const std::vector<Diagnostic>& Engine::diagnostics() const { return impl_->diags; }
void Engine::clear_diagnostics() { impl_->diags.clear(); }
void Engine::set_history_sink(HistorySink sink) { impl_->sink = std::move(sink); }
std::size_t Engine::resident_facts() const { return impl_->store.size(); }
SymbolId Engine::intern(std::string_view s) { return impl_->ed.symbols.intern(s); }
Value Engine::value_of(std::string_view s) { return impl_->value_of(s); }
std::string Engine::text_of(const Value& v) const { return impl_->text_of(v); }

std::size_t Engine::shard_groups() const { return impl_->group_count; }

std::size_t Engine::owned_unit_count() const {
    return static_cast<std::size_t>(std::count(impl_->owned.begin(), impl_->owned.end(), true));
}

Timepoint Engine::earliest_resident() const {
    Timepoint lo = kOpen;
    for (const auto& f : impl_->store.facts()) lo = std::min(lo, f.is_event ? f.t : f.span.start);
    return lo;
}

EngineSnapshot Engine::snapshot() const {
    const Impl& m = *impl_;
    EngineSnapshot s;
    s.q = m.q;
    s.boundary = m.boundary;
    s.facts = m.store.facts();
    s.held_at_boundary.assign(m.store.held_at_boundary().begin(), m.store.held_at_boundary().end());
    for (const auto& [key, st] : m.fluents) {
        s.fluents.emplace(key, st.list);
        if (st.kept) s.kept_starts.emplace(key, *st.kept);
        if (st.prefix) s.prefixes.emplace(key, *st.prefix);
    }
    s.events.insert(m.events.begin(), m.events.end());
    for (std::size_t i = 0; i < m.units.size(); ++i) {
        if (m.owned[i]) s.owned.push_back(m.units[i]);
        if (m.required[i]) s.required.push_back(m.units[i]);
    }
    return s;
}

}  // namespace rtec
