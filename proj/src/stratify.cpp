#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "rtec/rule_language.hpp"

namespace rtec {

namespace {

std::string item_name(const ItemRef& r, const SymbolTable& symbols) {
    std::string s = symbols.name(r.name);
    if (r.has_value) s += "=" + to_string(r.value, symbols);
    return s;
}

struct Graph {
    std::vector<ItemRef> nodes;
    std::unordered_map<ItemRef, std::size_t, ItemRefHash> index;
    std::vector<std::set<std::size_t>> deps;

    std::size_t node(const ItemRef& r) {
        auto [it, fresh] = index.emplace(r, nodes.size());
        if (fresh) {
            nodes.push_back(r);
            deps.emplace_back();
        }
        return it->second;
    }
};

// Longest dependency path below each node; throws on a cycle.
std::vector<int> longest_paths(const Graph& g, const std::function<std::string(std::size_t)>& label) {
    enum Colour : std::uint8_t { White, Grey, Black };
    std::vector<Colour> colour(g.nodes.size(), White);
    std::vector<int> level(g.nodes.size(), 0);
    std::vector<std::size_t> stack;

    std::function<void(std::size_t)> visit = [&](std::size_t n) {
        colour[n] = Grey;
        stack.push_back(n);
        int best = -1;
        for (std::size_t d : g.deps[n]) {
            if (colour[d] == Grey) {
                auto from = std::find(stack.begin(), stack.end(), d);
                std::string msg = "event description is not hierarchical; dependency cycle: ";
                for (auto it = from; it != stack.end(); ++it) msg += label(*it) + " -> ";
                msg += label(d);
                throw StratificationError(msg);
            }
            if (colour[d] == White) visit(d);
            best = std::max(best, level[d]);
        }
        level[n] = best + 1;
        stack.pop_back();
        colour[n] = Black;
    };
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        if (colour[n] == White) visit(n);
    }
    return level;
}

}  // namespace

std::vector<Diagnostic> stratify(EventDescription& ed) {
    ed.levels.clear();
    ed.name_levels.clear();

    // Values each defined fluent takes in some rule head.
    std::map<SymbolId, std::vector<Value>> values;
    auto note_value = [&](const FluentPattern& fp) {
        if (fp.value.is_var()) return;
        auto& vs = values[fp.name];
        if (std::find(vs.begin(), vs.end(), fp.value.constant) == vs.end()) vs.push_back(fp.value.constant);
    };
    for (const auto& r : ed.rules) {
        if (r.kind != RuleKind::HappensAt) note_value(r.fluent_head);
    }

    Graph vg;  // per fluent-value / event
    Graph ng;  // per defined name, for evaluation order

    auto defined = [&](SymbolId name) {
        const Declaration* d = ed.find_declaration(name);
        return d != nullptr && !is_input(d->kind);
    };

    auto head_ref = [](const Rule& r) {
        if (r.kind == RuleKind::HappensAt) return ItemRef{r.event_head.name, false, {}};
        if (r.fluent_head.value.is_var()) return ItemRef{r.fluent_head.name, false, {}};
        return ItemRef{r.fluent_head.name, true, r.fluent_head.value.constant};
    };

    // Nodes a body occurrence of `fp` may depend on.
    auto fluent_targets = [&](const FluentPattern& fp) {
        std::vector<ItemRef> out;
        if (!defined(fp.name)) return out;
        const ItemRef any{fp.name, false, {}};
        if (vg.index.count(any) != 0) out.push_back(any);
        if (fp.value.is_var()) {
            for (const auto& v : values[fp.name]) out.push_back({fp.name, true, v});
        } else {
            out.push_back({fp.name, true, fp.value.constant});
        }
        return out;
    };

    for (const auto& r : ed.rules) vg.node(head_ref(r));
    for (const auto& r : ed.rules) ng.node({r.head_name(), false, {}});

    for (const auto& r : ed.rules) {
        const std::size_t head = vg.node(head_ref(r));
        const std::size_t head_name = ng.node({r.head_name(), false, {}});
        auto depend_fluent = [&](const FluentPattern& fp) {
            if (!defined(fp.name)) return;
            if (fp.name == r.head_name() && r.kind != RuleKind::HappensAt) {
                const ItemRef h = head_ref(r);
                const bool same_value = h.has_value && !fp.value.is_var() && fp.value.constant == h.value;
                if (!same_value) {
                    throw StratificationError("fluent '" + ed.symbols.name(fp.name) +
                                              "' is defined in terms of its own values (line " +
                                              std::to_string(fp.loc.line) + ")");
                }
            }
            for (const auto& t : fluent_targets(fp)) vg.deps[head].insert(vg.node(t));
            ng.deps[head_name].insert(ng.node({fp.name, false, {}}));
        };
        for (const auto& lit : r.body) {
            if (const auto* h = std::get_if<HappensAt>(&lit.node)) {
                if (h->event.kind == EventPattern::Kind::Plain) {
                    if (defined(h->event.name)) {
                        vg.deps[head].insert(vg.node({h->event.name, false, {}}));
                        ng.deps[head_name].insert(ng.node({h->event.name, false, {}}));
                    }
                } else {
                    depend_fluent(h->event.fluent);
                }
            } else if (const auto* h = std::get_if<HoldsAt>(&lit.node)) {
                depend_fluent(h->fluent);
            } else if (const auto* h = std::get_if<HoldsFor>(&lit.node)) {
                depend_fluent(h->fluent);
            }
        }
    }

    // A referenced defined item without rules still gets a level.
    const auto vlevel = longest_paths(vg, [&](std::size_t n) { return item_name(vg.nodes[n], ed.symbols); });
    const auto nlevel = longest_paths(ng, [&](std::size_t n) { return ed.symbols.name(ng.nodes[n].name); });

    for (std::size_t n = 0; n < vg.nodes.size(); ++n) ed.levels[vg.nodes[n]] = vlevel[n] + 1;
    for (std::size_t n = 0; n < ng.nodes.size(); ++n) ed.name_levels[ng.nodes[n].name] = nlevel[n] + 1;

    std::vector<Diagnostic> warnings;
    for (const auto& d : ed.declarations) {
        if (d.kind != ItemKind::SimpleFluent) continue;
        const bool initiated = std::any_of(ed.rules.begin(), ed.rules.end(), [&](const Rule& r) {
            return r.kind == RuleKind::InitiatedAt && r.fluent_head.name == d.name;
        });
        if (!initiated) {
            warnings.push_back({Diagnostic::Severity::Warning, "no-initiation",
                                "simple fluent '" + ed.symbols.name(d.name) +
                                    "' has no initiatedAt rule and never holds",
                                d.loc});
        }
    }
    return warnings;
}

}  // namespace rtec
