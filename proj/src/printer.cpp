#include <sstream>

#include "rtec/rule_language.hpp"

namespace rtec {

namespace {

class Printer {
public:
    Printer(const SymbolTable& symbols, const std::vector<std::string>& vars) : symbols_(symbols), vars_(vars) {}

    std::string term(const Term& t) const {
        return t.is_var() ? vars_[t.var] : to_string(t.constant, symbols_);
    }

    std::string args(const std::vector<Term>& as) const {
        if (as.empty()) return {};
        std::string s = "(";
        for (std::size_t i = 0; i < as.size(); ++i) {
            if (i > 0) s += ", ";
            s += term(as[i]);
        }
        return s + ")";
    }

    std::string fluent(const FluentPattern& fp) const {
        return symbols_.name(fp.name) + args(fp.args) + " = " + term(fp.value);
    }

    std::string event(const EventPattern& ep) const {
        switch (ep.kind) {
            case EventPattern::Kind::Start: return "start(" + fluent(ep.fluent) + ")";
            case EventPattern::Kind::End: return "end(" + fluent(ep.fluent) + ")";
            case EventPattern::Kind::Plain: break;
        }
        return symbols_.name(ep.name) + args(ep.args);
    }

    std::string var_list(const std::vector<VarId>& vs) const {
        std::string s = "[";
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (i > 0) s += ", ";
            s += vars_[vs[i]];
        }
        return s + "]";
    }

    std::string literal(const Literal& lit) const {
        return std::visit(
            [this](const auto& n) -> std::string {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, HappensAt>) {
                    return "happensAt(" + event(n.event) + ", " + term(n.time) + ")";
                } else if constexpr (std::is_same_v<T, HoldsAt>) {
                    return "holdsAt(" + fluent(n.fluent) + ", " + term(n.time) + ")";
                } else if constexpr (std::is_same_v<T, HoldsFor>) {
                    return "holdsFor(" + fluent(n.fluent) + ", " + vars_[n.interval] + ")";
                } else if constexpr (std::is_same_v<T, IntervalConstruct>) {
                    switch (n.op) {
                        case IntervalConstruct::Op::Union:
                            return "union_all(" + var_list(n.inputs) + ", " + vars_[n.output] + ")";
                        case IntervalConstruct::Op::Intersect:
                            return "intersect_all(" + var_list(n.inputs) + ", " + vars_[n.output] + ")";
                        case IntervalConstruct::Op::RelativeComplement:
                            return "relative_complement_all(" + vars_[n.base] + ", " + var_list(n.inputs) + ", " +
                                   vars_[n.output] + ")";
                    }
                    return {};
                } else if constexpr (std::is_same_v<T, Comparison>) {
                    static constexpr const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
                    return term(n.lhs) + " " + ops[static_cast<int>(n.op)] + " " + term(n.rhs);
                } else {
                    return term(n.term) + " in " + symbols_.name(n.domain);
                }
            },
            lit.node);
    }

    std::string rule(const Rule& r) const {
        std::string s;
        switch (r.kind) {
            case RuleKind::InitiatedAt: s = "initiatedAt(" + fluent(r.fluent_head) + ", " + term(r.time) + ")"; break;
            case RuleKind::TerminatedAt:
                s = "terminatedAt(" + fluent(r.fluent_head) + ", " + term(r.time) + ")";
                break;
            case RuleKind::HoldsFor: s = "holdsFor(" + fluent(r.fluent_head) + ", " + vars_[r.interval] + ")"; break;
            case RuleKind::HappensAt: s = "happensAt(" + event(r.event_head) + ", " + term(r.time) + ")"; break;
        }
        s += " <-";
        for (std::size_t i = 0; i < r.body.size(); ++i) {
            s += (i == 0 ? "\n    " : ",\n    ") + literal(r.body[i]);
        }
        return s + ".\n";
    }

    std::string iff_expr(const IffExpr& e) const {
        switch (e.kind) {
            case IffExpr::Kind::Atom: return fluent(e.atom);
            case IffExpr::Kind::Not: return "not " + iff_expr(e.children.front());
            case IffExpr::Kind::Or: {
                std::string s = "(";
                for (std::size_t i = 0; i < e.children.size(); ++i) {
                    if (i > 0) s += " or ";
                    s += iff_expr(e.children[i]);
                }
                return s + ")";
            }
        }
        return {};
    }

    std::string iff(const IffDefinition& def) const {
        std::string s = fluent(def.head) + " iff";
        for (std::size_t i = 0; i < def.conjuncts.size(); ++i) {
            s += (i == 0 ? "\n    " : ",\n    ") + iff_expr(def.conjuncts[i]);
        }
        return s + ".\n";
    }

private:
    const SymbolTable& symbols_;
    const std::vector<std::string>& vars_;
};

std::string grounding(const Grounding& g, const SymbolTable& symbols) {
    switch (g.shape) {
        case Grounding::Shape::Pairs: return "pairs(" + symbols.name(g.domains.front()) + ")";
        case Grounding::Shape::UnorderedPairs: return "upairs(" + symbols.name(g.domains.front()) + ")";
        case Grounding::Shape::Product: break;
    }
    std::string s;
    for (std::size_t i = 0; i < g.domains.size(); ++i) {
        if (i > 0) s += "*";
        s += symbols.name(g.domains[i]);
    }
    return s;
}

const char* decl_keyword(ItemKind k) {
    switch (k) {
        case ItemKind::InputEvent: return "input event";
        case ItemKind::InputFluent: return "input fluent";
        case ItemKind::SimpleFluent: return "simple fluent";
        case ItemKind::SdFluent: return "sd fluent";
        case ItemKind::Event: return "event";
    }
    return "";
}

// Structural comparison across two symbol tables.
class Comparer {
public:
    Comparer(const SymbolTable& a, const SymbolTable& b) : a_(a), b_(b) {}

    bool sym(SymbolId x, SymbolId y) const { return a_.name(x) == b_.name(y); }

    bool value(const Value& x, const Value& y) const {
        if (x.kind != y.kind) return false;
        return x.is_integer() ? x.data == y.data : sym(x.sym(), y.sym());
    }

    bool term(const Term& x, const Term& y) const {
        if (x.kind != y.kind) return false;
        return x.is_var() ? x.var == y.var : value(x.constant, y.constant);
    }

    bool terms(const std::vector<Term>& x, const std::vector<Term>& y) const {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!term(x[i], y[i])) return false;
        }
        return true;
    }

    bool fluent(const FluentPattern& x, const FluentPattern& y) const {
        return sym(x.name, y.name) && terms(x.args, y.args) && term(x.value, y.value);
    }

    bool event(const EventPattern& x, const EventPattern& y) const {
        if (x.kind != y.kind) return false;
        if (x.kind != EventPattern::Kind::Plain) return fluent(x.fluent, y.fluent);
        return sym(x.name, y.name) && terms(x.args, y.args);
    }

    bool literal(const Literal& x, const Literal& y) const {
        if (x.node.index() != y.node.index()) return false;
        return std::visit(
            [&](const auto& n) -> bool {
                using T = std::decay_t<decltype(n)>;
                const T& m = std::get<T>(y.node);
                if constexpr (std::is_same_v<T, HappensAt>) {
                    return event(n.event, m.event) && term(n.time, m.time);
                } else if constexpr (std::is_same_v<T, HoldsAt>) {
                    return fluent(n.fluent, m.fluent) && term(n.time, m.time);
                } else if constexpr (std::is_same_v<T, HoldsFor>) {
                    return fluent(n.fluent, m.fluent) && n.interval == m.interval;
                } else if constexpr (std::is_same_v<T, IntervalConstruct>) {
                    return n == m;
                } else if constexpr (std::is_same_v<T, Comparison>) {
                    return n.op == m.op && term(n.lhs, m.lhs) && term(n.rhs, m.rhs);
                } else {
                    return term(n.term, m.term) && sym(n.domain, m.domain);
                }
            },
            x.node);
    }

    bool rule(const Rule& x, const Rule& y) const {
        if (x.kind != y.kind || x.var_names != y.var_names || x.var_kinds != y.var_kinds) return false;
        if (x.kind == RuleKind::HappensAt) {
            if (!event(x.event_head, y.event_head)) return false;
        } else if (!fluent(x.fluent_head, y.fluent_head)) {
            return false;
        }
        if (x.kind == RuleKind::HoldsFor ? x.interval != y.interval : !term(x.time, y.time)) return false;
        if (x.body.size() != y.body.size()) return false;
        for (std::size_t i = 0; i < x.body.size(); ++i) {
            if (!literal(x.body[i], y.body[i])) return false;
        }
        return true;
    }

    bool iff_expr(const IffExpr& x, const IffExpr& y) const {
        if (x.kind != y.kind || x.children.size() != y.children.size()) return false;
        if (x.kind == IffExpr::Kind::Atom) return fluent(x.atom, y.atom);
        for (std::size_t i = 0; i < x.children.size(); ++i) {
            if (!iff_expr(x.children[i], y.children[i])) return false;
        }
        return true;
    }

    bool iff(const IffDefinition& x, const IffDefinition& y) const {
        if (x.var_names != y.var_names || !fluent(x.head, y.head)) return false;
        if (x.conjuncts.size() != y.conjuncts.size()) return false;
        for (std::size_t i = 0; i < x.conjuncts.size(); ++i) {
            if (!iff_expr(x.conjuncts[i], y.conjuncts[i])) return false;
        }
        return true;
    }

    bool declaration(const Declaration& x, const Declaration& y) const {
        if (!sym(x.name, y.name) || x.arity != y.arity || x.kind != y.kind) return false;
        if (x.grounding.has_value() != y.grounding.has_value()) return false;
        if (!x.grounding) return true;
        const auto& gx = *x.grounding;
        const auto& gy = *y.grounding;
        if (gx.shape != gy.shape || gx.domains.size() != gy.domains.size()) return false;
        for (std::size_t i = 0; i < gx.domains.size(); ++i) {
            if (!sym(gx.domains[i], gy.domains[i])) return false;
        }
        return true;
    }

    bool domain(const DomainDecl& x, const DomainDecl& y) const {
        if (!sym(x.name, y.name) || x.from_input != y.from_input || x.members.size() != y.members.size()) {
            return false;
        }
        for (std::size_t i = 0; i < x.members.size(); ++i) {
            if (!value(x.members[i], y.members[i])) return false;
        }
        return true;
    }

private:
    const SymbolTable& a_;
    const SymbolTable& b_;
};

template <class T, class F>
bool all_pairs(const std::vector<T>& x, const std::vector<T>& y, F&& eq) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!eq(x[i], y[i])) return false;
    }
    return true;
}

std::vector<const Rule*> written_rules(const EventDescription& ed) {
    std::vector<const Rule*> out;
    for (const auto& r : ed.rules) {
        if (!r.from_iff) out.push_back(&r);
    }
    return out;
}

}  // namespace

std::string to_source(const Rule& rule, const SymbolTable& symbols) {
    return Printer(symbols, rule.var_names).rule(rule);
}

std::string to_source(const EventDescription& ed) {
    std::ostringstream os;
    for (const auto& d : ed.domains) {
        os << "domain " << ed.symbols.name(d.name) << " = ";
        if (d.from_input) {
            os << "input";
        } else {
            os << '{';
            for (std::size_t i = 0; i < d.members.size(); ++i) {
                if (i > 0) os << ", ";
                os << to_string(d.members[i], ed.symbols);
            }
            os << '}';
        }
        os << ".\n";
    }
    for (const auto& d : ed.declarations) {
        os << decl_keyword(d.kind) << ' ' << ed.symbols.name(d.name) << '/' << d.arity;
        if (d.grounding) os << " over " << grounding(*d.grounding, ed.symbols);
        os << ".\n";
    }
    for (const auto* r : written_rules(ed)) os << '\n' << to_source(*r, ed.symbols);
    for (const auto& def : ed.iffs) os << '\n' << Printer(ed.symbols, def.var_names).iff(def);
    return os.str();
}

bool structurally_equal(const EventDescription& a, const EventDescription& b) {
    const Comparer cmp(a.symbols, b.symbols);
    const auto ra = written_rules(a);
    const auto rb = written_rules(b);
    return all_pairs(a.declarations, b.declarations,
                     [&](const auto& x, const auto& y) { return cmp.declaration(x, y); }) &&
           all_pairs(a.domains, b.domains, [&](const auto& x, const auto& y) { return cmp.domain(x, y); }) &&
           all_pairs(ra, rb, [&](const Rule* x, const Rule* y) { return cmp.rule(*x, *y); }) &&
           all_pairs(a.iffs, b.iffs, [&](const auto& x, const auto& y) { return cmp.iff(x, y); });
}

}  // namespace rtec
