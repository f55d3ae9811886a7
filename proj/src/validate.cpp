#include <algorithm>

#include "rtec/rule_language.hpp"

namespace rtec {

namespace {

class RuleChecker {
public:
    RuleChecker(const EventDescription& ed, const Rule& r, std::vector<Diagnostic>& out)
        : ed_(ed), r_(r), out_(out), bound_(r.var_names.size(), false) {}

    void run() {
        const Declaration* decl = ed_.find_declaration(r_.head_name());
        check_head(decl);
        // Head arguments are supplied by grounding.
        const auto& head_args = r_.kind == RuleKind::HappensAt ? r_.event_head.args : r_.fluent_head.args;
        for (const auto& a : head_args) bind(a);

        bool has_event = false;
        bool time_bound_by_event = !r_.time.is_var();
        for (const auto& lit : r_.body) {
            if (const auto* h = std::get_if<HappensAt>(&lit.node)) {
                has_event = true;
                if (r_.kind == RuleKind::HoldsFor) sd_body_error(lit);
                if (r_.time.is_var() && h->time.is_var() && h->time.var == r_.time.var) {
                    time_bound_by_event = true;
                }
                bind_event(h->event);
                bind(h->time);
            } else if (const auto* h = std::get_if<HoldsAt>(&lit.node)) {
                if (r_.kind == RuleKind::HoldsFor) sd_body_error(lit);
                if (!is_bound(h->time)) {
                    error("unbound-time", "holdsAt time must be bound by an earlier happensAt", lit.loc);
                }
                bind_fluent(h->fluent);
            } else if (const auto* h = std::get_if<HoldsFor>(&lit.node)) {
                bind_fluent(h->fluent);
                bound_[h->interval] = true;
            } else if (const auto* c = std::get_if<IntervalConstruct>(&lit.node)) {
                if (r_.kind != RuleKind::HoldsFor) {
                    error("construct-outside-holdsfor",
                          "interval constructs are only allowed in holdsFor rules", lit.loc);
                }
                if (c->op == IntervalConstruct::Op::RelativeComplement) require_var(c->base, lit.loc);
                for (VarId v : c->inputs) require_var(v, lit.loc);
                if (c->op == IntervalConstruct::Op::Intersect && c->inputs.empty()) {
                    error("empty-intersection", "intersect_all needs at least one input list", lit.loc);
                }
                bound_[c->output] = true;
            } else if (const auto* c = std::get_if<Comparison>(&lit.node)) {
                require(c->lhs, lit.loc);
                require(c->rhs, lit.loc);
            } else if (const auto* m = std::get_if<Membership>(&lit.node)) {
                if (ed_.find_domain(m->domain) == nullptr) {
                    error("unknown-domain", "undeclared domain '" + ed_.symbols.name(m->domain) + "'", lit.loc);
                }
                bind(m->term);
            }
        }

        if (r_.kind == RuleKind::HoldsFor) {
            if (!bound_[r_.interval]) {
                error("unbound-variable", "head interval " + r_.var_names[r_.interval] + " is never bound",
                      r_.loc);
            }
            return;
        }
        if (!has_event) {
            error("no-event", "rule body needs a happensAt literal to supply candidate timepoints", r_.loc);
        } else if (!time_bound_by_event) {
            error("unbound-time", "head time must be bound by a happensAt literal", r_.loc);
        }
    }

private:
    void error(std::string code, std::string msg, SourceLoc loc) {
        out_.push_back({Diagnostic::Severity::Error, std::move(code), std::move(msg), loc});
    }

    bool is_bound(const Term& t) const { return !t.is_var() || bound_[t.var]; }

    void bind(const Term& t) {
        if (t.is_var()) bound_[t.var] = true;
    }

    void require(const Term& t, SourceLoc loc) {
        if (!is_bound(t)) {
            error("unbound-variable", "variable " + r_.var_names[t.var] + " is used before it is bound", loc);
        }
    }

    void require_var(VarId v, SourceLoc loc) {
        if (!bound_[v]) {
            error("unbound-variable", "interval variable " + r_.var_names[v] + " is used before it is bound",
                  loc);
        }
    }

    void bind_fluent(const FluentPattern& fp) {
        for (const auto& a : fp.args) bind(a);
        bind(fp.value);
    }

    void bind_event(const EventPattern& ep) {
        if (ep.kind == EventPattern::Kind::Plain) {
            for (const auto& a : ep.args) bind(a);
        } else {
            bind_fluent(ep.fluent);
        }
    }

    void sd_body_error(const Literal& lit) {
        error("timepoint-in-holdsfor",
              "holdsFor rules may only use holdsFor, interval constructs, comparisons and membership", lit.loc);
    }

    void check_head(const Declaration* decl) {
        if (decl == nullptr) return;  // reported by the parser
        const std::string& name = ed_.symbols.name(decl->name);
        if (is_input(decl->kind)) {
            error("defines-input", "'" + name + "' is an input and cannot have rules", r_.loc);
            return;
        }
        switch (r_.kind) {
            case RuleKind::InitiatedAt:
            case RuleKind::TerminatedAt:
                if (decl->kind == ItemKind::SdFluent) {
                    error("simple-and-sd",
                          "'" + name + "' is declared statically determined but has initiatedAt/terminatedAt rules",
                          r_.loc);
                }
                break;
            case RuleKind::HoldsFor:
                if (decl->kind == ItemKind::SimpleFluent) {
                    error("simple-and-sd", "'" + name + "' is declared simple but has a holdsFor rule", r_.loc);
                }
                break;
            case RuleKind::HappensAt: break;
        }
        if (r_.kind != RuleKind::HappensAt && r_.fluent_head.value.is_var()) {
            error("variable-value", "rule head value must be a constant", r_.fluent_head.loc);
        }
    }

    const EventDescription& ed_;
    const Rule& r_;
    std::vector<Diagnostic>& out_;
    std::vector<bool> bound_;
};

void collect_vars(const FluentPattern& fp, std::vector<bool>& seen) {
    for (const auto& a : fp.args) {
        if (a.is_var()) seen[a.var] = true;
    }
    if (fp.value.is_var()) seen[fp.value.var] = true;
}

void collect_vars(const IffExpr& e, std::vector<bool>& seen) {
    if (e.kind == IffExpr::Kind::Atom) return collect_vars(e.atom, seen);
    for (const auto& c : e.children) collect_vars(c, seen);
}

void check_iff(const EventDescription& ed, const IffDefinition& def, std::vector<Diagnostic>& out) {
    std::vector<bool> positive(def.var_names.size(), false);
    std::vector<bool> negative(def.var_names.size(), false);
    collect_vars(def.head, positive);
    for (const auto& c : def.conjuncts) collect_vars(c, c.kind == IffExpr::Kind::Not ? negative : positive);
    for (std::size_t v = 0; v < def.var_names.size(); ++v) {
        if (negative[v] && !positive[v]) {
            out.push_back({Diagnostic::Severity::Error, "unbound-variable",
                           "variable " + def.var_names[v] + " of '" + ed.symbols.name(def.head.name) +
                               "' appears only under negation",
                           def.loc});
        }
    }
}

void check_grounding(const EventDescription& ed, const Declaration& d, std::vector<Diagnostic>& out) {
    const std::string& name = ed.symbols.name(d.name);
    auto error = [&](std::string code, std::string msg) {
        out.push_back({Diagnostic::Severity::Error, std::move(code), std::move(msg), d.loc});
    };
    if (is_input(d.kind)) {
        if (d.grounding) error("input-grounding", "input '" + name + "' cannot have a grounding");
        return;
    }
    if (!d.grounding) {
        if (d.arity > 0) error("missing-grounding", "'" + name + "' needs an `over` grounding domain");
        return;
    }
    const Grounding& g = *d.grounding;
    for (SymbolId dom : g.domains) {
        if (ed.find_domain(dom) == nullptr) {
            error("unknown-domain", "grounding of '" + name + "' uses undeclared domain '" + ed.symbols.name(dom) + "'");
        }
    }
    const std::size_t width = g.shape == Grounding::Shape::Product ? g.domains.size() : 2;
    if (width != d.arity) {
        error("grounding-arity", "grounding of '" + name + "' yields " + std::to_string(width) +
                                     " arguments but arity is " + std::to_string(d.arity));
    }
}

}  // namespace

std::vector<Diagnostic> validate(const EventDescription& ed) {
    std::vector<Diagnostic> out;
    for (const auto& d : ed.declarations) check_grounding(ed, d, out);
    for (const auto& r : ed.rules) RuleChecker(ed, r, out).run();
    for (const auto& def : ed.iffs) check_iff(ed, def, out);
    return out;
}

EventDescription load_description(std::string_view text, std::vector<Diagnostic>* warnings) {
    EventDescription ed = parse(text);
    expand_all(ed);
    std::vector<Diagnostic> diags = stratify(ed);
    auto checks = validate(ed);
    diags.insert(diags.end(), checks.begin(), checks.end());
    if (has_errors(diags)) throw LoadError(std::move(diags));
    if (warnings != nullptr) *warnings = std::move(diags);
    return ed;
}

}  // namespace rtec
