#include <algorithm>
#include <optional>

#include "rtec/rule_language.hpp"

namespace rtec {

namespace {

// Flattens a disjunction into its atoms. Negation inside a disjunction is
// outside the supported fragment.
void collect_disjuncts(const IffExpr& e, std::vector<const FluentPattern*>& out) {
    switch (e.kind) {
        case IffExpr::Kind::Atom: out.push_back(&e.atom); return;
        case IffExpr::Kind::Or:
            for (const auto& c : e.children) collect_disjuncts(c, out);
            return;
        case IffExpr::Kind::Not:
            throw ShorthandError("iff: a disjunction may not contain a negated fluent-value (line " +
                                 std::to_string(e.loc.line) + ")");
    }
}

class Builder {
public:
    explicit Builder(const IffDefinition& def) {
        rule_.kind = RuleKind::HoldsFor;
        rule_.fluent_head = def.head;
        rule_.loc = def.loc;
        rule_.var_names = def.var_names;
        rule_.var_kinds.assign(def.var_names.size(), VarKind::Scalar);
    }

    VarId fresh() {
        ++counter_;
        return add_var("I" + std::to_string(counter_));
    }

    VarId add_var(std::string name) {
        while (std::find(rule_.var_names.begin(), rule_.var_names.end(), name) != rule_.var_names.end()) {
            name += "_";
        }
        rule_.var_names.push_back(std::move(name));
        rule_.var_kinds.push_back(VarKind::Interval);
        return static_cast<VarId>(rule_.var_names.size() - 1);
    }

    VarId holds_for(const FluentPattern& fp) {
        HoldsFor h;
        h.fluent = fp;
        h.interval = fresh();
        rule_.body.push_back({h, fp.loc});
        return h.interval;
    }

    void construct(IntervalConstruct c, SourceLoc loc) { rule_.body.push_back({std::move(c), loc}); }

    Rule& rule() { return rule_; }

private:
    Rule rule_;
    int counter_ = 0;
};

}  // namespace

Rule expand_iff(const IffDefinition& def) {
    std::vector<const IffExpr*> positives;
    std::vector<const IffExpr*> negatives;
    for (const auto& c : def.conjuncts) {
        if (c.kind == IffExpr::Kind::Not) {
            const IffExpr& inner = c.children.front();
            if (inner.kind == IffExpr::Kind::Not) {
                throw ShorthandError("iff: nested negation is not supported (line " + std::to_string(c.loc.line) +
                                     ")");
            }
            negatives.push_back(&inner);
        } else {
            positives.push_back(&c);
        }
    }
    if (positives.empty()) {
        throw ShorthandError("iff: at least one positive conjunct is required (line " +
                             std::to_string(def.loc.line) + ")");
    }

    Builder b(def);
    std::vector<VarId> groups;
    std::vector<std::vector<const FluentPattern*>> pos_atoms(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) collect_disjuncts(*positives[i], pos_atoms[i]);
    std::vector<const FluentPattern*> neg_atoms;
    for (const auto* n : negatives) collect_disjuncts(*n, neg_atoms);

    const bool single_atom = positives.size() == 1 && pos_atoms[0].size() == 1 && neg_atoms.empty();
    if (single_atom) {
        HoldsFor h;
        h.fluent = *pos_atoms[0][0];
        h.interval = b.add_var("I");
        b.rule().interval = h.interval;
        b.rule().body.push_back({h, h.fluent.loc});
        return std::move(b.rule());
    }

    // Temporaries are numbered in emission order; the final construct writes
    // the head variable, which is allocated last.
    auto last_step_is_final = [&](std::size_t group_index) {
        return neg_atoms.empty() && positives.size() == 1 && group_index == 0;
    };

    std::optional<std::size_t> final_construct;
    for (std::size_t g = 0; g < positives.size(); ++g) {
        const auto& atoms = pos_atoms[g];
        if (atoms.size() == 1) {
            groups.push_back(b.holds_for(*atoms[0]));
            continue;
        }
        IntervalConstruct u;
        u.op = IntervalConstruct::Op::Union;
        for (const auto* a : atoms) u.inputs.push_back(b.holds_for(*a));
        if (last_step_is_final(g)) {
            final_construct = b.rule().body.size();
        } else {
            u.output = b.fresh();
            groups.push_back(u.output);
        }
        b.construct(std::move(u), positives[g]->loc);
    }

    VarId positive = groups.empty() ? 0 : groups.front();
    if (groups.size() > 1) {
        IntervalConstruct x;
        x.op = IntervalConstruct::Op::Intersect;
        x.inputs = groups;
        if (neg_atoms.empty()) {
            final_construct = b.rule().body.size();
        } else {
            x.output = b.fresh();
            positive = x.output;
        }
        b.construct(std::move(x), def.loc);
    }

    if (!neg_atoms.empty()) {
        IntervalConstruct rc;
        rc.op = IntervalConstruct::Op::RelativeComplement;
        rc.base = positive;
        for (const auto* a : neg_atoms) rc.inputs.push_back(b.holds_for(*a));
        final_construct = b.rule().body.size();
        b.construct(std::move(rc), negatives.front()->loc);
    }

    const VarId out = b.add_var("I");
    auto& c = std::get<IntervalConstruct>(b.rule().body[*final_construct].node);
    c.output = out;
    b.rule().interval = out;
    return std::move(b.rule());
}

void expand_all(EventDescription& ed) {
    if (ed.iffs_expanded) return;
    for (std::size_t i = 0; i < ed.iffs.size(); ++i) {
        Rule r = expand_iff(ed.iffs[i]);
        r.from_iff = i;
        ed.rules.push_back(std::move(r));
    }
    ed.iffs_expanded = true;
}

}  // namespace rtec
