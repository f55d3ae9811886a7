#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "reference.hpp"
#include "rtec/harness.hpp"
#include "rtec/rule_language.hpp"
#include "streams.hpp"

namespace rtec {
namespace {

const char* const kDecls = R"(
domain entity = {p1, p2}.
input event appear/1.
input event disappear/1.
input fluent walking/1.
input fluent inactive/1.
input fluent close/2.
input fluent a/1.
input fluent b/1.
input fluent c/1.
simple fluent person/1 over entity.
simple fluent leaving_object/2 over pairs(entity).
)";

EventDescription parsed(const std::string& text) { return parse(text); }

std::vector<std::string> codes(const std::vector<Diagnostic>& diags) {
    std::vector<std::string> out;
    for (const auto& d : diags) out.push_back(d.code);
    return out;
}

TEST(Parse, LeavingObjectRule) {
    const auto ed = parsed(std::string(kDecls) + R"(
initiatedAt(leaving_object(P, Obj) = true, T) <-
    happensAt(appear(Obj), T),
    holdsAt(inactive(Obj) = true, T),
    holdsAt(close(P, Obj) = true, T),
    holdsAt(person(P) = true, T).
)");
    ASSERT_EQ(ed.rules.size(), 1u);
    const Rule& r = ed.rules[0];
    EXPECT_EQ(r.kind, RuleKind::InitiatedAt);
    EXPECT_EQ(ed.symbols.name(r.fluent_head.name), "leaving_object");
    EXPECT_EQ(r.fluent_head.args.size(), 2u);
    EXPECT_EQ(r.body.size(), 4u);
    EXPECT_TRUE(std::holds_alternative<HappensAt>(r.body[0].node));
    EXPECT_TRUE(std::holds_alternative<HoldsAt>(r.body[3].node));
}

TEST(Parse, StaticallyDeterminedMoving) {
    const auto ed = parse(bundled_rules());
    const auto it = std::find_if(ed.rules.begin(), ed.rules.end(), [&](const Rule& r) {
        return r.kind == RuleKind::HoldsFor && ed.symbols.name(r.head_name()) == "moving_sd";
    });
    ASSERT_NE(it, ed.rules.end());
    ASSERT_EQ(it->body.size(), 4u);
    const auto* c = std::get_if<IntervalConstruct>(&it->body[3].node);
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->op, IntervalConstruct::Op::Intersect);
    EXPECT_EQ(c->inputs.size(), 3u);
}

TEST(Parse, EmptyDocument) {
    const auto ed = parse("");
    EXPECT_TRUE(ed.rules.empty());
    EXPECT_TRUE(ed.declarations.empty());
    EXPECT_NO_THROW(load_description("% only a comment\n"));
}

TEST(Parse, ErrorsCarryLocation) {
    try {
        parse("input event appear/1.\ninitiatedAt(person(P) = true, T) <- happensAt(appear(P) T).");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.loc().line, 2);
    }
    EXPECT_THROW(parse("input event appear/1"), ParseError);
    EXPECT_THROW(parse("input event $/1."), ParseError);
}

TEST(Parse, DomainsAndGroundings) {
    const auto ed = parse("domain entity = input.\ndomain colour = {red, 3}.\nsd fluent m/2 over upairs(entity).\n");
    ASSERT_EQ(ed.domains.size(), 2u);
    EXPECT_TRUE(ed.domains[0].from_input);
    EXPECT_EQ(ed.domains[1].members.size(), 2u);
    EXPECT_TRUE(ed.domains[1].members[1].is_integer());
    const Declaration* m = ed.find_declaration("m");
    ASSERT_NE(m, nullptr);
    EXPECT_EQ(m->grounding->shape, Grounding::Shape::UnorderedPairs);
}

TEST(Iff, ExpandsTheGeneralForm) {
    auto ed = parse(R"(
domain entity = {p1}.
input fluent a/1. input fluent b/1. input fluent c/1.
sd fluent g/1 over entity.
g(X) = true iff (a(X) = true or b(X) = true), (a(X) = false or b(X) = false), not c(X) = true.
)");
    ASSERT_EQ(ed.iffs.size(), 1u);
    const Rule r = expand_iff(ed.iffs[0]);
    EXPECT_EQ(r.kind, RuleKind::HoldsFor);
    ASSERT_EQ(r.body.size(), 9u);
    int holds = 0, unions = 0, intersections = 0, complements = 0;
    for (const auto& lit : r.body) {
        if (std::holds_alternative<HoldsFor>(lit.node)) ++holds;
        if (const auto* c = std::get_if<IntervalConstruct>(&lit.node)) {
            if (c->op == IntervalConstruct::Op::Union) ++unions;
            if (c->op == IntervalConstruct::Op::Intersect) ++intersections;
            if (c->op == IntervalConstruct::Op::RelativeComplement) ++complements;
        }
    }
    EXPECT_EQ(holds, 5);
    EXPECT_EQ(unions, 2);
    EXPECT_EQ(intersections, 1);
    EXPECT_EQ(complements, 1);
    const auto* last = std::get_if<IntervalConstruct>(&r.body.back().node);
    ASSERT_NE(last, nullptr);
    EXPECT_EQ(last->op, IntervalConstruct::Op::RelativeComplement);
    EXPECT_EQ(last->output, r.interval);
}

TEST(Iff, SinglePositiveConjunct) {
    auto ed = parse("input fluent a/1.\nsd fluent g/1 over entity.\ndomain entity = {p}.\ng(X) = true iff a(X) = true.\n");
    const Rule r = expand_iff(ed.iffs[0]);
    ASSERT_EQ(r.body.size(), 1u);
    const auto* h = std::get_if<HoldsFor>(&r.body[0].node);
    ASSERT_NE(h, nullptr);
    EXPECT_EQ(h->interval, r.interval);
}

TEST(Iff, UnsupportedShapes) {
    const std::string head = "input fluent a/1. input fluent b/1.\nsd fluent g/1 over entity.\ndomain entity = {p}.\n";
    EXPECT_THROW(load_description(head + "g(X) = true iff (not a(X) = true or b(X) = true).\n"), std::exception);
    EXPECT_THROW(load_description(head + "g(X) = true iff not a(X) = true.\n"), ShorthandError);
}

// The expansion of "G iff A, not B" agrees with its pointwise meaning.
TEST(Iff, ComplementExpansionMatchesPointwise) {
    const std::string text = "input fluent a/1. input fluent b/1.\nsd fluent g/1 over entity.\n"
                             "domain entity = {p}.\ng(X) = true iff a(X) = true, not b(X) = true.\n";
    EventDescription ed = load_description(text);
    const Rule& r = ed.rules.back();
    ASSERT_EQ(r.body.size(), 3u);
    std::mt19937_64 rng(12);
    for (int n = 0; n < 200; ++n) {
        const IntervalList a = testing::random_list(rng, 60, 4);
        const IntervalList b = testing::random_list(rng, 60, 4);
        std::vector<const IntervalList*> ivs(r.var_names.size(), nullptr);
        std::vector<IntervalList> scratch;
        scratch.reserve(4);
        ivs[std::get<HoldsFor>(r.body[0].node).interval] = &a;
        ivs[std::get<HoldsFor>(r.body[1].node).interval] = &b;
        const auto& c = std::get<IntervalConstruct>(r.body[2].node);
        std::vector<IntervalList> inputs;
        for (VarId v : c.inputs) inputs.push_back(*ivs[v]);
        const IntervalList got = relative_complement_all(*ivs[c.base], inputs);
        const reference::Frame f{0, 61};
        const auto pa = reference::points_of(a, f), pb = reference::points_of(b, f);
        reference::Points want(f.size());
        for (std::size_t i = 0; i < want.size(); ++i) want[i] = pa[i] && !pb[i];
        EXPECT_EQ(got, reference::list_of(want, f));
    }
}

TEST(Stratify, SurveillanceLevels) {
    const auto ed = load_description(bundled_rules());
    EXPECT_EQ(ed.level_of("person", "true"), 1);
    EXPECT_EQ(ed.level_of("leaving_object", "true"), 2);
    EXPECT_EQ(ed.level_of("moving", "true"), 1);
    EXPECT_EQ(ed.level_of("moving_sd", "true"), 1);
    EXPECT_EQ(ed.level_of("walking", "true"), 0);
}

TEST(Stratify, CycleIsRejected) {
    const std::string text = "domain e = {x}.\ninput fluent a/1.\nsd fluent f/1 over e.\nsd fluent g/1 over e.\n"
                             "holdsFor(f(X) = true, I) <- holdsFor(g(X) = true, I).\n"
                             "holdsFor(g(X) = true, I) <- holdsFor(f(X) = true, I).\n";
    try {
        load_description(text);
        FAIL() << "expected StratificationError";
    } catch (const StratificationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("f"), std::string::npos);
        EXPECT_NE(msg.find("g"), std::string::npos);
    }
}

TEST(Stratify, SelfDefinitionIsRejected) {
    const std::string text = "domain e = {x}.\nsd fluent f/1 over e.\n"
                             "holdsFor(f(X) = true, I) <- holdsFor(f(X) = true, I).\n";
    EXPECT_THROW(load_description(text), StratificationError);
}

TEST(Stratify, MissingInitiationWarns) {
    std::vector<Diagnostic> warnings;
    load_description("domain e = {x}.\ninput event go/1.\nsimple fluent f/1 over e.\n"
                     "terminatedAt(f(X) = true, T) <- happensAt(go(X), T).\n",
                     &warnings);
    const auto got = codes(warnings);
    EXPECT_NE(std::find(got.begin(), got.end(), "no-initiation"), got.end());
}

TEST(Validate, SurveillancePackIsClean) {
    auto ed = parse(bundled_rules());
    expand_all(ed);
    stratify(ed);
    EXPECT_TRUE(validate(ed).empty());
}

TEST(Validate, SimpleAndStaticallyDetermined) {
    auto ed = parse(std::string(kDecls) + R"(
simple fluent moving/2 over pairs(entity).
initiatedAt(moving(P1, P2) = true, T) <- happensAt(start(walking(P1) = true), T), holdsAt(walking(P2) = true, T).
holdsFor(moving(P1, P2) = true, I) <- holdsFor(walking(P1) = true, I1), holdsFor(walking(P2) = true, I2), intersect_all([I1, I2], I).
)");
    expand_all(ed);
    stratify(ed);
    const auto diags = validate(ed);
    ASSERT_EQ(diags.size(), 1u);
    EXPECT_EQ(diags[0].code, "simple-and-sd");
}

TEST(Validate, VariableOnlyUnderNegation) {
    auto ed = parse("domain e = {x}.\ninput fluent a/1.\ninput fluent b/2.\nsd fluent g/1 over e.\n"
                    "g(X) = true iff a(X) = true, not b(X, Y) = true.\n");
    expand_all(ed);
    stratify(ed);
    const auto diags = validate(ed);
    ASSERT_EQ(diags.size(), 1u);
    EXPECT_EQ(diags[0].code, "unbound-variable");
}

TEST(Validate, TimepointLiteralInHoldsFor) {
    auto ed = parse("domain e = {x}.\ninput event go/1.\ninput fluent a/1.\nsd fluent g/1 over e.\n"
                    "holdsFor(g(X) = true, I) <- holdsFor(a(X) = true, I), happensAt(go(X), 3).\n");
    expand_all(ed);
    stratify(ed);
    EXPECT_EQ(codes(validate(ed)), std::vector<std::string>{"timepoint-in-holdsfor"});
}

TEST(Validate, LoadErrorCarriesDiagnostics) {
    try {
        load_description("domain e = {x}.\ninput fluent a/1.\nsd fluent g/1 over nowhere.\n"
                         "holdsFor(g(X) = true, I) <- holdsFor(a(X) = true, I).\n");
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_FALSE(e.diagnostics().empty());
        EXPECT_TRUE(has_errors(e.diagnostics()));
    }
}

TEST(Printer, RoundTripsTheSurveillancePack) {
    const auto ed = load_description(bundled_rules());
    const std::string printed = to_source(ed);
    const auto again = load_description(printed);
    EXPECT_TRUE(structurally_equal(ed, again));
    EXPECT_EQ(to_source(again), printed);
}

TEST(Printer, KeepsIffDefinitions) {
    const std::string text = "domain e = {x}.\ninput fluent a/1. input fluent b/1.\nsd fluent g/1 over e.\n"
                             "g(X) = true iff a(X) = true, not b(X) = true.\n";
    const auto ed = load_description(text);
    const std::string printed = to_source(ed);
    EXPECT_NE(printed.find("iff"), std::string::npos);
    EXPECT_TRUE(structurally_equal(ed, load_description(printed)));
}

}  // namespace
}  // namespace rtec
