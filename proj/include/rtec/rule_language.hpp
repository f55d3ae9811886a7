#pragma once

// Event descriptions: a small rule language for composite event definitions.
//
// A document is a sequence of statements, each terminated by '.':
//
//   input event appear/1.
//   input fluent walking/1.
//   simple fluent person/1 over entity.
//   sd fluent moving_sd/2 over upairs(entity).
//   event alarm/1 over entity.
//   domain entity = {p1, p2}.          % or: domain entity = input.
//
//   initiatedAt(person(P) = true, T) <- happensAt(start(walking(P) = true), T).
//   holdsFor(g(X) = true, I) <- holdsFor(a(X) = true, I1), union_all([I1], I).
//   g(X) = true iff (a(X) = true or b(X) = true), not c(X) = true.
//
// Lower-case identifiers and integers are constants, upper-case identifiers
// (and '_') are variables, '%' starts a comment. See docs in README.md.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rtec/value.hpp"

namespace rtec {

/// Source position. Locations never take part in structural equality.
struct SourceLoc {
    int line = 0;
    int column = 0;

    friend bool operator==(const SourceLoc&, const SourceLoc&) { return true; }
};

struct Diagnostic {
    enum class Severity { Warning, Error };

    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    SourceLoc loc;
};

std::string format(const Diagnostic& d);
bool has_errors(const std::vector<Diagnostic>& diags);

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, SourceLoc loc);
    SourceLoc loc() const { return loc_; }

private:
    SourceLoc loc_;
};

/// An `iff` body outside the supported fragment.
class ShorthandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The definitions are not hierarchical.
class StratificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by load_description when validation reports errors.
class LoadError : public std::runtime_error {
public:
    explicit LoadError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

using VarId = std::uint32_t;

struct Term {
    enum class Kind : std::uint8_t { Variable, Constant };

    Kind kind = Kind::Constant;
    VarId var = 0;
    Value constant;

    static Term variable(VarId v) { return {Kind::Variable, v, {}}; }
    static Term make_constant(Value v) { return {Kind::Constant, 0, v}; }
    bool is_var() const { return kind == Kind::Variable; }

    friend bool operator==(const Term&, const Term&) = default;
};

struct FluentPattern {
    SymbolId name = 0;
    std::vector<Term> args;
    Term value;
    SourceLoc loc;

    friend bool operator==(const FluentPattern&, const FluentPattern&) = default;
};

struct EventPattern {
    enum class Kind : std::uint8_t { Plain, Start, End };

    Kind kind = Kind::Plain;
    SymbolId name = 0;          // Plain
    std::vector<Term> args;     // Plain
    FluentPattern fluent;       // Start / End
    SourceLoc loc;

    friend bool operator==(const EventPattern&, const EventPattern&) = default;
};

struct HappensAt {
    EventPattern event;
    Term time;
    friend bool operator==(const HappensAt&, const HappensAt&) = default;
};

struct HoldsAt {
    FluentPattern fluent;
    Term time;
    friend bool operator==(const HoldsAt&, const HoldsAt&) = default;
};

struct HoldsFor {
    FluentPattern fluent;
    VarId interval = 0;
    friend bool operator==(const HoldsFor&, const HoldsFor&) = default;
};

struct IntervalConstruct {
    enum class Op : std::uint8_t { Union, Intersect, RelativeComplement };

    Op op = Op::Union;
    VarId base = 0;  // RelativeComplement only
    std::vector<VarId> inputs;
    VarId output = 0;
    friend bool operator==(const IntervalConstruct&, const IntervalConstruct&) = default;
};

struct Comparison {
    enum class Op : std::uint8_t { Lt, Le, Gt, Ge, Eq, Ne };

    Op op = Op::Eq;
    Term lhs;
    Term rhs;
    friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct Membership {
    Term term;
    SymbolId domain = 0;
    friend bool operator==(const Membership&, const Membership&) = default;
};

struct Literal {
    std::variant<HappensAt, HoldsAt, HoldsFor, IntervalConstruct, Comparison, Membership> node;
    SourceLoc loc;
    friend bool operator==(const Literal&, const Literal&) = default;
};

enum class RuleKind : std::uint8_t { InitiatedAt, TerminatedAt, HoldsFor, HappensAt };

enum class VarKind : std::uint8_t { Scalar, Interval };

struct Rule {
    RuleKind kind = RuleKind::InitiatedAt;
    FluentPattern fluent_head;  // InitiatedAt, TerminatedAt, HoldsFor
    EventPattern event_head;    // HappensAt
    Term time;                  // InitiatedAt, TerminatedAt, HappensAt
    VarId interval = 0;         // HoldsFor
    std::vector<Literal> body;
    std::vector<std::string> var_names;
    std::vector<VarKind> var_kinds;
    std::optional<std::size_t> from_iff;  // index of the iff definition it expands
    SourceLoc loc;

    /// Name of the defined fluent or event.
    SymbolId head_name() const { return kind == RuleKind::HappensAt ? event_head.name : fluent_head.name; }
};

/// Boolean body of an `iff` definition.
struct IffExpr {
    enum class Kind : std::uint8_t { Atom, Not, Or };

    Kind kind = Kind::Atom;
    FluentPattern atom;
    std::vector<IffExpr> children;
    SourceLoc loc;

    friend bool operator==(const IffExpr&, const IffExpr&) = default;
};

struct IffDefinition {
    FluentPattern head;
    std::vector<IffExpr> conjuncts;
    std::vector<std::string> var_names;
    SourceLoc loc;
};

enum class ItemKind : std::uint8_t { InputEvent, InputFluent, SimpleFluent, SdFluent, Event };

const char* to_string(ItemKind kind);
bool is_fluent(ItemKind kind);
bool is_input(ItemKind kind);

struct Grounding {
    enum class Shape : std::uint8_t { Product, Pairs, UnorderedPairs };

    Shape shape = Shape::Product;
    std::vector<SymbolId> domains;  // Product: one per argument; Pairs/UnorderedPairs: one
    friend bool operator==(const Grounding&, const Grounding&) = default;
};

struct Declaration {
    SymbolId name = 0;
    std::size_t arity = 0;
    ItemKind kind = ItemKind::InputEvent;
    std::optional<Grounding> grounding;
    SourceLoc loc;
};

struct DomainDecl {
    SymbolId name = 0;
    bool from_input = false;  // members supplied by the harness from the stream
    std::vector<Value> members;
    SourceLoc loc;
};

/// A fluent-value pattern F=V or an event name, the unit that receives a level.
struct ItemRef {
    SymbolId name = 0;
    bool has_value = false;
    Value value;
    friend bool operator==(const ItemRef&, const ItemRef&) = default;
};

struct ItemRefHash {
    std::size_t operator()(const ItemRef& r) const {
        return std::hash<SymbolId>{}(r.name) * 131u ^ (r.has_value ? ValueHash{}(r.value) + 7u : 0u);
    }
};

struct EventDescription {
    SymbolTable symbols;
    std::vector<Declaration> declarations;
    std::vector<DomainDecl> domains;
    std::vector<Rule> rules;
    std::vector<IffDefinition> iffs;
    bool iffs_expanded = false;

    /// Filled by stratify.
    std::unordered_map<ItemRef, int, ItemRefHash> levels;
    /// Evaluation level per defined name (max over its values).
    std::unordered_map<SymbolId, int> name_levels;

    const Declaration* find_declaration(SymbolId name) const;
    const Declaration* find_declaration(std::string_view name) const;
    const DomainDecl* find_domain(SymbolId name) const;

    /// Level of `name` (event) or `name=value` (fluent); -1 when unknown.
    int level_of(std::string_view name, std::optional<std::string_view> value = std::nullopt) const;
    int max_level() const;

    /// Values that some rule head assigns to fluent `name`, in first-rule order.
    std::vector<Value> head_values(SymbolId name) const;
};

/// Parses a document. Shorthands are kept unexpanded.
EventDescription parse(std::string_view text);

/// Rewrites one `iff` definition as a holdsFor rule over interval constructs.
Rule expand_iff(const IffDefinition& def);

/// Appends the expansion of every `iff` definition to the rule list.
void expand_all(EventDescription& ed);

/// Assigns levels; throws StratificationError on a dependency cycle. Returns
/// warnings (simple fluents with no initiating rule).
std::vector<Diagnostic> stratify(EventDescription& ed);

std::vector<Diagnostic> validate(const EventDescription& ed);

/// parse + expand_all + stratify + validate. Throws ParseError, ShorthandError,
/// StratificationError, or LoadError; warnings go to `warnings` when given.
EventDescription load_description(std::string_view text, std::vector<Diagnostic>* warnings = nullptr);

/// Pretty-prints a description in the document syntax. Expanded rules are
/// printed as their original `iff` definitions.
std::string to_source(const EventDescription& ed);
std::string to_source(const Rule& rule, const SymbolTable& symbols);

/// Compares two descriptions by structure and constant names, ignoring source
/// locations and symbol ids.
bool structurally_equal(const EventDescription& a, const EventDescription& b);

}  // namespace rtec
