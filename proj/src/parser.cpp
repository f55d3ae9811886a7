#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "rtec/rule_language.hpp"

namespace rtec {

namespace {

enum class Tok {
    LowerIdent,
    UpperIdent,
    Integer,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Period,
    Slash,
    Star,
    Equals,      // =
    Arrow,       // <-
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,        // ==
    NotEq,       // !=
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::int64_t number = 0;
    SourceLoc loc;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token tok;
            tok.loc = {line_, col_};
            if (pos_ >= src_.size()) {
                tok.kind = Tok::End;
                out.push_back(tok);
                return out;
            }
            const char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t begin = pos_;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                    advance();
                }
                tok.text = std::string(src_.substr(begin, pos_ - begin));
                tok.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_') ? Tok::UpperIdent
                                                                                      : Tok::LowerIdent;
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '-' && pos_ + 1 < src_.size() &&
                        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                const std::size_t begin = pos_;
                advance();
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
                tok.text = std::string(src_.substr(begin, pos_ - begin));
                tok.kind = Tok::Integer;
                auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.number);
                if (ec != std::errc()) throw ParseError("integer out of range: " + tok.text, tok.loc);
            } else {
                tok.kind = punct(tok.loc);
            }
            out.push_back(std::move(tok));
        }
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '%') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    bool peek_is(char c) const { return pos_ + 1 < src_.size() && src_[pos_ + 1] == c; }

    Tok punct(SourceLoc loc) {
        const char c = src_[pos_];
        auto one = [this](Tok t) {
            advance();
            return t;
        };
        auto two = [this](Tok t) {
            advance();
            advance();
            return t;
        };
        switch (c) {
            case '(': return one(Tok::LParen);
            case ')': return one(Tok::RParen);
            case '[': return one(Tok::LBracket);
            case ']': return one(Tok::RBracket);
            case '{': return one(Tok::LBrace);
            case '}': return one(Tok::RBrace);
            case ',': return one(Tok::Comma);
            case '.': return one(Tok::Period);
            case '/': return one(Tok::Slash);
            case '*': return one(Tok::Star);
            case '=': return peek_is('=') ? two(Tok::EqEq) : one(Tok::Equals);
            case '<':
                if (peek_is('-')) return two(Tok::Arrow);
                if (peek_is('=')) return two(Tok::Le);
                return one(Tok::Lt);
            case '>': return peek_is('=') ? two(Tok::Ge) : one(Tok::Gt);
            case '!':
                if (peek_is('=')) return two(Tok::NotEq);
                break;
            default: break;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", loc);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

const char* describe(Tok t) {
    switch (t) {
        case Tok::LowerIdent: return "identifier";
        case Tok::UpperIdent: return "variable";
        case Tok::Integer: return "integer";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::Comma: return "','";
        case Tok::Period: return "'.'";
        case Tok::Slash: return "'/'";
        case Tok::Star: return "'*'";
        case Tok::Equals: return "'='";
        case Tok::Arrow: return "'<-'";
        case Tok::Lt: return "'<'";
        case Tok::Le: return "'<='";
        case Tok::Gt: return "'>'";
        case Tok::Ge: return "'>='";
        case Tok::EqEq: return "'=='";
        case Tok::NotEq: return "'!='";
        case Tok::End: return "end of input";
    }
    return "token";
}

// Per-clause variable table.
struct VarScope {
    std::vector<std::string> names;
    std::vector<VarKind> kinds;

    VarId get(const std::string& name, VarKind kind, SourceLoc loc) {
        if (name != "_") {
            for (std::size_t i = 0; i < names.size(); ++i) {
                if (names[i] == name) {
                    if (kinds[i] != kind) {
                        throw ParseError("variable " + name + " used both as a value and as an interval list",
                                         loc);
                    }
                    return static_cast<VarId>(i);
                }
            }
        }
        names.push_back(name == "_" ? "_G" + std::to_string(names.size()) : name);
        kinds.push_back(kind);
        return static_cast<VarId>(names.size() - 1);
    }
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    EventDescription run() {
        while (peek().kind != Tok::End) statement();
        resolve();
        return std::move(ed_);
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }

    const Token& take() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }

    [[noreturn]] void fail(const std::string& msg, SourceLoc loc) { throw ParseError(msg, loc); }

    const Token& expect(Tok kind, const char* context) {
        if (peek().kind != kind) {
            std::ostringstream msg;
            msg << "expected " << describe(kind) << " " << context << ", found " << describe(peek().kind);
            if (!peek().text.empty()) msg << " '" << peek().text << "'";
            fail(msg.str(), peek().loc);
        }
        return take();
    }

    bool accept(Tok kind) {
        if (peek().kind != kind) return false;
        take();
        return true;
    }

    bool at_word(std::string_view w, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::LowerIdent && peek(ahead).text == w;
    }

    void expect_word(std::string_view w, const char* context) {
        if (!at_word(w)) fail("expected '" + std::string(w) + "' " + context, peek().loc);
        take();
    }

    SymbolId intern(const std::string& s) { return ed_.symbols.intern(s); }

    // ---- statements ----

    void statement() {
        const Token& first = peek();
        if (first.kind == Tok::LowerIdent) {
            const std::string& w = first.text;
            if (w == "input" && (at_word("event", 1) || at_word("fluent", 1))) return input_decl();
            if (w == "simple" && at_word("fluent", 1)) return defined_decl(ItemKind::SimpleFluent, 2);
            if (w == "sd" && at_word("fluent", 1)) return defined_decl(ItemKind::SdFluent, 2);
            if (w == "event" && peek(1).kind == Tok::LowerIdent && peek(2).kind == Tok::Slash) {
                return defined_decl(ItemKind::Event, 1);
            }
            if (w == "domain" && peek(1).kind == Tok::LowerIdent && peek(2).kind == Tok::Equals) {
                return domain_decl();
            }
            if (w == "initiatedAt" || w == "terminatedAt" || w == "holdsFor" || w == "happensAt") {
                return rule();
            }
            return iff_definition();
        }
        fail(std::string("expected a declaration, rule, or iff definition, found ") + describe(first.kind),
             first.loc);
    }

    void declare(Declaration d) {
        for (const auto& existing : ed_.declarations) {
            if (existing.name == d.name) {
                fail("'" + ed_.symbols.name(d.name) + "' is declared twice", d.loc);
            }
        }
        ed_.declarations.push_back(std::move(d));
    }

    std::pair<SymbolId, std::size_t> name_arity() {
        const Token& name = expect(Tok::LowerIdent, "in declaration");
        expect(Tok::Slash, "after declared name");
        const Token& arity = expect(Tok::Integer, "as arity");
        if (arity.number < 0 || arity.number > static_cast<std::int64_t>(kMaxArity)) {
            fail("arity must be between 0 and " + std::to_string(kMaxArity), arity.loc);
        }
        return {intern(name.text), static_cast<std::size_t>(arity.number)};
    }

    void input_decl() {
        const SourceLoc loc = take().loc;
        const bool is_event = take().text == "event";
        auto [name, arity] = name_arity();
        expect(Tok::Period, "after declaration");
        declare({name, arity, is_event ? ItemKind::InputEvent : ItemKind::InputFluent, std::nullopt, loc});
    }

    void defined_decl(ItemKind kind, int keywords) {
        const SourceLoc loc = peek().loc;
        for (int i = 0; i < keywords; ++i) take();
        auto [name, arity] = name_arity();
        std::optional<Grounding> grounding;
        if (at_word("over")) {
            take();
            grounding = grounding_expr();
        }
        expect(Tok::Period, "after declaration");
        declare({name, arity, kind, grounding, loc});
    }

    Grounding grounding_expr() {
        Grounding g;
        if ((at_word("pairs") || at_word("upairs")) && peek(1).kind == Tok::LParen) {
            g.shape = take().text == "pairs" ? Grounding::Shape::Pairs : Grounding::Shape::UnorderedPairs;
            take();
            g.domains.push_back(intern(expect(Tok::LowerIdent, "as domain name").text));
            expect(Tok::RParen, "after domain name");
            return g;
        }
        g.shape = Grounding::Shape::Product;
        g.domains.push_back(intern(expect(Tok::LowerIdent, "as domain name").text));
        while (accept(Tok::Star)) g.domains.push_back(intern(expect(Tok::LowerIdent, "as domain name").text));
        return g;
    }

    Value constant_value(const Token& t) {
        if (t.kind == Tok::Integer) return Value::integer(t.number);
        return Value::symbol(intern(t.text));
    }

    void domain_decl() {
        const SourceLoc loc = take().loc;
        DomainDecl d;
        d.loc = loc;
        d.name = intern(take().text);
        take();  // '='
        if (at_word("input")) {
            take();
            d.from_input = true;
        } else {
            expect(Tok::LBrace, "to open domain members");
            if (!accept(Tok::RBrace)) {
                do {
                    const Token& t = peek();
                    if (t.kind != Tok::LowerIdent && t.kind != Tok::Integer) {
                        fail("domain members must be constants", t.loc);
                    }
                    d.members.push_back(constant_value(take()));
                } while (accept(Tok::Comma));
                expect(Tok::RBrace, "to close domain members");
            }
        }
        expect(Tok::Period, "after domain declaration");
        for (const auto& existing : ed_.domains) {
            if (existing.name == d.name) fail("domain '" + ed_.symbols.name(d.name) + "' is declared twice", loc);
        }
        ed_.domains.push_back(std::move(d));
    }

    // ---- terms and patterns ----

    Term term(VarScope& scope) {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::UpperIdent: {
                take();
                return Term::variable(scope.get(t.text, VarKind::Scalar, t.loc));
            }
            case Tok::LowerIdent:
            case Tok::Integer: return Term::make_constant(constant_value(take()));
            default:
                fail(std::string("expected a term, found ") + describe(t.kind), t.loc);
        }
    }

    std::vector<Term> arg_list(VarScope& scope) {
        std::vector<Term> args;
        if (accept(Tok::LParen)) {
            do {
                args.push_back(term(scope));
            } while (accept(Tok::Comma));
            expect(Tok::RParen, "after arguments");
        }
        return args;
    }

    FluentPattern fluent_value(VarScope& scope) {
        FluentPattern fp;
        const Token& name = expect(Tok::LowerIdent, "as fluent name");
        fp.loc = name.loc;
        fp.name = intern(name.text);
        fp.args = arg_list(scope);
        expect(Tok::Equals, "between fluent and value");
        fp.value = term(scope);
        return fp;
    }

    EventPattern event_pattern(VarScope& scope) {
        EventPattern ep;
        const Token& name = expect(Tok::LowerIdent, "as event name");
        ep.loc = name.loc;
        if ((name.text == "start" || name.text == "end") && peek().kind == Tok::LParen &&
            peek(1).kind == Tok::LowerIdent && looks_like_fluent_value()) {
            ep.kind = name.text == "start" ? EventPattern::Kind::Start : EventPattern::Kind::End;
            take();  // '('
            ep.fluent = fluent_value(scope);
            expect(Tok::RParen, "after start/end fluent");
            return ep;
        }
        ep.name = intern(name.text);
        ep.args = arg_list(scope);
        return ep;
    }

    // After "start(": does a fluent-value (name[(...)] = ...) follow?
    bool looks_like_fluent_value() const {
        std::size_t i = 2;  // peek(0) '(' , peek(1) name
        if (peek(i).kind == Tok::LParen) {
            int depth = 0;
            for (;; ++i) {
                const Tok k = peek(i).kind;
                if (k == Tok::End) return false;
                if (k == Tok::LParen) ++depth;
                if (k == Tok::RParen && --depth == 0) break;
            }
            ++i;
        }
        return peek(i).kind == Tok::Equals;
    }

    VarId interval_var(VarScope& scope, const char* context) {
        const Token& t = expect(Tok::UpperIdent, context);
        return scope.get(t.text, VarKind::Interval, t.loc);
    }

    std::vector<VarId> interval_var_list(VarScope& scope) {
        expect(Tok::LBracket, "to open interval list");
        std::vector<VarId> out;
        if (!accept(Tok::RBracket)) {
            do {
                out.push_back(interval_var(scope, "in interval list"));
            } while (accept(Tok::Comma));
            expect(Tok::RBracket, "to close interval list");
        }
        return out;
    }

    // ---- rules ----

    Literal literal(VarScope& scope) {
        Literal lit;
        const Token& t = peek();
        lit.loc = t.loc;
        if (t.kind == Tok::LowerIdent && peek(1).kind == Tok::LParen) {
            const std::string w = t.text;
            if (w == "happensAt") {
                take();
                take();
                HappensAt h;
                h.event = event_pattern(scope);
                expect(Tok::Comma, "in happensAt");
                h.time = term(scope);
                expect(Tok::RParen, "after happensAt");
                lit.node = std::move(h);
                return lit;
            }
            if (w == "holdsAt") {
                take();
                take();
                HoldsAt h;
                h.fluent = fluent_value(scope);
                expect(Tok::Comma, "in holdsAt");
                h.time = term(scope);
                expect(Tok::RParen, "after holdsAt");
                lit.node = std::move(h);
                return lit;
            }
            if (w == "holdsFor") {
                take();
                take();
                HoldsFor h;
                h.fluent = fluent_value(scope);
                expect(Tok::Comma, "in holdsFor");
                h.interval = interval_var(scope, "as holdsFor interval variable");
                expect(Tok::RParen, "after holdsFor");
                lit.node = std::move(h);
                return lit;
            }
            if (w == "union_all" || w == "intersect_all") {
                take();
                take();
                IntervalConstruct c;
                c.op = w == "union_all" ? IntervalConstruct::Op::Union : IntervalConstruct::Op::Intersect;
                c.inputs = interval_var_list(scope);
                expect(Tok::Comma, "in interval construct");
                c.output = interval_var(scope, "as construct output");
                expect(Tok::RParen, "after interval construct");
                lit.node = std::move(c);
                return lit;
            }
            if (w == "relative_complement_all") {
                take();
                take();
                IntervalConstruct c;
                c.op = IntervalConstruct::Op::RelativeComplement;
                c.base = interval_var(scope, "as relative_complement_all base");
                expect(Tok::Comma, "in relative_complement_all");
                c.inputs = interval_var_list(scope);
                expect(Tok::Comma, "in relative_complement_all");
                c.output = interval_var(scope, "as construct output");
                expect(Tok::RParen, "after relative_complement_all");
                lit.node = std::move(c);
                return lit;
            }
            fail("unknown predicate '" + w + "'", t.loc);
        }
        // Comparison or membership.
        Term lhs = term(scope);
        if (at_word("in")) {
            take();
            Membership m;
            m.term = lhs;
            m.domain = intern(expect(Tok::LowerIdent, "as domain name").text);
            lit.node = m;
            return lit;
        }
        Comparison c;
        c.lhs = lhs;
        switch (peek().kind) {
            case Tok::Lt: c.op = Comparison::Op::Lt; break;
            case Tok::Le: c.op = Comparison::Op::Le; break;
            case Tok::Gt: c.op = Comparison::Op::Gt; break;
            case Tok::Ge: c.op = Comparison::Op::Ge; break;
            case Tok::EqEq: c.op = Comparison::Op::Eq; break;
            case Tok::NotEq: c.op = Comparison::Op::Ne; break;
            default: fail("expected a comparison operator or 'in'", peek().loc);
        }
        take();
        c.rhs = term(scope);
        lit.node = c;
        return lit;
    }

    void rule() {
        Rule r;
        VarScope scope;
        const Token& head = take();
        r.loc = head.loc;
        expect(Tok::LParen, "after rule head predicate");
        if (head.text == "happensAt") {
            r.kind = RuleKind::HappensAt;
            r.event_head = event_pattern(scope);
            if (r.event_head.kind != EventPattern::Kind::Plain) {
                fail("start/end events are built in and cannot be defined", r.event_head.loc);
            }
            expect(Tok::Comma, "in rule head");
            r.time = term(scope);
        } else {
            r.fluent_head = fluent_value(scope);
            expect(Tok::Comma, "in rule head");
            if (head.text == "holdsFor") {
                r.kind = RuleKind::HoldsFor;
                r.interval = interval_var(scope, "as holdsFor interval variable");
            } else {
                r.kind = head.text == "initiatedAt" ? RuleKind::InitiatedAt : RuleKind::TerminatedAt;
                r.time = term(scope);
            }
        }
        expect(Tok::RParen, "after rule head");
        expect(Tok::Arrow, "after rule head");
        do {
            r.body.push_back(literal(scope));
        } while (accept(Tok::Comma));
        expect(Tok::Period, "at end of rule");
        r.var_names = std::move(scope.names);
        r.var_kinds = std::move(scope.kinds);
        ed_.rules.push_back(std::move(r));
    }

    // ---- iff definitions ----

    IffExpr iff_item(VarScope& scope) {
        IffExpr e;
        e.loc = peek().loc;
        if (at_word("not") && (peek(1).kind == Tok::LowerIdent || peek(1).kind == Tok::LParen)) {
            take();
            e.kind = IffExpr::Kind::Not;
            e.children.push_back(iff_item(scope));
            return e;
        }
        if (accept(Tok::LParen)) {
            std::vector<IffExpr> alts;
            alts.push_back(iff_item(scope));
            while (at_word("or")) {
                take();
                alts.push_back(iff_item(scope));
            }
            expect(Tok::RParen, "to close disjunction");
            if (alts.size() == 1) return std::move(alts.front());
            e.kind = IffExpr::Kind::Or;
            e.children = std::move(alts);
            return e;
        }
        e.kind = IffExpr::Kind::Atom;
        e.atom = fluent_value(scope);
        return e;
    }

    void iff_definition() {
        IffDefinition def;
        VarScope scope;
        def.loc = peek().loc;
        def.head = fluent_value(scope);
        expect_word("iff", "after fluent-value head (or expected a declaration/rule)");
        do {
            def.conjuncts.push_back(iff_item(scope));
        } while (accept(Tok::Comma));
        expect(Tok::Period, "at end of iff definition");
        def.var_names = std::move(scope.names);
        ed_.iffs.push_back(std::move(def));
    }

    // ---- name resolution ----

    void check_fluent(const FluentPattern& fp) {
        const Declaration* d = ed_.find_declaration(fp.name);
        const std::string& n = ed_.symbols.name(fp.name);
        if (d == nullptr) fail("undeclared fluent '" + n + "'", fp.loc);
        if (!is_fluent(d->kind)) fail("'" + n + "' is declared as an event, used as a fluent", fp.loc);
        if (d->arity != fp.args.size()) {
            fail("arity mismatch for '" + n + "': declared " + std::to_string(d->arity) + ", used with " +
                     std::to_string(fp.args.size()),
                 fp.loc);
        }
    }

    void check_event(const EventPattern& ep) {
        if (ep.kind != EventPattern::Kind::Plain) return check_fluent(ep.fluent);
        const Declaration* d = ed_.find_declaration(ep.name);
        const std::string& n = ed_.symbols.name(ep.name);
        if (d == nullptr) fail("undeclared event '" + n + "'", ep.loc);
        if (is_fluent(d->kind)) fail("'" + n + "' is declared as a fluent, used as an event", ep.loc);
        if (d->arity != ep.args.size()) {
            fail("arity mismatch for '" + n + "': declared " + std::to_string(d->arity) + ", used with " +
                     std::to_string(ep.args.size()),
                 ep.loc);
        }
    }

    void check_iff(const IffExpr& e) {
        if (e.kind == IffExpr::Kind::Atom) return check_fluent(e.atom);
        for (const auto& c : e.children) check_iff(c);
    }

    void resolve() {
        for (const auto& r : ed_.rules) {
            if (r.kind == RuleKind::HappensAt) {
                check_event(r.event_head);
            } else {
                check_fluent(r.fluent_head);
            }
            for (const auto& lit : r.body) {
                if (const auto* h = std::get_if<HappensAt>(&lit.node)) check_event(h->event);
                if (const auto* h = std::get_if<HoldsAt>(&lit.node)) check_fluent(h->fluent);
                if (const auto* h = std::get_if<HoldsFor>(&lit.node)) check_fluent(h->fluent);
            }
        }
        for (const auto& def : ed_.iffs) {
            check_fluent(def.head);
            for (const auto& c : def.conjuncts) check_iff(c);
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    EventDescription ed_;
};

}  // namespace

ParseError::ParseError(const std::string& message, SourceLoc loc)
    : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + message),
      loc_(loc) {}

LoadError::LoadError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error([&] {
          std::string msg = "event description has errors:";
          for (const auto& d : diagnostics) {
              if (d.severity == Diagnostic::Severity::Error) msg += "\n  " + format(d);
          }
          return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

std::string format(const Diagnostic& d) {
    std::ostringstream os;
    if (d.loc.line > 0) os << d.loc.line << ':' << d.loc.column << ": ";
    os << (d.severity == Diagnostic::Severity::Error ? "error" : "warning");
    if (!d.code.empty()) os << " [" << d.code << ']';
    os << ": " << d.message;
    return os.str();
}

bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) {
        if (d.severity == Diagnostic::Severity::Error) return true;
    }
    return false;
}

const char* to_string(ItemKind kind) {
    switch (kind) {
        case ItemKind::InputEvent: return "input event";
        case ItemKind::InputFluent: return "input fluent";
        case ItemKind::SimpleFluent: return "simple fluent";
        case ItemKind::SdFluent: return "sd fluent";
        case ItemKind::Event: return "event";
    }
    return "?";
}

bool is_fluent(ItemKind kind) {
    return kind == ItemKind::InputFluent || kind == ItemKind::SimpleFluent || kind == ItemKind::SdFluent;
}

bool is_input(ItemKind kind) { return kind == ItemKind::InputEvent || kind == ItemKind::InputFluent; }

const Declaration* EventDescription::find_declaration(SymbolId name) const {
    for (const auto& d : declarations) {
        if (d.name == name) return &d;
    }
    return nullptr;
}

const Declaration* EventDescription::find_declaration(std::string_view name) const {
    SymbolId id = 0;
    if (!symbols.find(name, id)) return nullptr;
    return find_declaration(id);
}

const DomainDecl* EventDescription::find_domain(SymbolId name) const {
    for (const auto& d : domains) {
        if (d.name == name) return &d;
    }
    return nullptr;
}

int EventDescription::level_of(std::string_view name, std::optional<std::string_view> value) const {
    ItemRef ref;
    if (!symbols.find(name, ref.name)) return -1;
    if (value) {
        ref.has_value = true;
        SymbolId v = 0;
        if (symbols.find(*value, v)) {
            ref.value = Value::symbol(v);
        } else {
            std::int64_t n = 0;
            auto [p, ec] = std::from_chars(value->data(), value->data() + value->size(), n);
            if (ec != std::errc() || p != value->data() + value->size()) return -1;
            ref.value = Value::integer(n);
        }
    }
    auto it = levels.find(ref);
    if (it != levels.end()) return it->second;
    // Input items are level 0 for every value.
    const Declaration* d = find_declaration(ref.name);
    if (d != nullptr && is_input(d->kind)) return 0;
    return -1;
}

int EventDescription::max_level() const {
    int m = 0;
    for (const auto& [name, level] : name_levels) m = std::max(m, level);
    return m;
}

std::vector<Value> EventDescription::head_values(SymbolId name) const {
    std::vector<Value> out;
    for (const auto& r : rules) {
        if (r.kind == RuleKind::HappensAt || r.kind == RuleKind::TerminatedAt) continue;
        if (r.fluent_head.name != name || r.fluent_head.value.is_var()) continue;
        const Value v = r.fluent_head.value.constant;
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    return out;
}

EventDescription parse(std::string_view text) {
    Lexer lexer(text);
    Parser parser(lexer.run());
    return parser.run();
}

}  // namespace rtec
