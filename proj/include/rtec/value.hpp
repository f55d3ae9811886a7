#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rtec {

using SymbolId = std::uint32_t;

/// Interns constant names. Ids are dense and stable for the table's lifetime.
class SymbolTable {
public:
    SymbolId intern(std::string_view name);
    /// Returns false when `name` was never interned.
    bool find(std::string_view name, SymbolId& out) const;
    const std::string& name(SymbolId id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    };
    std::vector<std::string> names_;
    std::unordered_map<std::string, SymbolId, Hash, std::equal_to<>> ids_;
};

/// A ground constant: an interned symbol or an integer.
struct Value {
    enum class Kind : std::uint8_t { Symbol, Integer };

    Kind kind = Kind::Symbol;
    std::int64_t data = 0;

    static Value symbol(SymbolId id) { return {Kind::Symbol, static_cast<std::int64_t>(id)}; }
    static Value integer(std::int64_t v) { return {Kind::Integer, v}; }

    bool is_symbol() const { return kind == Kind::Symbol; }
    bool is_integer() const { return kind == Kind::Integer; }
    SymbolId sym() const { return static_cast<SymbolId>(data); }

    friend bool operator==(const Value&, const Value&) = default;
};

struct ValueHash {
    std::size_t operator()(const Value& v) const {
        return std::hash<std::int64_t>{}(v.data) * 31u + static_cast<std::size_t>(v.kind);
    }
};

std::string to_string(const Value& v, const SymbolTable& symbols);

/// Orders integers numerically and symbols by name; integers sort first.
std::strong_ordering compare_values(const Value& a, const Value& b, const SymbolTable& symbols);

inline constexpr std::size_t kMaxArity = 6;

/// Fixed-capacity argument tuple of a ground fluent or event.
class Args {
public:
    Args() = default;
    Args(std::initializer_list<Value> values);

    void push_back(const Value& v) {
        if (size_ == kMaxArity) throw std::length_error("arity exceeds kMaxArity");
        items_[size_++] = v;
    }
    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    const Value& operator[](std::size_t i) const { return items_[i]; }
    Value& operator[](std::size_t i) { return items_[i]; }
    const Value* begin() const { return items_.data(); }
    const Value* end() const { return items_.data() + size_; }

    friend bool operator==(const Args& a, const Args& b) {
        if (a.size_ != b.size_) return false;
        for (std::size_t i = 0; i < a.size_; ++i) {
            if (!(a.items_[i] == b.items_[i])) return false;
        }
        return true;
    }

private:
    std::array<Value, kMaxArity> items_{};
    std::size_t size_ = 0;
};

/// A ground fluent-value (name(args)=value) or, with `value` unset, a ground
/// event name(args).
struct GroundKey {
    SymbolId name = 0;
    Args args;
    bool has_value = false;
    Value value;

    friend bool operator==(const GroundKey&, const GroundKey&) = default;
};

struct GroundKeyHash {
    std::size_t operator()(const GroundKey& k) const {
        std::size_t h = std::hash<SymbolId>{}(k.name);
        for (const auto& v : k.args) h = h * 1000003u ^ ValueHash{}(v);
        if (k.has_value) h = h * 1000003u ^ ValueHash{}(k.value);
        return h;
    }
};

}  // namespace rtec
