#include "rtec/value.hpp"

namespace rtec {

SymbolId SymbolTable::intern(std::string_view name) {
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    const auto id = static_cast<SymbolId>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
}

bool SymbolTable::find(std::string_view name, SymbolId& out) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return false;
    out = it->second;
    return true;
}

std::string to_string(const Value& v, const SymbolTable& symbols) {
    if (v.is_integer()) return std::to_string(v.data);
    return symbols.name(v.sym());
}

std::strong_ordering compare_values(const Value& a, const Value& b, const SymbolTable& symbols) {
    if (a.kind != b.kind) return a.is_integer() ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a.is_integer()) return a.data <=> b.data;
    if (a.data == b.data) return std::strong_ordering::equal;
    return symbols.name(a.sym()).compare(symbols.name(b.sym())) < 0 ? std::strong_ordering::less
                                                                  : std::strong_ordering::greater;
}

Args::Args(std::initializer_list<Value> values) {
    for (const auto& v : values) push_back(v);
}

}  // namespace rtec
