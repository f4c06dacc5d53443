#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace cpl {

/// A stored value. The alternative is fixed per value; nothing converts
/// between Int, Str and Bool implicitly.
using Value = std::variant<std::int64_t, std::string, bool>;

/// Post-event local store of a lifeline. Variables not present are
/// undefined, which is an ordinary outcome rather than an error.
using Valuation = std::map<std::string, Value, std::less<>>;

inline Value int_value(std::int64_t v) { return Value{std::in_place_type<std::int64_t>, v}; }
inline Value str_value(std::string v) { return Value{std::in_place_type<std::string>, std::move(v)}; }
inline Value bool_value(bool v) { return Value{std::in_place_type<bool>, v}; }

inline std::optional<Value> lookup(const Valuation& store, std::string_view name) {
  auto it = store.find(name);
  if (it == store.end()) return std::nullopt;
  return it->second;
}

/// Renders a value in guard-literal syntax: 42, "text", true.
std::string to_literal(const Value& v);

/// Quotes and escapes a string as a guard string literal.
std::string quote(std::string_view s);

}  // namespace cpl
