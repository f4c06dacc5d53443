#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "cpl/value.hpp"

namespace cpl {

/// Unqualified variable, read from the current event's store (`Here.x`).
struct LocalVar {
  std::string name;
  friend bool operator==(const LocalVar&, const LocalVar&) = default;
};

/// Variable read at the latest visible event of a lifeline (`At[B].x`).
struct AtField {
  std::string lifeline;
  std::string name;
  friend bool operator==(const AtField&, const AtField&) = default;
};

using Term = std::variant<LocalVar, AtField>;

/// One side of a comparison: a term or a literal.
using Operand = std::variant<LocalVar, AtField, Value>;

inline bool is_term(const Operand& o) { return !std::holds_alternative<Value>(o); }

enum class CompareOp { eq, ne, lt, le, gt, ge };

std::string_view to_string(CompareOp op);

/// Comparison atom. At least one side is a term.
struct Atom {
  CompareOp op = CompareOp::eq;
  Operand left;
  Operand right;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Applies `op` to two possibly undefined values. Undefined sides, values of
/// different types, and order comparisons on non-Int values all yield false.
bool compare(CompareOp op, const std::optional<Value>& lhs, const std::optional<Value>& rhs);

enum class Op {
  atom,
  at,         // at(B, f): f at the latest visible B-event
  yesterday,  // Y(f): f at the previous local event
  since,      // f S g along the local order
  conj,
  disj,
  negation,
  truth,
  past_at,    // P[B](f), derived
  past_any,   // P(f), derived
  seen,       // seen(B), derived
};

inline constexpr std::size_t op_count = 11;

std::string_view to_string(Op op);

struct FormulaNode;

/// Immutable, shareable formula tree. Equality is structural (see `equal`).
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  Op op;
  std::string lifeline;     // at, past_at, seen
  std::optional<Atom> atom; // atom
  Formula lhs;              // unary operand, or left operand
  Formula rhs;              // right operand of since/conj/disj
};

Formula make_atom(Atom a);
Formula make_atom(CompareOp op, Operand left, Operand right);
Formula at(std::string lifeline, Formula f);
Formula yesterday(Formula f);
Formula since(Formula lhs, Formula rhs);
Formula conj(Formula lhs, Formula rhs);
Formula disj(Formula lhs, Formula rhs);
Formula negation(Formula f);
Formula truth();
Formula past_at(std::string lifeline, Formula f);
Formula past_any(Formula f);
Formula seen(std::string lifeline);

bool equal(const Formula& a, const Formula& b);

/// True when no derived operator (past_at, past_any, seen) occurs.
bool is_core(const Formula& f);

std::size_t node_count(const Formula& f);
std::size_t depth(const Formula& f);

/// Canonical concrete syntax. Binary operators are parenthesised, so the
/// output parses back to a structurally equal tree.
std::string to_string(const Formula& f);
std::string to_string(const Atom& a);
std::string to_string(const Operand& o);

}  // namespace cpl
