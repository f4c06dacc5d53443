#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpl/formula.hpp"

namespace cpl {

/// Rewrites derived operators into core syntax:
///   P[B](f) -> at(B, true S f)
///   P(f)    -> at(B1, true S f) || ... || at(Bn, true S f), lifelines in order
///   seen(B) -> at(B, true)
/// P(f) over an empty lifeline set expands to !true.
Formula expand_derived(const Formula& f, std::span<const std::string> lifelines);

/// One entry of the subformula closure. Children are referenced by index
/// and always precede their parent.
struct SubFormula {
  Formula formula;
  std::optional<std::size_t> lhs;
  std::optional<std::size_t> rhs;
};

/// A runtime guard set together with its subformula closure.
struct GuardSet {
  std::vector<Formula> declared;   // as written, possibly with derived operators
  std::vector<Formula> formulas;   // core-only
  std::vector<std::size_t> roots;  // roots[i] = index of formulas[i] in sub
  std::vector<SubFormula> sub;     // children before parents, no duplicates
  std::vector<std::string> cross_vars;  // variables read through At[B].x, sorted
  std::vector<std::string> local_vars;  // variables read unqualified, sorted

  std::optional<std::size_t> index_of(const Formula& f) const;
  std::optional<std::size_t> cross_var_index(std::string_view name) const;
  std::optional<std::size_t> guard_index(const Formula& f) const;

  /// Keyed by canonical concrete syntax, which identifies structure.
  std::map<std::string, std::size_t, std::less<>> by_key;
};

/// Builds the closure of core-only formulas. Throws std::invalid_argument
/// on derived operators.
GuardSet close_guards(std::vector<Formula> formulas);

/// expand_derived on each formula, then close_guards; keeps the originals
/// in `declared`.
GuardSet make_guard_set(std::vector<Formula> declared, std::span<const std::string> lifelines);

}  // namespace cpl
