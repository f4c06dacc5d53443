#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cpl/formula.hpp"
#include "cpl/guards.hpp"
#include "cpl/msc.hpp"

namespace cpl {

/// Value of a term at event e; nullopt when undefined. Unknown lifelines
/// raise LookupError, which is distinct from semantic undefinedness.
std::optional<Value> eval_term(const Msc& m, EventId e, const Term& t);
std::optional<Value> eval_operand(const Msc& m, EventId e, const Operand& o);

bool eval_atom(const Msc& m, EventId e, const Atom& a);

/// Truth of every subformula of a guard set at every event of a chart.
///
/// Filled bottom-up: events in a linear extension, subformulas children
/// first, so every lookup (previous local event, latest visible event, or
/// a child at the same event) hits an entry that is already final.
class SatTable {
 public:
  SatTable(const Msc& m, const GuardSet& g);

  bool at(EventId e, std::size_t sub_index) const { return bits_[e * width_ + sub_index]; }
  std::size_t width() const { return width_; }

 private:
  std::size_t width_ = 0;
  std::vector<bool> bits_;
};

/// M, e |= f. Derived operators are expanded first.
bool sat(const Msc& m, EventId e, const Formula& f);

}  // namespace cpl
