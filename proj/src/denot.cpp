#include "cpl/denot.hpp"

#include <stdexcept>

namespace cpl {

std::optional<Value> eval_term(const Msc& m, EventId e, const Term& t) {
  if (auto v = std::get_if<LocalVar>(&t)) return lookup(m.valuation(e), v->name);
  const auto& field = std::get<AtField>(t);
  auto last = m.last_visible(e, m.lifeline_index(field.lifeline));
  if (!last) return std::nullopt;
  return lookup(m.valuation(*last), field.name);
}

std::optional<Value> eval_operand(const Msc& m, EventId e, const Operand& o) {
  if (auto v = std::get_if<LocalVar>(&o)) return eval_term(m, e, *v);
  if (auto t = std::get_if<AtField>(&o)) return eval_term(m, e, *t);
  return std::get<Value>(o);
}

bool eval_atom(const Msc& m, EventId e, const Atom& a) {
  return compare(a.op, eval_operand(m, e, a.left), eval_operand(m, e, a.right));
}

SatTable::SatTable(const Msc& m, const GuardSet& g) : width_(g.sub.size()), bits_(m.size() * g.sub.size()) {
  std::vector<std::optional<LifelineIndex>> target(width_);
  for (std::size_t i = 0; i < width_; ++i) {
    const auto& f = g.sub[i].formula;
    if (f->op == Op::at) target[i] = m.lifeline_index(f->lifeline);
    if (f->op == Op::atom)
      for (const Operand* side : {&f->atom->left, &f->atom->right})
        if (auto t = std::get_if<AtField>(side)) m.lifeline_index(t->lifeline);
  }
  for (EventId e : m.topological_order()) {
    const auto prev = m.last_loc(e);
    for (std::size_t i = 0; i < width_; ++i) {
      const auto& s = g.sub[i];
      bool v = false;
      switch (s.formula->op) {
        case Op::atom: v = eval_atom(m, e, *s.formula->atom); break;
        case Op::truth: v = true; break;
        case Op::negation: v = !at(e, *s.lhs); break;
        case Op::conj: v = at(e, *s.lhs) && at(e, *s.rhs); break;
        case Op::disj: v = at(e, *s.lhs) || at(e, *s.rhs); break;
        case Op::yesterday: v = prev && at(*prev, *s.lhs); break;
        case Op::at: {
          auto last = m.last_visible(e, *target[i]);
          v = last && at(*last, *s.lhs);
          break;
        }
        case Op::since:
          v = at(e, *s.rhs) || (at(e, *s.lhs) && prev && at(*prev, i));
          break;
        default:
          throw std::logic_error("SatTable: derived operator in closure");
      }
      bits_[e * width_ + i] = v;
    }
  }
}

bool sat(const Msc& m, EventId e, const Formula& f) {
  if (e >= m.size()) throw LookupError("no such event: " + std::to_string(e));
  GuardSet g = close_guards({expand_derived(f, m.lifelines())});
  return SatTable(m, g).at(e, g.roots.front());
}

}  // namespace cpl
