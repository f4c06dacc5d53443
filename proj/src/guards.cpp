#include "cpl/guards.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace cpl {

Formula expand_derived(const Formula& f, std::span<const std::string> lifelines) {
  switch (f->op) {
    case Op::atom:
    case Op::truth:
      return f;
    case Op::at:
      return at(f->lifeline, expand_derived(f->lhs, lifelines));
    case Op::yesterday:
      return yesterday(expand_derived(f->lhs, lifelines));
    case Op::negation:
      return negation(expand_derived(f->lhs, lifelines));
    case Op::since:
      return since(expand_derived(f->lhs, lifelines), expand_derived(f->rhs, lifelines));
    case Op::conj:
      return conj(expand_derived(f->lhs, lifelines), expand_derived(f->rhs, lifelines));
    case Op::disj:
      return disj(expand_derived(f->lhs, lifelines), expand_derived(f->rhs, lifelines));
    case Op::past_at:
      return at(f->lifeline, since(truth(), expand_derived(f->lhs, lifelines)));
    case Op::seen:
      return at(f->lifeline, truth());
    case Op::past_any: {
      if (lifelines.empty()) return negation(truth());
      Formula inner = since(truth(), expand_derived(f->lhs, lifelines));
      Formula out = at(lifelines.front(), inner);
      for (std::size_t i = 1; i < lifelines.size(); ++i) out = disj(out, at(lifelines[i], inner));
      return out;
    }
  }
  throw std::logic_error("expand_derived: unknown operator");
}

std::optional<std::size_t> GuardSet::index_of(const Formula& f) const {
  auto it = by_key.find(to_string(f));
  if (it == by_key.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> GuardSet::cross_var_index(std::string_view name) const {
  auto it = std::lower_bound(cross_vars.begin(), cross_vars.end(), name);
  if (it == cross_vars.end() || *it != name) return std::nullopt;
  return static_cast<std::size_t>(it - cross_vars.begin());
}

std::optional<std::size_t> GuardSet::guard_index(const Formula& f) const {
  for (std::size_t i = 0; i < formulas.size(); ++i)
    if (equal(formulas[i], f) || (i < declared.size() && equal(declared[i], f))) return i;
  return std::nullopt;
}

namespace {

struct Closer {
  GuardSet& g;
  std::set<std::string> cross, local;

  std::size_t visit(const Formula& f) {
    if (!is_core(f)) throw std::invalid_argument("close_guards: derived operator in " + to_string(f));
    std::optional<std::size_t> l, r;
    if (f->lhs) l = visit(f->lhs);
    if (f->rhs) r = visit(f->rhs);
    auto key = to_string(f);
    if (auto it = g.by_key.find(key); it != g.by_key.end()) return it->second;
    if (f->op == Op::atom) {
      for (const Operand* side : {&f->atom->left, &f->atom->right}) {
        if (auto v = std::get_if<LocalVar>(side)) local.insert(v->name);
        if (auto t = std::get_if<AtField>(side)) cross.insert(t->name);
      }
    }
    g.sub.push_back({f, l, r});
    g.by_key.emplace(std::move(key), g.sub.size() - 1);
    return g.sub.size() - 1;
  }
};

}  // namespace

GuardSet close_guards(std::vector<Formula> formulas) {
  GuardSet g;
  Closer c{g, {}, {}};
  for (const auto& f : formulas) g.roots.push_back(c.visit(f));
  g.formulas = std::move(formulas);
  g.declared = g.formulas;
  g.cross_vars.assign(c.cross.begin(), c.cross.end());
  g.local_vars.assign(c.local.begin(), c.local.end());
  return g;
}

GuardSet make_guard_set(std::vector<Formula> declared, std::span<const std::string> lifelines) {
  std::vector<Formula> core;
  core.reserve(declared.size());
  for (const auto& f : declared) core.push_back(expand_derived(f, lifelines));
  GuardSet g = close_guards(std::move(core));
  g.declared = std::move(declared);
  return g;
}

}  // namespace cpl
