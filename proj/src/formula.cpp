#include "cpl/formula.hpp"

#include <algorithm>

namespace cpl {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return "?";
}

std::string_view to_string(Op op) {
  switch (op) {
    case Op::atom: return "atom";
    case Op::at: return "at";
    case Op::yesterday: return "yesterday";
    case Op::since: return "since";
    case Op::conj: return "and";
    case Op::disj: return "or";
    case Op::negation: return "not";
    case Op::truth: return "true";
    case Op::past_at: return "past_at";
    case Op::past_any: return "past_any";
    case Op::seen: return "seen";
  }
  return "?";
}

bool compare(CompareOp op, const std::optional<Value>& lhs, const std::optional<Value>& rhs) {
  if (!lhs || !rhs || lhs->index() != rhs->index()) return false;
  switch (op) {
    case CompareOp::eq: return *lhs == *rhs;
    case CompareOp::ne: return *lhs != *rhs;
    default: break;
  }
  const auto* a = std::get_if<std::int64_t>(&*lhs);
  const auto* b = std::get_if<std::int64_t>(&*rhs);
  if (!a || !b) return false;
  switch (op) {
    case CompareOp::lt: return *a < *b;
    case CompareOp::le: return *a <= *b;
    case CompareOp::gt: return *a > *b;
    case CompareOp::ge: return *a >= *b;
    default: return false;
  }
}

namespace {

Formula node(Op op, std::string lifeline = {}, Formula lhs = nullptr, Formula rhs = nullptr) {
  return std::make_shared<const FormulaNode>(
      FormulaNode{op, std::move(lifeline), std::nullopt, std::move(lhs), std::move(rhs)});
}

}  // namespace

Formula make_atom(Atom a) {
  return std::make_shared<const FormulaNode>(
      FormulaNode{Op::atom, {}, std::move(a), nullptr, nullptr});
}

Formula make_atom(CompareOp op, Operand left, Operand right) {
  return make_atom(Atom{op, std::move(left), std::move(right)});
}

Formula at(std::string lifeline, Formula f) { return node(Op::at, std::move(lifeline), std::move(f)); }
Formula yesterday(Formula f) { return node(Op::yesterday, {}, std::move(f)); }
Formula since(Formula lhs, Formula rhs) { return node(Op::since, {}, std::move(lhs), std::move(rhs)); }
Formula conj(Formula lhs, Formula rhs) { return node(Op::conj, {}, std::move(lhs), std::move(rhs)); }
Formula disj(Formula lhs, Formula rhs) { return node(Op::disj, {}, std::move(lhs), std::move(rhs)); }
Formula negation(Formula f) { return node(Op::negation, {}, std::move(f)); }
Formula truth() { return node(Op::truth); }
Formula past_at(std::string lifeline, Formula f) {
  return node(Op::past_at, std::move(lifeline), std::move(f));
}
Formula past_any(Formula f) { return node(Op::past_any, {}, std::move(f)); }
Formula seen(std::string lifeline) { return node(Op::seen, std::move(lifeline)); }

bool equal(const Formula& a, const Formula& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->op == b->op && a->lifeline == b->lifeline && a->atom == b->atom &&
         equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
}

bool is_core(const Formula& f) {
  if (!f) return true;
  if (f->op == Op::past_at || f->op == Op::past_any || f->op == Op::seen) return false;
  return is_core(f->lhs) && is_core(f->rhs);
}

std::size_t node_count(const Formula& f) {
  return f ? 1 + node_count(f->lhs) + node_count(f->rhs) : 0;
}

std::size_t depth(const Formula& f) {
  if (!f || (!f->lhs && !f->rhs)) return 0;
  return 1 + std::max(depth(f->lhs), depth(f->rhs));
}

std::string to_string(const Operand& o) {
  if (auto v = std::get_if<LocalVar>(&o)) return "Here." + v->name;
  if (auto t = std::get_if<AtField>(&o)) return "At[" + t->lifeline + "]." + t->name;
  return to_literal(std::get<Value>(o));
}

std::string to_string(const Atom& a) {
  return to_string(a.left) + " " + std::string(to_string(a.op)) + " " + to_string(a.right);
}

std::string to_string(const Formula& f) {
  switch (f->op) {
    case Op::atom: return to_string(*f->atom);
    case Op::at: return "at(" + f->lifeline + ", " + to_string(f->lhs) + ")";
    case Op::yesterday: return "Y(" + to_string(f->lhs) + ")";
    case Op::since: return "(" + to_string(f->lhs) + " S " + to_string(f->rhs) + ")";
    case Op::conj: return "(" + to_string(f->lhs) + " && " + to_string(f->rhs) + ")";
    case Op::disj: return "(" + to_string(f->lhs) + " || " + to_string(f->rhs) + ")";
    case Op::negation: return "!" + to_string(f->lhs);
    case Op::truth: return "true";
    case Op::past_at: return "P[" + f->lifeline + "](" + to_string(f->lhs) + ")";
    case Op::past_any: return "P(" + to_string(f->lhs) + ")";
    case Op::seen: return "seen(" + f->lifeline + ")";
  }
  return "?";
}

}  // namespace cpl
