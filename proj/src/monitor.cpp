#include "cpl/monitor.hpp"

#include <algorithm>
#include <sstream>

#include "cpl/trace_io.hpp"

namespace cpl {

void VectorClock::merge(const VectorClock& other) {
  if (other.size() != size()) throw MonitorError("vector clock size mismatch");
  for (std::size_t b = 0; b < c_.size(); ++b) c_[b] = std::max(c_[b], other.c_[b]);
}

MonitorContext::MonitorContext(std::vector<std::string> lifelines, GuardSet guards)
    : lifelines_(std::move(lifelines)), guards_(std::move(guards)) {
  const std::size_t n = guards_.sub.size();
  at_target_.assign(n, 0);
  slots_.resize(2 * n);
  auto resolve = [&](std::string_view name) {
    auto b = find_lifeline(name);
    if (!b) throw LookupError("guard refers to unknown lifeline: " + std::string(name));
    return *b;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = guards_.sub[i].formula;
    if (f->op == Op::at) at_target_[i] = resolve(f->lifeline);
    if (f->op != Op::atom) continue;
    const Operand* sides[] = {&f->atom->left, &f->atom->right};
    for (std::size_t k = 0; k < 2; ++k) {
      Slot& slot = slots_[2 * i + k];
      if (auto v = std::get_if<LocalVar>(sides[k])) {
        slot.kind = Slot::Kind::local;
        slot.name = v->name;
      } else if (auto t = std::get_if<AtField>(sides[k])) {
        slot.kind = Slot::Kind::field;
        slot.lifeline = resolve(t->lifeline);
        slot.var = *guards_.cross_var_index(t->name);
        slot.name = t->name;
      } else {
        slot.kind = Slot::Kind::literal;
        slot.literal = std::get<Value>(*sides[k]);
      }
    }
  }
}

std::optional<LifelineIndex> MonitorContext::find_lifeline(std::string_view name) const {
  auto it = std::find(lifelines_.begin(), lifelines_.end(), name);
  if (it == lifelines_.end()) return std::nullopt;
  return static_cast<LifelineIndex>(it - lifelines_.begin());
}

std::string_view to_string(Mutation m) {
  switch (m) {
    case Mutation::none: return "none";
    case Mutation::swap_merge_order: return "swap-merge-order";
    case Mutation::strict_at: return "strict-at";
    case Mutation::old_copy_timing: return "old-copy-timing";
  }
  return "?";
}

std::optional<Mutation> parse_mutation(std::string_view text) {
  for (auto m : {Mutation::none, Mutation::swap_merge_order, Mutation::strict_at, Mutation::old_copy_timing})
    if (to_string(m) == text) return m;
  return std::nullopt;
}

MonitorState init_monitor(LifelineIndex me, std::shared_ptr<const MonitorContext> ctx, Mutation mutation) {
  if (!ctx) throw MonitorError("init_monitor: no context");
  if (me >= ctx->lifeline_count()) throw LookupError("init_monitor: no such lifeline");
  MonitorState s;
  s.me = me;
  s.vc = VectorClock(ctx->lifeline_count());
  s.view.assign(ctx->lifeline_count() * ctx->sub_count(), std::nullopt);
  s.var.assign(ctx->lifeline_count() * ctx->var_count(), std::nullopt);
  s.old.assign(ctx->sub_count(), false);
  s.val.assign(ctx->sub_count(), false);
  s.last_vals.assign(ctx->guards().roots.size(), false);
  s.mutation = mutation;
  s.ctx = std::move(ctx);
  return s;
}

namespace {

void check_payload_shape(const MonitorState& s, const MessagePayload& p) {
  const auto& ctx = *s.ctx;
  if (p.vc.size() != ctx.lifeline_count() || p.view.size() != ctx.lifeline_count() * ctx.sub_count() ||
      p.var.size() != ctx.lifeline_count() * ctx.var_count())
    throw MonitorError("incoming payload does not match the run's lifelines and guard set");
}

void copy_rows(MonitorState& s, const MessagePayload& mu, LifelineIndex b) {
  const auto& ctx = *s.ctx;
  std::copy_n(mu.view.begin() + static_cast<std::ptrdiff_t>(b * ctx.sub_count()), ctx.sub_count(),
              s.view.begin() + static_cast<std::ptrdiff_t>(b * ctx.sub_count()));
  std::copy_n(mu.var.begin() + static_cast<std::ptrdiff_t>(b * ctx.var_count()), ctx.var_count(),
              s.var.begin() + static_cast<std::ptrdiff_t>(b * ctx.var_count()));
}

// Value of sub[psi] at the previous local event, as the evaluation sees it.
bool previous(const MonitorState& s, std::size_t psi) {
  if (s.vc[s.me] <= 1) return false;
  if (s.mutation == Mutation::old_copy_timing) return s.view_at(s.me, psi).value_or(false);
  return s.old[psi];
}

std::optional<Value> read(const MonitorState& s, const MonitorContext::Slot& slot) {
  switch (slot.kind) {
    case MonitorContext::Slot::Kind::local: return lookup(s.store, slot.name);
    case MonitorContext::Slot::Kind::field: return s.var_at(slot.lifeline, slot.var);
    case MonitorContext::Slot::Kind::literal: return slot.literal;
  }
  return std::nullopt;
}

}  // namespace

void begin_event(MonitorState& s, const EventDescriptor& d) {
  const auto& ctx = *s.ctx;
  if (d.tag == EventTag::send) {
    if (!d.receiver) throw MonitorError("send event without receiver");
    if (*d.receiver == s.me) throw MonitorError("send to self");
    if (*d.receiver >= ctx.lifeline_count()) throw LookupError("send to unknown lifeline");
  }
  if (d.guard_index && *d.guard_index >= ctx.guards().roots.size()) throw MonitorError("guard index out of range");
  if (d.tag == EventTag::recv) {
    if (!d.incoming) throw MonitorError("recv event without incoming payload");
    const MessagePayload& mu = *d.incoming;
    check_payload_shape(s, mu);
    if (s.mutation == Mutation::swap_merge_order) s.vc.merge(mu.vc);
    for (LifelineIndex b = 0; b < ctx.lifeline_count(); ++b)
      if (mu.vc[b] > s.vc[b]) copy_rows(s, mu, b);
    s.vc.merge(mu.vc);
  }

  for (std::size_t psi = 0; psi < ctx.sub_count(); ++psi) s.old[psi] = s.view_at(s.me, psi).value_or(false);

  ++s.vc[s.me];
  s.store = d.store_after;
  for (std::size_t x = 0; x < ctx.var_count(); ++x)
    s.var_at(s.me, x) = lookup(s.store, ctx.guards().cross_vars[x]);
}

bool eval_local(const MonitorState& s, std::size_t psi) {
  const auto& ctx = *s.ctx;
  if (psi >= ctx.sub_count()) throw MonitorError("eval_local: formula not in the guard set");
  const auto& entry = ctx.guards().sub[psi];
  switch (entry.formula->op) {
    case Op::atom:
      return compare(entry.formula->atom->op, read(s, ctx.left(psi)), read(s, ctx.right(psi)));
    case Op::truth:
      return true;
    case Op::negation:
      return !eval_local(s, *entry.lhs);
    case Op::conj:
      return eval_local(s, *entry.lhs) && eval_local(s, *entry.rhs);
    case Op::disj:
      return eval_local(s, *entry.lhs) || eval_local(s, *entry.rhs);
    case Op::yesterday:
      return previous(s, *entry.lhs);
    case Op::at: {
      const LifelineIndex b = ctx.at_target(psi);
      if (b == s.me) {
        if (s.mutation == Mutation::strict_at) return previous(s, *entry.lhs);
        return eval_local(s, *entry.lhs);
      }
      if (s.vc[b] == 0) return false;
      return s.view_at(b, *entry.lhs).value_or(false);
    }
    case Op::since:
      return eval_local(s, *entry.rhs) || (eval_local(s, *entry.lhs) && previous(s, psi));
    default:
      throw MonitorError("eval_local: derived operator in guard set");
  }
}

std::optional<MessagePayload> finish_event(MonitorState& s, const EventDescriptor& d) {
  const auto& ctx = *s.ctx;
  for (std::size_t psi = 0; psi < ctx.sub_count(); ++psi) {
    s.val[psi] = eval_local(s, psi);
    if (s.mutation == Mutation::old_copy_timing) s.view_at(s.me, psi) = s.val[psi];
  }
  for (std::size_t psi = 0; psi < ctx.sub_count(); ++psi) s.view_at(s.me, psi) = s.val[psi];
  const auto& roots = ctx.guards().roots;
  for (std::size_t i = 0; i < roots.size(); ++i) s.last_vals[i] = s.val[roots[i]];

  if (d.tag != EventTag::send) return std::nullopt;
  return MessagePayload{s.vc, s.view, s.var, d.payload};
}

std::optional<MessagePayload> on_event(MonitorState& s, const EventDescriptor& d) {
  begin_event(s, d);
  return finish_event(s, d);
}

std::optional<bool> guard_verdict(const MonitorState& s, const EventDescriptor& d) {
  if (!d.guard_index) return std::nullopt;
  if (*d.guard_index >= s.last_vals.size()) throw MonitorError("guard index out of range");
  return s.last_vals[*d.guard_index];
}

// ---------------------------------------------------------------------------

namespace {

std::size_t visible_count(const Msc& m, EventId e, LifelineIndex b) {
  std::size_t n = 0;
  for (EventId f : m.events_on(b))
    if (m.causal_leq(f, e)) ++n;
  return n;
}

std::string describe(const Msc& m, EventId e) {
  return "event " + std::to_string(m.label(e));
}

struct RowCheck {
  bool presence = true;
  bool vars = true;
  bool views = true;
};

// Checks the entries for lifeline b against e^b_k, or their absence when k = 0.
RowCheck check_row(const MonitorState& s, const Msc& m, const SatTable& truth, LifelineIndex b,
                   std::vector<std::string>& problems, std::string_view where) {
  const auto& ctx = *s.ctx;
  RowCheck r;
  const std::uint64_t k = s.vc[b];
  const std::string who = std::string(where) + ", lifeline " + ctx.lifelines()[b];
  if (k == 0) {
    for (std::size_t psi = 0; psi < ctx.sub_count(); ++psi)
      if (s.view_at(b, psi)) r.presence = false;
    for (std::size_t x = 0; x < ctx.var_count(); ++x)
      if (s.var_at(b, x)) r.presence = false;
    if (!r.presence) problems.push_back(who + ": entries present while vc = 0");
    return r;
  }
  auto eb = m.nth_event(b, k);
  if (!eb) {
    problems.push_back(who + ": vc = " + std::to_string(k) + " exceeds the lifeline length");
    r.vars = r.views = false;
    return r;
  }
  for (std::size_t x = 0; x < ctx.var_count(); ++x) {
    if (s.var_at(b, x) != lookup(m.valuation(*eb), ctx.guards().cross_vars[x])) {
      r.vars = false;
      problems.push_back(who + ": var(" + ctx.guards().cross_vars[x] + ") differs from " + describe(m, *eb));
    }
  }
  for (std::size_t psi = 0; psi < ctx.sub_count(); ++psi) {
    const auto& v = s.view_at(b, psi);
    if (!v || *v != truth.at(*eb, psi)) {
      r.views = false;
      problems.push_back(who + ": view(" + to_string(ctx.guards().sub[psi].formula) + ") " +
                         (v ? "differs from" : "missing for") + " " + describe(m, *eb));
    }
  }
  return r;
}

bool check_clock(const MonitorState& s, const Msc& m, EventId e, std::vector<std::string>& problems) {
  bool ok = s.vc.size() == m.lifeline_count();
  for (LifelineIndex b = 0; ok && b < m.lifeline_count(); ++b) {
    const auto expected = visible_count(m, e, b);
    if (s.vc[b] != expected) {
      ok = false;
      problems.push_back("vc(" + m.lifeline_name(b) + ") = " + std::to_string(s.vc[b]) + ", causal past has " +
                         std::to_string(expected));
    }
  }
  return ok;
}

}  // namespace

CoherenceReport check_coherence(const MonitorState& s, const Msc& m, EventId e, const SatTable& truth) {
  CoherenceReport r;
  const auto& ctx = *s.ctx;
  if (m.pid(e) != s.me) {
    r.clock = r.remote = r.local = r.previous = false;
    r.problems.push_back(describe(m, e) + " is not on the monitor's lifeline");
    return r;
  }
  const std::string where = "before " + describe(m, e);
  r.clock = check_clock(s, m, e, r.problems);
  if (!r.clock) {
    // Rows cannot be matched to events without a correct clock.
    r.remote = false;
  } else {
    for (LifelineIndex b = 0; b < ctx.lifeline_count(); ++b) {
      if (b == s.me) continue;
      auto row = check_row(s, m, truth, b, r.problems, where);
      r.remote = r.remote && row.presence && row.vars && row.views;
    }
  }
  const auto& nu = m.valuation(e);
  for (const auto& x : ctx.guards().local_vars) {
    if (lookup(s.store, x) != lookup(nu, x)) {
      r.local = false;
      r.problems.push_back(where + ": store(" + x + ") differs from the event valuation");
    }
  }
  for (std::size_t x = 0; x < ctx.var_count(); ++x) {
    const auto& name = ctx.guards().cross_vars[x];
    if (s.var_at(s.me, x) != lookup(nu, name)) {
      r.local = false;
      r.problems.push_back(where + ": own var(" + name + ") differs from the event valuation");
    }
  }
  const auto prev = m.last_loc(e);
  for (std::size_t psi = 0; psi < ctx.sub_count(); ++psi) {
    const bool expected = prev && truth.at(*prev, psi);
    if (s.old[psi] != expected) {
      r.previous = false;
      r.problems.push_back(where + ": old(" + to_string(ctx.guards().sub[psi].formula) + ") is stale");
    }
  }
  return r;
}

CoherenceReport check_coherence(const MonitorState& s, const Msc& m, EventId e) {
  return check_coherence(s, m, e, SatTable(m, s.ctx->guards()));
}

InvariantReport check_invariants(const MonitorState& s, const Msc& m, EventId e, const SatTable& truth) {
  InvariantReport r;
  const std::string where = "after " + describe(m, e);
  r.clock = check_clock(s, m, e, r.problems);
  if (!r.clock) {
    r.presence = r.vars = r.views = false;
    return r;
  }
  for (LifelineIndex b = 0; b < s.ctx->lifeline_count(); ++b) {
    auto row = check_row(s, m, truth, b, r.problems, where);
    r.presence = r.presence && row.presence;
    r.vars = r.vars && row.vars;
    r.views = r.views && row.views;
  }
  return r;
}

// ---------------------------------------------------------------------------

nlohmann::json payload_to_json(const MessagePayload& p, const MonitorContext& ctx) {
  nlohmann::json vc = nlohmann::json::object();
  for (LifelineIndex b = 0; b < ctx.lifeline_count(); ++b) vc[ctx.lifelines()[b]] = p.vc[b];
  nlohmann::json view = nlohmann::json::array();
  nlohmann::json var = nlohmann::json::array();
  for (LifelineIndex b = 0; b < ctx.lifeline_count(); ++b) {
    for (std::size_t psi = 0; psi < ctx.sub_count(); ++psi)
      if (const auto& v = p.view[b * ctx.sub_count() + psi]) view.push_back({ctx.lifelines()[b], psi, *v});
    for (std::size_t x = 0; x < ctx.var_count(); ++x)
      if (const auto& v = p.var[b * ctx.var_count() + x])
        var.push_back({ctx.lifelines()[b], ctx.guards().cross_vars[x], value_to_json(*v)});
  }
  return {{"vc", std::move(vc)}, {"view", std::move(view)}, {"var", std::move(var)}, {"payload", p.payload}};
}

MessagePayload payload_from_json(const nlohmann::json& j, const MonitorContext& ctx) {
  require_keys_within(j, {"vc", "view", "var", "payload"}, "payload");
  for (const char* key : {"vc", "view", "var", "payload"})
    if (!j.contains(key)) throw FormatError(std::string("payload needs '") + key + "'");
  auto lifeline = [&](const nlohmann::json& name) {
    if (!name.is_string()) throw FormatError("payload lifeline must be a string");
    auto b = ctx.find_lifeline(name.get<std::string>());
    if (!b) throw FormatError("payload names unknown lifeline '" + name.get<std::string>() + "'");
    return *b;
  };

  MessagePayload p;
  p.vc = VectorClock(ctx.lifeline_count());
  p.view.assign(ctx.lifeline_count() * ctx.sub_count(), std::nullopt);
  p.var.assign(ctx.lifeline_count() * ctx.var_count(), std::nullopt);

  const auto& vc = j.at("vc");
  if (!vc.is_object() || vc.size() != ctx.lifeline_count())
    throw FormatError("payload vc must map every lifeline to a count");
  for (const auto& [name, n] : vc.items()) {
    if (!n.is_number_unsigned() && !(n.is_number_integer() && n.get<std::int64_t>() >= 0))
      throw FormatError("vc components must be non-negative integers");
    p.vc[lifeline(nlohmann::json(name))] = n.get<std::uint64_t>();
  }
  const auto& view = j.at("view");
  if (!view.is_array()) throw FormatError("payload view must be an array");
  for (const auto& row : view) {
    if (!row.is_array() || row.size() != 3 || !row[1].is_number_unsigned() || !row[2].is_boolean())
      throw FormatError("view entries must be [lifeline, subIndex, bool]");
    const auto psi = row[1].get<std::size_t>();
    if (psi >= ctx.sub_count()) throw FormatError("view subIndex out of range");
    p.view[lifeline(row[0]) * ctx.sub_count() + psi] = row[2].get<bool>();
  }
  const auto& var = j.at("var");
  if (!var.is_array()) throw FormatError("payload var must be an array");
  for (const auto& row : var) {
    if (!row.is_array() || row.size() != 3 || !row[1].is_string())
      throw FormatError("var entries must be [lifeline, varName, value]");
    auto x = ctx.guards().cross_var_index(row[1].get<std::string>());
    if (!x) throw FormatError("var names unmonitored variable '" + row[1].get<std::string>() + "'");
    p.var[lifeline(row[0]) * ctx.var_count() + *x] = value_from_json(row[2]);
  }
  if (!j.at("payload").is_string()) throw FormatError("payload data must be a string");
  p.payload = j.at("payload").get<std::string>();
  return p;
}

}  // namespace cpl
