#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <thread>

#include "cpl/denot.hpp"
#include "cpl/rng.hpp"
#include "cpl/simulator.hpp"

namespace cpl {

using nlohmann::json;

DiffReport differential_check(const Msc& m, const GuardSet& g, const std::vector<EventId>& extension,
                              const DiffOptions& opt) {
  if (!m.is_linear_extension(extension)) throw std::invalid_argument("differential_check: not a linear extension");
  DiffReport report;
  report.values.assign(m.size(), {});
  const SatTable truth(m, g);
  auto ctx = std::make_shared<const MonitorContext>(m.lifelines(), g);
  std::vector<MonitorState> monitors;
  for (LifelineIndex b = 0; b < m.lifeline_count(); ++b) monitors.push_back(init_monitor(b, ctx, opt.mutation));
  std::vector<std::optional<MessagePayload>> sent(m.size());

  for (EventId e : extension) {
    auto& mon = monitors[m.pid(e)];
    EventDescriptor d;
    d.tag = m.tag(e);
    d.receiver = m.receiver(e);
    d.store_after = m.valuation(e);
    if (auto s = m.matching_send(e)) d.incoming = std::move(sent[*s]);

    begin_event(mon, d);
    if (auto c = check_coherence(mon, m, e, truth); !c.ok())
      report.coherence_failures.insert(report.coherence_failures.end(), c.problems.begin(), c.problems.end());
    auto out = finish_event(mon, d);
    if (out) sent[e] = std::move(out);

    ++report.events;
    for (std::size_t psi = 0; psi < g.sub.size(); ++psi) {
      ++report.evaluations;
      const bool expected = truth.at(e, psi);
      if (mon.val[psi] != expected)
        report.mismatches.push_back({m.label(e), psi, to_string(g.sub[psi].formula), mon.val[psi], expected});
    }
    report.values[e] = mon.val;
    if (auto inv = check_invariants(mon, m, e, truth); !inv.ok())
      report.invariant_failures.insert(report.invariant_failures.end(), inv.problems.begin(), inv.problems.end());
    if (opt.fail_fast && !report.ok()) break;
  }
  return report;
}

json mismatches_to_json(const std::vector<Mismatch>& ms) {
  json out = json::array();
  for (const auto& x : ms)
    out.push_back({{"event", x.event}, {"sub", x.sub}, {"formula", x.formula}, {"monitor", x.monitor}, {"oracle", x.oracle}});
  return out;
}

// ---------------------------------------------------------------------------

void FuzzParams::validate() const {
  if (lifelines < 1 || events_per_lifeline < 1 || variables < 1 || values < 1 || formulas < 1)
    throw std::invalid_argument("fuzz parameters: counts must be at least 1");
  if (!(message_probability >= 0.0 && message_probability <= 1.0))
    throw std::invalid_argument("fuzz parameters: message probability must lie in [0, 1]");
}

std::vector<std::string> generated_lifelines(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(i < 26 ? std::string(1, static_cast<char>('A' + i)) : "L" + std::to_string(i));
  return out;
}

namespace {

std::string var_name(std::size_t i) { return "x" + std::to_string(i); }

Value random_value(SplitMix64& rng, std::size_t alphabet) {
  const auto k = rng.below(10);
  const auto v = rng.below(alphabet);
  if (k < 5) return int_value(static_cast<std::int64_t>(v));
  if (k < 8) return str_value("v" + std::to_string(v));
  return bool_value(v % 2 == 0);
}

}  // namespace

Msc gen_random_msc(const FuzzParams& p) {
  p.validate();
  SplitMix64 rng(p.seed);
  const auto names = generated_lifelines(p.lifelines);
  std::vector<std::size_t> remaining(p.lifelines);
  for (auto& r : remaining) {
    r = 1 + rng.below(p.events_per_lifeline);
    if (p.lifelines > 1 && rng.below(8) == 0) r = 0;
  }
  std::vector<Valuation> store(p.lifelines);
  std::vector<std::vector<std::size_t>> in_transit(p.lifelines);  // indices of sends
  std::vector<std::optional<std::size_t>> last(p.lifelines);

  RawMsc raw;
  raw.lifelines = names;
  std::vector<std::pair<std::size_t, std::size_t>> succ, msgs;  // by generation index
  for (;;) {
    std::vector<std::size_t> live;
    for (std::size_t b = 0; b < p.lifelines; ++b)
      if (remaining[b] > 0) live.push_back(b);
    if (live.empty()) break;
    const std::size_t b = live[rng.below(live.size())];
    --remaining[b];

    RawEvent ev;
    ev.lifeline = names[b];
    const std::size_t idx = raw.events.size();
    if (!in_transit[b].empty() && rng.chance(0.5)) {
      // Any in-transit message may arrive next, so delivery is not FIFO.
      const auto k = static_cast<std::ptrdiff_t>(rng.below(in_transit[b].size()));
      msgs.emplace_back(in_transit[b][static_cast<std::size_t>(k)], idx);
      in_transit[b].erase(in_transit[b].begin() + k);
      ev.tag = EventTag::recv;
    } else if (p.lifelines > 1 && rng.chance(p.message_probability)) {
      auto to = rng.below(p.lifelines - 1);
      if (to >= b) ++to;
      ev.tag = EventTag::send;
      ev.receiver = names[to];
      in_transit[to].push_back(idx);
    } else {
      ev.tag = rng.below(4) == 0 ? EventTag::choice : EventTag::act;
    }
    if (ev.tag == EventTag::act || ev.tag == EventTag::recv) {
      for (std::size_t x = 0; x < p.variables; ++x) {
        if (rng.chance(0.4))
          store[b].insert_or_assign(var_name(x), random_value(rng, p.values));
        else if (rng.chance(0.05))
          store[b].erase(var_name(x));
      }
    }
    ev.vars = store[b];
    if (last[b]) succ.emplace_back(*last[b], idx);
    last[b] = idx;
    raw.events.push_back(std::move(ev));
  }

  // Shuffle labels and storage order so that neither follows causality.
  const std::size_t n = raw.events.size();
  std::vector<std::uint64_t> label(n);
  std::iota(label.begin(), label.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(label[i - 1], label[rng.below(i)]);
  for (std::size_t i = 0; i < n; ++i) raw.events[i].id = label[i];
  for (auto [a, b] : succ) raw.succ.emplace_back(label[a], label[b]);
  for (auto [a, b] : msgs) raw.messages.emplace_back(label[a], label[b]);
  for (std::size_t i = n; i > 1; --i) std::swap(raw.events[i - 1], raw.events[rng.below(i)]);
  return Msc::build(std::move(raw));
}

namespace {

struct FormulaGen {
  const FuzzParams& p;
  const std::vector<std::string>& lifelines;
  SplitMix64 rng;

  const std::string& lifeline() { return lifelines[rng.below(lifelines.size())]; }

  Operand term() {
    auto x = var_name(rng.below(p.variables));
    if (rng.chance(0.5)) return LocalVar{std::move(x)};
    return AtField{lifeline(), std::move(x)};
  }

  Formula atom() {
    static constexpr CompareOp ops[] = {CompareOp::eq, CompareOp::ne, CompareOp::lt,
                                        CompareOp::le, CompareOp::gt, CompareOp::ge};
    const CompareOp op = ops[rng.below(std::size(ops))];
    Operand lhs = term();
    Operand rhs = rng.chance(0.5) ? Operand{random_value(rng, p.values)} : term();
    if (rng.chance(0.2)) std::swap(lhs, rhs);
    return make_atom(op, std::move(lhs), std::move(rhs));
  }

  Formula gen(std::size_t depth) {
    if (depth == 0) return atom();
    switch (static_cast<Op>(rng.below(op_count))) {
      case Op::atom: return atom();
      case Op::truth: return truth();
      case Op::seen: return seen(lifeline());
      case Op::at: return at(lifeline(), gen(depth - 1));
      case Op::yesterday: return yesterday(gen(depth - 1));
      case Op::negation: return negation(gen(depth - 1));
      case Op::past_at: return past_at(lifeline(), gen(depth - 1));
      case Op::past_any: return past_any(gen(depth - 1));
      case Op::since: {
        auto lhs = gen(depth - 1);
        return since(lhs, gen(depth - 1));
      }
      case Op::conj: {
        auto lhs = gen(depth - 1);
        return conj(lhs, gen(depth - 1));
      }
      case Op::disj: {
        auto lhs = gen(depth - 1);
        return disj(lhs, gen(depth - 1));
      }
    }
    return atom();
  }
};

}  // namespace

GuardSet gen_random_formulas(const FuzzParams& p, const std::vector<std::string>& lifelines) {
  p.validate();
  if (lifelines.empty()) throw std::invalid_argument("gen_random_formulas: no lifelines");
  FormulaGen gen{p, lifelines, SplitMix64(p.seed)};
  std::vector<Formula> declared;
  for (std::size_t i = 0; i < p.formulas; ++i) declared.push_back(gen.gen(p.depth));
  return make_guard_set(std::move(declared), lifelines);
}

FuzzInstance make_fuzz_instance(const FuzzParams& params, std::size_t index) {
  params.validate();
  FuzzInstance inst;
  inst.seed = derive_seed(params.seed, index);
  SplitMix64 rng(inst.seed);
  FuzzParams p = params;
  p.lifelines = 1 + rng.below(params.lifelines);
  p.seed = derive_seed(inst.seed, 1);
  inst.msc = gen_random_msc(p);
  p.seed = derive_seed(inst.seed, 2);
  inst.guards = gen_random_formulas(p, inst.msc.lifelines());
  return inst;
}

namespace {

struct InstanceResult {
  FuzzSummary part;
  bool failed = false;
};

InstanceResult check_instance(const FuzzConfig& cfg, std::size_t index) {
  InstanceResult r;
  const auto inst = make_fuzz_instance(cfg.params, index);
  r.part.instances = 1;
  r.part.formulas = inst.guards.formulas.size();
  for (std::size_t j = 0; j < cfg.extensions; ++j) {
    const auto ext = sample_linear_extension(inst.msc, derive_seed(inst.seed, 16 + j));
    auto rep = differential_check(inst.msc, inst.guards, ext, {cfg.mutation, !cfg.keep_going});
    ++r.part.runs;
    r.part.events += rep.events;
    r.part.evaluations += rep.evaluations;
    r.part.mismatches += rep.mismatches.size();
    r.part.coherence_failures += rep.coherence_failures.size();
    r.part.invariant_failures += rep.invariant_failures.size();
    if (!rep.ok()) {
      r.failed = true;
      FuzzFailure f{index, j, inst.seed, std::move(rep.mismatches), {}};
      f.problems = std::move(rep.coherence_failures);
      f.problems.insert(f.problems.end(), rep.invariant_failures.begin(), rep.invariant_failures.end());
      r.part.failures.push_back(std::move(f));
      if (!cfg.keep_going) break;
    }
  }
  return r;
}

}  // namespace

FuzzSummary run_fuzz(const FuzzConfig& cfg) {
  cfg.params.validate();
  std::vector<InstanceResult> results(cfg.seeds);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_failure{std::numeric_limits<std::size_t>::max()};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.seeds) return;
      if (!cfg.keep_going && i > first_failure.load()) continue;
      results[i] = check_instance(cfg, i);
      if (results[i].failed && !cfg.keep_going) {
        auto cur = first_failure.load();
        while (i < cur && !first_failure.compare_exchange_weak(cur, i)) {
        }
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, cfg.seeds));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  FuzzSummary total;
  for (std::size_t i = 0; i < cfg.seeds; ++i) {
    if (!cfg.keep_going && i > first_failure.load()) break;
    auto& part = results[i].part;
    total.instances += part.instances;
    total.runs += part.runs;
    total.events += part.events;
    total.formulas += part.formulas;
    total.evaluations += part.evaluations;
    total.mismatches += part.mismatches;
    total.coherence_failures += part.coherence_failures;
    total.invariant_failures += part.invariant_failures;
    for (auto& f : part.failures) total.failures.push_back(std::move(f));
  }
  return total;
}

json fuzz_summary_to_json(const FuzzSummary& s) {
  json failures = json::array();
  for (const auto& f : s.failures)
    failures.push_back({{"instance", f.instance},
                        {"extension", f.extension},
                        {"instance_seed", f.instance_seed},
                        {"mismatches", mismatches_to_json(f.mismatches)},
                        {"problems", f.problems}});
  return {{"instances", s.instances},
          {"runs", s.runs},
          {"events", s.events},
          {"formulas", s.formulas},
          {"evaluations", s.evaluations},
          {"mismatches", s.mismatches},
          {"coherence_failures", s.coherence_failures},
          {"invariant_failures", s.invariant_failures},
          {"ok", s.ok()},
          {"failures", std::move(failures)}};
}

}  // namespace cpl
