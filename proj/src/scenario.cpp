#include <algorithm>
#include <exception>
#include <future>
#include <thread>

#include "cpl/parser.hpp"
#include "cpl/rng.hpp"
#include "cpl/simulator.hpp"
#include "cpl/trace_io.hpp"

namespace cpl {

using nlohmann::json;

namespace {

std::uint64_t label_field(const json& j, const char* key, std::string_view where) {
  if (!j.contains(key)) throw FormatError(std::string(where) + " needs '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw FormatError(std::string(where) + ": '" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::map<std::uint64_t, std::string> guards_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("guards must be an array");
  std::map<std::uint64_t, std::string> out;
  for (const auto& g : j) {
    require_keys_within(g, {"choice_event_id", "guard"}, "guard entry");
    auto id = label_field(g, "choice_event_id", "guard entry");
    if (!g.contains("guard") || !g.at("guard").is_string()) throw FormatError("guard entry needs a 'guard' string");
    if (!out.emplace(id, g.at("guard").get<std::string>()).second)
      throw FormatError("several guards for choice event " + std::to_string(id));
  }
  return out;
}

json guards_to_json(const std::map<std::uint64_t, std::string>& guards) {
  json out = json::array();
  for (const auto& [id, text] : guards) out.push_back({{"choice_event_id", id}, {"guard", text}});
  return out;
}

Fragment fragment_from_json(const json& j) {
  require_keys_within(j, {"events", "messages", "guards"}, "fragment");
  json as_trace = {{"lifelines", json::array()}, {"events", j.value("events", json::array())}};
  if (j.contains("messages")) as_trace["messages"] = j.at("messages");
  RawMsc part = trace_from_json(as_trace);
  Fragment f;
  f.events = std::move(part.events);
  f.messages = std::move(part.messages);
  if (j.contains("guards")) f.guards = guards_from_json(j.at("guards"));
  return f;
}

json fragment_to_json(const Fragment& f) {
  RawMsc part;
  part.events = f.events;
  part.messages = f.messages;
  json t = trace_to_json(part);
  json out = {{"events", t.at("events")}, {"messages", t.at("messages")}};
  if (!f.guards.empty()) out["guards"] = guards_to_json(f.guards);
  return out;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  Scenario sc;
  sc.msc = trace_from_json(j, {"guards", "branches"});
  if (j.contains("guards")) sc.guards = guards_from_json(j.at("guards"));
  if (j.contains("branches")) {
    const auto& bs = j.at("branches");
    if (!bs.is_array()) throw FormatError("branches must be an array");
    for (const auto& b : bs) {
      require_keys_within(b, {"choice_event_id", "then", "else"}, "branch entry");
      auto id = label_field(b, "choice_event_id", "branch entry");
      if (!b.contains("then") || !b.contains("else")) throw FormatError("branch entry needs 'then' and 'else'");
      Branches br{fragment_from_json(b.at("then")), fragment_from_json(b.at("else"))};
      if (!sc.branches.emplace(id, std::move(br)).second)
        throw FormatError("several branch entries for choice event " + std::to_string(id));
    }
  }
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json out = trace_to_json(sc.msc);
  out["guards"] = guards_to_json(sc.guards);
  if (!sc.branches.empty()) {
    json bs = json::array();
    for (const auto& [id, b] : sc.branches)
      bs.push_back({{"choice_event_id", id}, {"then", fragment_to_json(b.then_branch)}, {"else", fragment_to_json(b.else_branch)}});
    out["branches"] = std::move(bs);
  }
  return out;
}

Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_json(read_json_file(path)); }

GuardSet scenario_guard_set(const Scenario& sc) {
  std::vector<Formula> declared;
  auto add = [&](const std::string& text) {
    Formula f = parse_guard(text, sc.msc.lifelines);
    for (const auto& d : declared)
      if (equal(d, f)) return;
    declared.push_back(std::move(f));
  };
  for (const auto& [id, text] : sc.guards) add(text);
  for (const auto& [id, b] : sc.branches) {
    for (const auto& [cid, text] : b.then_branch.guards) add(text);
    for (const auto& [cid, text] : b.else_branch.guards) add(text);
  }
  return make_guard_set(std::move(declared), sc.msc.lifelines);
}

json run_log_to_json(const RunLog& log) {
  json events = json::array();
  for (const auto& r : log.records) {
    json e = {{"event", r.event}, {"lifeline", r.lifeline}, {"kind", std::string(to_string(r.tag))}};
    if (r.verdict) e["verdict"] = *r.verdict;
    if (r.payload_bytes) e["payload_bytes"] = *r.payload_bytes;
    events.push_back(std::move(e));
  }
  json monitors = json::array();
  for (const auto& m : log.monitors)
    monitors.push_back({{"lifeline", m.lifeline},
                        {"vc", m.vc},
                        {"store", valuation_to_json(m.store)},
                        {"last_vals", m.last_vals}});
  return {{"seed", log.seed},
          {"order", log.order},
          {"events", std::move(events)},
          {"monitors", std::move(monitors)},
          {"executed", trace_to_json(log.executed)}};
}

// ---------------------------------------------------------------------------

namespace {

bool is_ready(const Msc& m, const std::vector<bool>& done, EventId e) {
  if (done[e]) return false;
  if (auto p = m.last_loc(e); p && !done[*p]) return false;
  if (auto s = m.matching_send(e); s && !done[*s]) return false;
  return true;
}

class Run {
 public:
  Run(const Scenario& sc, const GuardSet& g, std::uint64_t seed, const RunOptions& opt)
      : sc_(sc), raw_(sc.msc), msc_(Msc::build(sc.msc)), opt_(opt) {
    ctx_ = std::make_shared<const MonitorContext>(msc_.lifelines(), g);
    log_.seed = seed;
    add_guards(sc.guards);
    for (const auto& [id, br] : sc.branches) {
      auto e = msc_.find_event(id);
      if (!e || !guard_of_.count(id))
        throw ScenarioError("branches on event " + std::to_string(id) + ", which is not a guarded choice event");
      if (msc_.local_successor(*e))
        throw ScenarioError("branching choice event " + std::to_string(id) + " must be last on its lifeline");
    }
    for (LifelineIndex b = 0; b < msc_.lifeline_count(); ++b) monitors_.push_back(init_monitor(b, ctx_, opt.mutation));
  }

  RunLog sequential(std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<bool> done(msc_.size(), false);
    for (;;) {
      std::vector<EventId> ready;
      for (EventId e = 0; e < msc_.size(); ++e)
        if (is_ready(msc_, done, e)) ready.push_back(e);
      if (ready.empty()) break;
      const EventId e = ready[rng.below(ready.size())];
      done[e] = true;
      auto rec = process(monitors_[msc_.pid(e)], e, payload_for(e));
      if (rec.verdict) {
        if (auto it = sc_.branches.find(rec.event); it != sc_.branches.end()) {
          append(msc_.pid(e), *rec.verdict ? it->second.then_branch : it->second.else_branch);
          done.resize(msc_.size(), false);
        }
      }
      log_.order.push_back(rec.event);
      log_.records.push_back(std::move(rec));
    }
    return finish();
  }

  RunLog concurrent(std::uint64_t seed) {
    if (!sc_.branches.empty()) throw ScenarioError("concurrent mode does not support branches");
    const auto order = sample_linear_extension(msc_, seed);
    std::vector<std::promise<MessagePayload>> promises(msc_.size());
    std::vector<std::shared_future<MessagePayload>> futures;
    for (auto& p : promises) futures.push_back(p.get_future().share());
    std::vector<EventRecord> records(msc_.size());
    std::vector<std::exception_ptr> errors(msc_.lifeline_count());
    std::vector<std::thread> threads;
    for (LifelineIndex b = 0; b < msc_.lifeline_count(); ++b) {
      threads.emplace_back([&, b] {
        const auto chain = msc_.events_on(b);
        std::size_t i = 0;
        try {
          for (; i < chain.size(); ++i) {
            const EventId e = chain[i];
            std::optional<MessagePayload> in;
            if (auto s = msc_.matching_send(e)) in = futures[*s].get();
            std::optional<MessagePayload> out;
            records[e] = process(monitors_[b], e, std::move(in), &out);
            if (out) promises[e].set_value(std::move(*out));
          }
        } catch (...) {
          errors[b] = std::current_exception();
          for (; i < chain.size(); ++i)
            if (msc_.tag(chain[i]) == EventTag::send) promises[chain[i]].set_exception(errors[b]);
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
    for (EventId e : order) {
      log_.order.push_back(msc_.label(e));
      log_.records.push_back(records[e]);
    }
    return finish();
  }

 private:
  void add_guards(const std::map<std::uint64_t, std::string>& guards) {
    for (const auto& [id, text] : guards) {
      auto e = msc_.find_event(id);
      if (!e || msc_.tag(*e) != EventTag::choice)
        throw ScenarioError("guard attached to event " + std::to_string(id) + ", which is not a choice event");
      auto idx = ctx_->guards().guard_index(parse_guard(text, msc_.lifelines()));
      if (!idx) throw ScenarioError("guard of event " + std::to_string(id) + " is not in the guard set");
      guard_of_[id] = *idx;
    }
  }

  std::optional<MessagePayload> payload_for(EventId e) {
    auto s = msc_.matching_send(e);
    if (!s) return std::nullopt;
    auto it = in_flight_.find(*s);
    if (it == in_flight_.end()) return std::nullopt;
    auto p = std::move(it->second);
    in_flight_.erase(it);
    return p;
  }

  EventRecord process(MonitorState& mon, EventId e, std::optional<MessagePayload> incoming,
                      std::optional<MessagePayload>* emitted = nullptr) {
    EventDescriptor d;
    d.tag = msc_.tag(e);
    d.receiver = msc_.receiver(e);
    d.store_after = msc_.valuation(e);
    d.incoming = std::move(incoming);
    const auto label = msc_.label(e);
    if (auto it = guard_of_.find(label); it != guard_of_.end()) d.guard_index = it->second;

    auto out = on_event(mon, d);
    EventRecord rec{label, msc_.lifeline_name(mon.me), d.tag, guard_verdict(mon, d), std::nullopt};
    if (out) {
      json wire = payload_to_json(*out, *ctx_);
      rec.payload_bytes = wire.dump().size();
      MessagePayload p = opt_.wire_payloads ? payload_from_json(wire, *ctx_) : std::move(*out);
      if (emitted)
        *emitted = std::move(p);
      else
        in_flight_.emplace(e, std::move(p));
    }
    return rec;
  }

  void append(LifelineIndex owner, const Fragment& frag) {
    const auto& owner_name = msc_.lifeline_name(owner);
    for (const auto& ev : frag.events) {
      if (ev.lifeline == owner_name) continue;
      bool from_owner = ev.tag == EventTag::recv && std::any_of(frag.messages.begin(), frag.messages.end(), [&](const auto& m) {
        if (m.second != ev.id) return false;
        auto s = std::find_if(frag.events.begin(), frag.events.end(), [&](const RawEvent& x) { return x.id == m.first; });
        return s != frag.events.end() && s->lifeline == owner_name;
      });
      if (!from_owner)
        throw ScenarioError("continuation event " + std::to_string(ev.id) +
                            " is neither on the choice owner nor a receive of its message");
    }
    std::map<std::string, std::optional<std::uint64_t>> last;
    for (LifelineIndex b = 0; b < msc_.lifeline_count(); ++b) {
      auto chain = msc_.events_on(b);
      last[msc_.lifeline_name(b)] = chain.empty() ? std::nullopt : std::optional(msc_.label(chain.back()));
    }
    for (const auto& ev : frag.events) {
      raw_.events.push_back(ev);
      auto& tail = last[ev.lifeline];
      if (tail) raw_.succ.emplace_back(*tail, ev.id);
      tail = ev.id;
    }
    raw_.messages.insert(raw_.messages.end(), frag.messages.begin(), frag.messages.end());
    try {
      msc_ = Msc::build(raw_);
    } catch (const MscError& err) {
      throw ScenarioError(std::string("continuation breaks MSC validity: ") + err.what());
    }
    add_guards(frag.guards);
  }

  RunLog finish() {
    for (const auto& mon : monitors_) {
      auto vc = mon.vc.components();
      log_.monitors.push_back({msc_.lifeline_name(mon.me), {vc.begin(), vc.end()}, mon.store, mon.last_vals});
    }
    log_.executed = raw_;
    return std::move(log_);
  }

  const Scenario& sc_;
  RawMsc raw_;
  Msc msc_;
  RunOptions opt_;
  std::shared_ptr<const MonitorContext> ctx_;
  std::vector<MonitorState> monitors_;
  std::map<std::uint64_t, std::size_t> guard_of_;
  std::map<EventId, MessagePayload> in_flight_;
  RunLog log_;
};

}  // namespace

std::vector<EventId> sample_linear_extension(const Msc& m, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::size_t> pending(m.size(), 0);
  std::vector<EventId> ready;
  for (EventId e = 0; e < m.size(); ++e) {
    pending[e] = (m.last_loc(e) ? 1 : 0) + (m.matching_send(e) ? 1 : 0);
    if (pending[e] == 0) ready.push_back(e);
  }
  std::vector<EventId> order;
  order.reserve(m.size());
  while (!ready.empty()) {
    const auto i = static_cast<std::ptrdiff_t>(rng.below(ready.size()));
    const EventId e = ready[static_cast<std::size_t>(i)];
    ready.erase(ready.begin() + i);
    order.push_back(e);
    for (auto next : {m.local_successor(e), m.matching_recv(e)}) {
      if (next && --pending[*next] == 0) ready.insert(std::upper_bound(ready.begin(), ready.end(), *next), *next);
    }
  }
  return order;
}

RunLog run_scenario(const Scenario& sc, const GuardSet& g, std::uint64_t seed, const RunOptions& opt) {
  Run run(sc, g, seed, opt);
  return opt.concurrent ? run.concurrent(seed) : run.sequential(seed);
}

}  // namespace cpl
