#include "cpl/msc.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_set>

namespace cpl {

std::string_view to_string(EventTag tag) {
  switch (tag) {
    case EventTag::act: return "act";
    case EventTag::recv: return "recv";
    case EventTag::choice: return "choice";
    case EventTag::send: return "send";
  }
  return "?";
}

std::optional<EventTag> parse_event_tag(std::string_view text) {
  if (text == "act") return EventTag::act;
  if (text == "recv") return EventTag::recv;
  if (text == "choice") return EventTag::choice;
  if (text == "send") return EventTag::send;
  return std::nullopt;
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::structure: return "structure";
    case Condition::local_succ: return "(i) local successor";
    case Condition::linear_order: return "(ii) linear local order";
    case Condition::matching: return "(iii) message matching";
    case Condition::acyclic: return "(iv) acyclicity";
  }
  return "?";
}

bool ValidationReport::violates(Condition c) const {
  return std::any_of(violations.begin(), violations.end(),
                     [c](const Violation& v) { return v.condition == c; });
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    if (i) out << "; ";
    out << to_string(v.condition) << ": " << v.message;
    if (!v.events.empty()) {
      out << " [";
      for (std::size_t j = 0; j < v.events.size(); ++j) out << (j ? "," : "") << v.events[j];
      out << "]";
    }
  }
  return out.str();
}

MscError::MscError(ValidationReport report)
    : std::runtime_error("ill-formed MSC: " + report.summary()), report_(std::move(report)) {}

namespace {

// Index-based view over a raw chart whose structure has been checked.
struct Indexed {
  std::unordered_map<std::string, LifelineIndex> lifelines;
  std::unordered_map<std::uint64_t, EventId> labels;
  std::vector<LifelineIndex> pid;
};

void check_structure(const RawMsc& raw, Indexed& ix, ValidationReport& report) {
  auto fail = [&](std::string msg, std::vector<std::uint64_t> events = {}) {
    report.violations.push_back({Condition::structure, std::move(msg), std::move(events)});
  };
  for (std::size_t i = 0; i < raw.lifelines.size(); ++i) {
    const auto& name = raw.lifelines[i];
    if (name.empty()) fail("empty lifeline name");
    if (!ix.lifelines.emplace(name, i).second) fail("duplicate lifeline '" + name + "'");
  }
  for (std::size_t i = 0; i < raw.events.size(); ++i) {
    const auto& ev = raw.events[i];
    if (!ix.labels.emplace(ev.id, i).second) fail("duplicate event id", {ev.id});
    auto it = ix.lifelines.find(ev.lifeline);
    if (it == ix.lifelines.end()) {
      fail("event on unknown lifeline '" + ev.lifeline + "'", {ev.id});
      ix.pid.push_back(0);
    } else {
      ix.pid.push_back(it->second);
    }
    if (ev.tag == EventTag::send) {
      if (!ev.receiver)
        fail("send event without receiver", {ev.id});
      else if (!ix.lifelines.count(*ev.receiver))
        fail("send to unknown lifeline '" + *ev.receiver + "'", {ev.id});
    } else if (ev.receiver) {
      fail("receiver given on a non-send event", {ev.id});
    }
  }
  auto check_pairs = [&](const auto& pairs, const char* what) {
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    for (const auto& [a, b] : pairs) {
      if (!ix.labels.count(a)) fail(std::string(what) + " references unknown event", {a});
      if (!ix.labels.count(b)) fail(std::string(what) + " references unknown event", {b});
      if (!seen.emplace(a, b).second) fail(std::string("duplicate ") + what, {a, b});
    }
  };
  check_pairs(raw.succ, "succ edge");
  check_pairs(raw.messages, "message");
}

void check_local_order(const RawMsc& raw, const Indexed& ix, ValidationReport& report) {
  const std::size_t n = raw.events.size();
  std::vector<std::vector<EventId>> out(n);
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& [a, b] : raw.succ) {
    EventId e = ix.labels.at(a), f = ix.labels.at(b);
    if (ix.pid[e] != ix.pid[f]) {
      report.violations.push_back(
          {Condition::local_succ, "succ edge crosses lifelines", {a, b}});
      continue;
    }
    out[e].push_back(f);
    ++indeg[f];
  }
  for (EventId e = 0; e < n; ++e) {
    if (out[e].size() > 1)
      report.violations.push_back(
          {Condition::linear_order, "event has several local successors", {raw.events[e].id}});
    if (indeg[e] > 1)
      report.violations.push_back(
          {Condition::linear_order, "event has several local predecessors", {raw.events[e].id}});
  }
  std::vector<std::vector<EventId>> members(raw.lifelines.size());
  for (EventId e = 0; e < n; ++e) members[ix.pid[e]].push_back(e);
  for (std::size_t b = 0; b < members.size(); ++b) {
    const auto& evs = members[b];
    if (evs.empty()) continue;
    std::vector<EventId> heads;
    for (EventId e : evs)
      if (indeg[e] == 0) heads.push_back(e);
    if (heads.size() != 1) {
      std::vector<std::uint64_t> w;
      for (EventId e : heads) w.push_back(raw.events[e].id);
      report.violations.push_back({Condition::linear_order,
                                   "lifeline '" + raw.lifelines[b] + "' has " +
                                       std::to_string(heads.size()) + " first events",
                                   std::move(w)});
      continue;
    }
    std::vector<bool> seen(n, false);
    std::size_t count = 0;
    for (EventId cur = heads[0];;) {
      if (seen[cur]) break;
      seen[cur] = true;
      ++count;
      if (out[cur].empty()) break;
      cur = out[cur].front();
    }
    if (count != evs.size()) {
      std::vector<std::uint64_t> w;
      for (EventId e : evs)
        if (!seen[e]) w.push_back(raw.events[e].id);
      report.violations.push_back({Condition::linear_order,
                                   "local order of '" + raw.lifelines[b] + "' is not a chain",
                                   std::move(w)});
    }
  }
}

void check_matching(const RawMsc& raw, const Indexed& ix, ValidationReport& report) {
  const std::size_t n = raw.events.size();
  std::vector<std::size_t> as_send(n, 0), as_recv(n, 0);
  for (const auto& [a, b] : raw.messages) {
    EventId s = ix.labels.at(a), r = ix.labels.at(b);
    ++as_send[s];
    ++as_recv[r];
    const auto& se = raw.events[s];
    const auto& re = raw.events[r];
    if (se.tag != EventTag::send)
      report.violations.push_back({Condition::matching, "message source is not a send", {a, b}});
    else if (se.receiver != re.lifeline)
      report.violations.push_back(
          {Condition::matching, "send names a different receiver than the matched recv", {a, b}});
    if (re.tag != EventTag::recv)
      report.violations.push_back({Condition::matching, "message target is not a recv", {a, b}});
    if (ix.pid[s] == ix.pid[r])
      report.violations.push_back({Condition::matching, "message within one lifeline", {a, b}});
  }
  for (EventId e = 0; e < n; ++e) {
    const auto& ev = raw.events[e];
    if (ev.tag == EventTag::recv && as_recv[e] != 1)
      report.violations.push_back({Condition::matching,
                                   "recv has " + std::to_string(as_recv[e]) + " matching sends",
                                   {ev.id}});
    if (as_send[e] > 1)
      report.violations.push_back({Condition::matching, "send matched more than once", {ev.id}});
  }
}

void check_acyclic(const RawMsc& raw, const Indexed& ix, ValidationReport& report) {
  const std::size_t n = raw.events.size();
  std::vector<std::vector<EventId>> out(n);
  std::vector<std::size_t> indeg(n, 0);
  auto add = [&](const auto& pairs) {
    for (const auto& [a, b] : pairs) {
      EventId e = ix.labels.at(a), f = ix.labels.at(b);
      out[e].push_back(f);
      ++indeg[f];
    }
  };
  add(raw.succ);
  add(raw.messages);
  std::vector<EventId> stack;
  for (EventId e = 0; e < n; ++e)
    if (indeg[e] == 0) stack.push_back(e);
  std::size_t done = 0;
  while (!stack.empty()) {
    EventId e = stack.back();
    stack.pop_back();
    ++done;
    for (EventId f : out[e])
      if (--indeg[f] == 0) stack.push_back(f);
  }
  if (done != n) {
    std::vector<std::uint64_t> w;
    for (EventId e = 0; e < n; ++e)
      if (indeg[e] > 0) w.push_back(raw.events[e].id);
    report.violations.push_back(
        {Condition::acyclic, "succ and message edges form a cycle", std::move(w)});
  }
}

}  // namespace

ValidationReport validate_msc(const RawMsc& raw) {
  ValidationReport report;
  Indexed ix;
  check_structure(raw, ix, report);
  if (!report.ok()) return report;
  check_local_order(raw, ix, report);
  check_matching(raw, ix, report);
  check_acyclic(raw, ix, report);
  return report;
}

Msc Msc::build(RawMsc raw) {
  auto report = validate_msc(raw);
  if (!report.ok()) throw MscError(std::move(report));

  Msc m;
  m.raw_ = std::move(raw);
  const auto& r = m.raw_;
  const std::size_t n = r.events.size();
  const std::size_t lanes = r.lifelines.size();

  for (std::size_t i = 0; i < lanes; ++i) m.lifeline_ids_.emplace(r.lifelines[i], i);
  m.pid_.resize(n);
  m.receiver_.resize(n);
  for (EventId e = 0; e < n; ++e) {
    m.label_ids_.emplace(r.events[e].id, e);
    m.pid_[e] = m.lifeline_ids_.at(r.events[e].lifeline);
    if (r.events[e].receiver) m.receiver_[e] = m.lifeline_ids_.at(*r.events[e].receiver);
  }
  m.succ_.assign(n, std::nullopt);
  m.pred_.assign(n, std::nullopt);
  m.msg_out_.assign(n, std::nullopt);
  m.msg_in_.assign(n, std::nullopt);
  for (const auto& [a, b] : r.succ) {
    EventId e = m.label_ids_.at(a), f = m.label_ids_.at(b);
    m.succ_[e] = f;
    m.pred_[f] = e;
  }
  for (const auto& [a, b] : r.messages) {
    EventId s = m.label_ids_.at(a), t = m.label_ids_.at(b);
    m.msg_out_[s] = t;
    m.msg_in_[t] = s;
  }

  m.chains_.assign(lanes, {});
  m.local_index_.assign(n, 0);
  for (EventId e = 0; e < n; ++e) {
    if (m.pred_[e]) continue;
    auto& chain = m.chains_[m.pid_[e]];
    for (std::optional<EventId> cur = e; cur; cur = m.succ_[*cur]) {
      chain.push_back(*cur);
      m.local_index_[*cur] = chain.size();
    }
  }

  // Kahn's algorithm, smallest id first, for a deterministic linear extension.
  std::vector<std::size_t> indeg(n, 0);
  for (EventId e = 0; e < n; ++e) indeg[e] = (m.pred_[e] ? 1 : 0) + (m.msg_in_[e] ? 1 : 0);
  std::priority_queue<EventId, std::vector<EventId>, std::greater<>> ready;
  for (EventId e = 0; e < n; ++e)
    if (indeg[e] == 0) ready.push(e);
  while (!ready.empty()) {
    EventId e = ready.top();
    ready.pop();
    m.topo_.push_back(e);
    for (auto next : {m.succ_[e], m.msg_out_[e]})
      if (next && --indeg[*next] == 0) ready.push(*next);
  }

  m.stamps_.assign(n * lanes, 0);
  for (EventId e : m.topo_) {
    auto row = m.stamps_.begin() + static_cast<std::ptrdiff_t>(e * lanes);
    for (auto src : {m.pred_[e], m.msg_in_[e]}) {
      if (!src) continue;
      auto other = m.stamps_.begin() + static_cast<std::ptrdiff_t>(*src * lanes);
      for (std::size_t b = 0; b < lanes; ++b) row[b] = std::max(row[b], other[b]);
    }
    ++row[m.pid_[e]];
  }
  return m;
}

void Msc::check(EventId e) const {
  if (e >= size()) throw LookupError("no such event: " + std::to_string(e));
}

void Msc::check_lifeline(LifelineIndex b) const {
  if (b >= lifeline_count()) throw LookupError("no such lifeline: " + std::to_string(b));
}

std::optional<LifelineIndex> Msc::find_lifeline(std::string_view name) const {
  auto it = lifeline_ids_.find(std::string(name));
  if (it == lifeline_ids_.end()) return std::nullopt;
  return it->second;
}

LifelineIndex Msc::lifeline_index(std::string_view name) const {
  if (auto b = find_lifeline(name)) return *b;
  throw LookupError("no such lifeline: " + std::string(name));
}

const std::string& Msc::lifeline_name(LifelineIndex b) const {
  check_lifeline(b);
  return raw_.lifelines[b];
}

std::optional<EventId> Msc::find_event(std::uint64_t label) const {
  auto it = label_ids_.find(label);
  if (it == label_ids_.end()) return std::nullopt;
  return it->second;
}

EventId Msc::event_by_label(std::uint64_t label) const {
  if (auto e = find_event(label)) return *e;
  throw LookupError("no such event: " + std::to_string(label));
}

std::uint64_t Msc::label(EventId e) const {
  check(e);
  return raw_.events[e].id;
}

LifelineIndex Msc::pid(EventId e) const {
  check(e);
  return pid_[e];
}

EventTag Msc::tag(EventId e) const {
  check(e);
  return raw_.events[e].tag;
}

std::optional<LifelineIndex> Msc::receiver(EventId e) const {
  check(e);
  return receiver_[e];
}

const Valuation& Msc::valuation(EventId e) const {
  check(e);
  return raw_.events[e].vars;
}

std::optional<EventId> Msc::local_successor(EventId e) const {
  check(e);
  return succ_[e];
}

std::optional<EventId> Msc::matching_recv(EventId send) const {
  check(send);
  return msg_out_[send];
}

std::optional<EventId> Msc::matching_send(EventId recv) const {
  check(recv);
  return msg_in_[recv];
}

std::span<const EventId> Msc::events_on(LifelineIndex b) const {
  check_lifeline(b);
  return chains_[b];
}

std::optional<EventId> Msc::nth_event(LifelineIndex b, std::size_t k) const {
  check_lifeline(b);
  if (k == 0 || k > chains_[b].size()) return std::nullopt;
  return chains_[b][k - 1];
}

std::span<const std::uint32_t> Msc::timestamp(EventId e) const {
  check(e);
  return {stamps_.data() + e * lifeline_count(), lifeline_count()};
}

bool Msc::causal_leq(EventId e, EventId f) const {
  check(e);
  check(f);
  // e <= f iff f has seen at least as many events of pid(e) as e has.
  const LifelineIndex a = pid_[e];
  return stamps_[e * lifeline_count() + a] <= stamps_[f * lifeline_count() + a];
}

std::optional<EventId> Msc::last_loc(EventId e) const {
  check(e);
  return pred_[e];
}

std::optional<EventId> Msc::last_visible(EventId e, LifelineIndex b) const {
  check(e);
  check_lifeline(b);
  return nth_event(b, stamps_[e * lifeline_count() + b]);
}

std::size_t Msc::local_index(EventId e) const {
  check(e);
  return local_index_[e];
}

bool Msc::is_linear_extension(std::span<const EventId> seq) const {
  if (seq.size() != size()) return false;
  std::vector<std::size_t> pos(size(), size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] >= size() || pos[seq[i]] != size()) return false;
    pos[seq[i]] = i;
  }
  for (EventId e = 0; e < size(); ++e) {
    if (succ_[e] && pos[e] > pos[*succ_[e]]) return false;
    if (msg_out_[e] && pos[e] > pos[*msg_out_[e]]) return false;
  }
  return true;
}

}  // namespace cpl
