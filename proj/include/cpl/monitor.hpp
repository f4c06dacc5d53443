#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cpl/denot.hpp"
#include "cpl/guards.hpp"
#include "cpl/msc.hpp"

namespace cpl {

/// Per-lifeline event counters, total over the declared lifelines.
class VectorClock {
 public:
  VectorClock() = default;
  explicit VectorClock(std::size_t lifelines) : c_(lifelines, 0) {}

  std::uint64_t operator[](LifelineIndex b) const { return c_.at(b); }
  std::uint64_t& operator[](LifelineIndex b) { return c_.at(b); }
  std::size_t size() const { return c_.size(); }
  std::span<const std::uint64_t> components() const { return c_; }

  /// Componentwise maximum.
  void merge(const VectorClock& other);

  friend bool operator==(const VectorClock&, const VectorClock&) = default;

 private:
  std::vector<std::uint64_t> c_;
};

/// Metadata piggybacked on a message: the sender's clock and both
/// latest-value tables, snapshotted at send time.
struct MessagePayload {
  VectorClock vc;
  std::vector<std::optional<bool>> view;  // [B * sub_count + psi]
  std::vector<std::optional<Value>> var;  // [B * cross_var_count + x]
  std::string payload;                    // opaque application data

  friend bool operator==(const MessagePayload&, const MessagePayload&) = default;
};

/// Lifelines and guard set shared (read-only) by all monitors of a run, with
/// lifeline and variable names resolved to indices.
class MonitorContext {
 public:
  struct Slot {
    enum class Kind { local, field, literal } kind = Kind::literal;
    std::string name;              // local
    LifelineIndex lifeline = 0;    // field
    std::size_t var = 0;           // field: index into cross_vars
    std::optional<Value> literal;  // literal
  };

  MonitorContext(std::vector<std::string> lifelines, GuardSet guards);

  const std::vector<std::string>& lifelines() const { return lifelines_; }
  const GuardSet& guards() const { return guards_; }
  std::size_t lifeline_count() const { return lifelines_.size(); }
  std::size_t sub_count() const { return guards_.sub.size(); }
  std::size_t var_count() const { return guards_.cross_vars.size(); }

  std::optional<LifelineIndex> find_lifeline(std::string_view name) const;

  /// Target lifeline of an `at` subformula.
  LifelineIndex at_target(std::size_t psi) const { return at_target_[psi]; }
  const Slot& left(std::size_t psi) const { return slots_[2 * psi]; }
  const Slot& right(std::size_t psi) const { return slots_[2 * psi + 1]; }

 private:
  std::vector<std::string> lifelines_;
  GuardSet guards_;
  std::vector<LifelineIndex> at_target_;
  std::vector<Slot> slots_;
};

/// Deliberate defects used to show that the differential harness notices
/// each detail of the update algorithm.
enum class Mutation {
  none,
  swap_merge_order,  // clock max taken before the view copy
  strict_at,         // at(me, f) reads f at the previous local event
  old_copy_timing,   // previous-local values read after in-place write-back
};

std::string_view to_string(Mutation m);
std::optional<Mutation> parse_mutation(std::string_view text);

/// Runtime state of one lifeline's monitor.
struct MonitorState {
  std::shared_ptr<const MonitorContext> ctx;
  LifelineIndex me = 0;
  VectorClock vc;
  std::vector<std::optional<bool>> view;  // [B * sub_count + psi]
  std::vector<std::optional<Value>> var;  // [B * var_count + x]
  Valuation store;
  std::vector<bool> old;        // previous-local copy, total over sub
  std::vector<bool> val;        // values computed at the latest event
  std::vector<bool> last_vals;  // val at each guard root
  Mutation mutation = Mutation::none;

  std::optional<bool>& view_at(LifelineIndex b, std::size_t psi) {
    return view.at(b * ctx->sub_count() + psi);
  }
  const std::optional<bool>& view_at(LifelineIndex b, std::size_t psi) const {
    return view.at(b * ctx->sub_count() + psi);
  }
  std::optional<Value>& var_at(LifelineIndex b, std::size_t x) { return var.at(b * ctx->var_count() + x); }
  const std::optional<Value>& var_at(LifelineIndex b, std::size_t x) const {
    return var.at(b * ctx->var_count() + x);
  }
};

/// What the monitor learns about one local event.
struct EventDescriptor {
  EventTag tag = EventTag::act;
  std::optional<LifelineIndex> receiver;   // send only
  Valuation store_after;                   // post-event local store
  std::optional<std::size_t> guard_index;  // choice only: which guard decides
  std::optional<MessagePayload> incoming;  // recv only
  std::string payload;                     // send only: application data
};

class MonitorError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

MonitorState init_monitor(LifelineIndex me, std::shared_ptr<const MonitorContext> ctx,
                          Mutation mutation = Mutation::none);

/// Processes one local event: receive merge, previous-local copy, clock
/// increment, store and variable-view update, bottom-up evaluation and
/// write-back. Returns the payload to emit for a send.
std::optional<MessagePayload> on_event(MonitorState& s, const EventDescriptor& d);

/// The steps of on_event before formula evaluation. After this the state
/// can be checked with check_coherence.
void begin_event(MonitorState& s, const EventDescriptor& d);

/// Evaluation, write-back and payload emission.
std::optional<MessagePayload> finish_event(MonitorState& s, const EventDescriptor& d);

/// Truth of sub[psi] at the current event, from the local state only.
bool eval_local(const MonitorState& s, std::size_t psi);

/// Verdict of the guard a choice event named, read after its update.
std::optional<bool> guard_verdict(const MonitorState& s, const EventDescriptor& d);

struct CoherenceReport {
  bool clock = true;     // vc equals causal-past counts
  bool remote = true;    // remote entries describe e^B_k, or are absent
  bool local = true;     // store and own var row match the event valuation
  bool previous = true;  // old holds previous-local truth values
  std::vector<std::string> problems;

  bool ok() const { return clock && remote && local && previous; }
};

/// Pre-evaluation coherence of `s` at event e (pid(e) == s.me).
CoherenceReport check_coherence(const MonitorState& s, const Msc& m, EventId e, const SatTable& truth);
CoherenceReport check_coherence(const MonitorState& s, const Msc& m, EventId e);

struct InvariantReport {
  bool clock = true;     // vc equals causal-past counts
  bool presence = true;  // no entries for lifelines with vc = 0
  bool vars = true;      // var(B, x) = val(e^B_k)(x)
  bool views = true;     // view(B, psi) = sat at e^B_k
  std::vector<std::string> problems;

  bool ok() const { return clock && presence && vars && views; }
};

/// State invariants after the update for e has completed.
InvariantReport check_invariants(const MonitorState& s, const Msc& m, EventId e, const SatTable& truth);

/// Wire encoding: {vc:{lifeline:n}, view:[[lifeline, subIndex, bool]],
/// var:[[lifeline, varName, value]], payload:string}. Absent entries are
/// omitted.
nlohmann::json payload_to_json(const MessagePayload& p, const MonitorContext& ctx);
MessagePayload payload_from_json(const nlohmann::json& j, const MonitorContext& ctx);

}  // namespace cpl
