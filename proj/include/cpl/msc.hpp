#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cpl/value.hpp"

namespace cpl {

using LifelineIndex = std::size_t;

/// Dense event index assigned when an Msc is built. Ordering of ids carries
/// no causal meaning.
using EventId = std::size_t;

enum class EventTag { act, recv, choice, send };

std::string_view to_string(EventTag tag);
std::optional<EventTag> parse_event_tag(std::string_view text);

// ---------------------------------------------------------------------------
// Raw (unvalidated) charts. This mirrors the trace file format: events carry
// external integer labels and refer to lifelines by name.

struct RawEvent {
  std::uint64_t id = 0;
  std::string lifeline;
  EventTag tag = EventTag::act;
  std::optional<std::string> receiver;  // present iff tag == send
  Valuation vars;
};

struct RawMsc {
  std::vector<std::string> lifelines;
  std::vector<RawEvent> events;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> succ;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> messages;
};

/// Which well-formedness condition a violation breaks. `structure` covers
/// malformed input (duplicate ids, dangling references, unknown lifelines,
/// receiver/kind mismatch) that precedes the four chart conditions.
enum class Condition { structure, local_succ, linear_order, matching, acyclic };

std::string_view to_string(Condition c);

struct Violation {
  Condition condition;
  std::string message;
  std::vector<std::uint64_t> events;  // external labels of the witnesses
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool violates(Condition c) const;
  std::string summary() const;
};

ValidationReport validate_msc(const RawMsc& raw);

class MscError : public std::runtime_error {
 public:
  explicit MscError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Raised for queries naming an event or lifeline the chart does not have.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// ---------------------------------------------------------------------------

/// A validated, immutable message sequence chart.
///
/// Construction computes, once, the local order per lifeline and a vector
/// timestamp per event: component B of `timestamp(e)` is the number of
/// B-events in the causal past of e (e included). Causal-order and
/// navigation queries are answered from those tables. All queries are
/// const and safe to call concurrently.
class Msc {
 public:
  Msc() = default;

  /// Validates `raw` and builds the chart. Throws MscError on any violation.
  static Msc build(RawMsc raw);

  const RawMsc& raw() const { return raw_; }
  const std::vector<std::string>& lifelines() const { return raw_.lifelines; }
  std::size_t lifeline_count() const { return raw_.lifelines.size(); }
  std::size_t size() const { return pid_.size(); }

  std::optional<LifelineIndex> find_lifeline(std::string_view name) const;
  LifelineIndex lifeline_index(std::string_view name) const;  // throws LookupError
  const std::string& lifeline_name(LifelineIndex b) const;

  std::optional<EventId> find_event(std::uint64_t label) const;
  EventId event_by_label(std::uint64_t label) const;  // throws LookupError
  std::uint64_t label(EventId e) const;

  LifelineIndex pid(EventId e) const;
  EventTag tag(EventId e) const;
  std::optional<LifelineIndex> receiver(EventId e) const;
  const Valuation& valuation(EventId e) const;

  std::optional<EventId> local_successor(EventId e) const;
  std::optional<EventId> matching_recv(EventId send) const;
  std::optional<EventId> matching_send(EventId recv) const;

  /// Events of `b` in local order.
  std::span<const EventId> events_on(LifelineIndex b) const;

  /// The k-th event of lifeline b, k counted from 1.
  std::optional<EventId> nth_event(LifelineIndex b, std::size_t k) const;

  bool causal_leq(EventId e, EventId f) const;
  bool causal_lt(EventId e, EventId f) const { return e != f && causal_leq(e, f); }

  std::optional<EventId> last_loc(EventId e) const;
  std::optional<EventId> last_visible(EventId e, LifelineIndex b) const;

  /// Position of e on its own lifeline, counted from 1.
  std::size_t local_index(EventId e) const;

  /// Causal-past cardinalities per lifeline for e (e included).
  std::span<const std::uint32_t> timestamp(EventId e) const;

  bool is_linear_extension(std::span<const EventId> seq) const;

  /// A fixed linear extension (Kahn's algorithm, smallest id first).
  const std::vector<EventId>& topological_order() const { return topo_; }

 private:
  void check(EventId e) const;
  void check_lifeline(LifelineIndex b) const;

  RawMsc raw_;
  std::unordered_map<std::string, LifelineIndex> lifeline_ids_;
  std::unordered_map<std::uint64_t, EventId> label_ids_;
  std::vector<LifelineIndex> pid_;
  std::vector<std::optional<LifelineIndex>> receiver_;
  std::vector<std::optional<EventId>> succ_;
  std::vector<std::optional<EventId>> pred_;
  std::vector<std::optional<EventId>> msg_out_;
  std::vector<std::optional<EventId>> msg_in_;
  std::vector<std::vector<EventId>> chains_;
  std::vector<std::size_t> local_index_;
  std::vector<std::uint32_t> stamps_;  // size() x lifeline_count(), row-major
  std::vector<EventId> topo_;
};

}  // namespace cpl
