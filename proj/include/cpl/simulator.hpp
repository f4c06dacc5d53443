#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpl/guards.hpp"
#include "cpl/monitor.hpp"
#include "cpl/msc.hpp"

namespace cpl {

// ---------------------------------------------------------------------------
// Scenarios

/// Continuation appended after a choice event. Events are appended in the
/// listed order to the end of their lifelines. Only the choice owner may
/// act; other lifelines may only receive messages the owner sends here.
struct Fragment {
  std::vector<RawEvent> events;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> messages;
  std::map<std::uint64_t, std::string> guards;  // choice label -> guard text
};

struct Branches {
  Fragment then_branch;
  Fragment else_branch;
};

struct Scenario {
  RawMsc msc;
  std::map<std::uint64_t, std::string> guards;  // choice label -> guard text
  std::map<std::uint64_t, Branches> branches;   // choice label -> continuations
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trace format plus `guards: [{choice_event_id, guard}]` and optional
/// `branches: [{choice_event_id, then, else}]`, where a fragment is
/// `{events, messages?, guards?}`.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& sc);
Scenario load_scenario(const std::filesystem::path& path);

/// Every guard text in the scenario (fragments included), parsed against
/// the scenario's lifelines, deduplicated in first-seen order.
GuardSet scenario_guard_set(const Scenario& sc);

// ---------------------------------------------------------------------------
// Runs

struct EventRecord {
  std::uint64_t event = 0;
  std::string lifeline;
  EventTag tag = EventTag::act;
  std::optional<bool> verdict;             // choice events with a guard
  std::optional<std::size_t> payload_bytes;  // sends: size of the wire encoding
};

struct MonitorSnapshot {
  std::string lifeline;
  std::vector<std::uint64_t> vc;
  Valuation store;
  std::vector<bool> last_vals;
};

struct RunLog {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> order;  // executed linear extension, by label
  std::vector<EventRecord> records;  // in execution order
  std::vector<MonitorSnapshot> monitors;
  RawMsc executed;                   // base chart plus appended continuations
};

nlohmann::json run_log_to_json(const RunLog& log);

struct RunOptions {
  Mutation mutation = Mutation::none;
  /// Round-trip every payload through its JSON wire encoding.
  bool wire_payloads = true;
  /// One thread per lifeline. Scenarios with branches are rejected.
  bool concurrent = false;
};

/// Uniformly random choice among ready events at each step; deterministic
/// per seed.
std::vector<EventId> sample_linear_extension(const Msc& m, std::uint64_t seed);

/// Replays the scenario along a sampled linear extension with one monitor
/// per lifeline, appending the chosen continuation at each branching choice.
RunLog run_scenario(const Scenario& sc, const GuardSet& g, std::uint64_t seed, const RunOptions& opt = {});

// ---------------------------------------------------------------------------
// Differential checking

struct Mismatch {
  std::uint64_t event = 0;
  std::size_t sub = 0;
  std::string formula;
  bool monitor = false;
  bool oracle = false;
};

struct DiffReport {
  std::size_t events = 0;
  std::size_t evaluations = 0;
  std::vector<Mismatch> mismatches;
  std::vector<std::string> coherence_failures;  // before evaluation
  std::vector<std::string> invariant_failures;  // after the update
  std::vector<std::vector<bool>> values;        // monitor values per EventId

  bool ok() const { return mismatches.empty() && coherence_failures.empty() && invariant_failures.empty(); }
};

struct DiffOptions {
  Mutation mutation = Mutation::none;
  bool fail_fast = false;
};

/// Drives the monitors along `extension` and compares every subformula
/// value at every event with the denotational oracle, checking coherence
/// before each evaluation and the state invariants after each update.
DiffReport differential_check(const Msc& m, const GuardSet& g, const std::vector<EventId>& extension,
                              const DiffOptions& opt = {});

nlohmann::json mismatches_to_json(const std::vector<Mismatch>& ms);

// ---------------------------------------------------------------------------
// Random instances

struct FuzzParams {
  std::size_t lifelines = 5;
  std::size_t events_per_lifeline = 8;  // upper bound per lifeline
  double message_probability = 0.5;
  std::size_t variables = 3;
  std::size_t values = 3;
  std::size_t depth = 4;
  std::size_t formulas = 10;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

/// Lifeline names used by the generators: A, B, ..., Z, L26, L27, ...
std::vector<std::string> generated_lifelines(std::size_t n);

/// Valid chart with matched and unmatched sends and non-FIFO delivery.
/// Send and choice events keep the store unchanged.
Msc gen_random_msc(const FuzzParams& p);

/// p.formulas formulas of depth at most p.depth over every operator,
/// derived ones included; returned as an expanded, closed guard set.
GuardSet gen_random_formulas(const FuzzParams& p, const std::vector<std::string>& lifelines);

struct FuzzConfig {
  FuzzParams params;
  std::size_t seeds = 1000;
  std::size_t extensions = 5;
  Mutation mutation = Mutation::none;
  bool keep_going = false;
  std::size_t jobs = 1;
};

struct FuzzFailure {
  std::size_t instance = 0;
  std::size_t extension = 0;
  std::uint64_t instance_seed = 0;
  std::vector<Mismatch> mismatches;
  std::vector<std::string> problems;
};

struct FuzzSummary {
  std::size_t instances = 0;
  std::size_t runs = 0;
  std::size_t events = 0;
  std::size_t formulas = 0;
  std::size_t evaluations = 0;
  std::size_t mismatches = 0;
  std::size_t coherence_failures = 0;
  std::size_t invariant_failures = 0;
  std::vector<FuzzFailure> failures;

  bool ok() const { return mismatches == 0 && coherence_failures == 0 && invariant_failures == 0; }
};

/// One random instance of a sweep: lifeline count drawn from
/// [1, params.lifelines], chart, and guard set.
struct FuzzInstance {
  std::uint64_t seed = 0;
  Msc msc;
  GuardSet guards;
};
FuzzInstance make_fuzz_instance(const FuzzParams& params, std::size_t index);

/// differential_check over `seeds` instances x `extensions` sampled
/// extensions. Without keep_going the sweep stops at the first failing
/// instance.
FuzzSummary run_fuzz(const FuzzConfig& cfg);

nlohmann::json fuzz_summary_to_json(const FuzzSummary& s);

}  // namespace cpl
