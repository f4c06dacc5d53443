#include "cli.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"

#include "cpl/denot.hpp"
#include "cpl/parser.hpp"
#include "cpl/rng.hpp"
#include "cpl/simulator.hpp"
#include "cpl/trace_io.hpp"

namespace cpl::cli {

namespace {

constexpr int exit_ok = 0;
constexpr int exit_mismatch = 1;
constexpr int exit_invalid = 2;

void emit(std::ostream& out, const nlohmann::json& j, bool pretty) { out << j.dump(pretty ? 2 : -1) << '\n'; }

std::vector<std::string> read_guard_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open guard file " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(line.substr(first));
  }
  return out;
}

struct CheckArgs {
  std::string trace;
  std::vector<std::string> guards;
  std::string guards_file;
  std::optional<std::uint64_t> event;
  bool pretty = false;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  const Msc m = Msc::build(load_trace(a.trace));
  auto texts = a.guards;
  if (!a.guards_file.empty()) {
    auto more = read_guard_lines(a.guards_file);
    texts.insert(texts.end(), more.begin(), more.end());
  }
  std::vector<Formula> declared;
  for (const auto& t : texts) declared.push_back(parse_guard(t, m.lifelines()));
  const GuardSet g = make_guard_set(declared, m.lifelines());
  const SatTable truth(m, g);

  std::vector<EventId> events;
  if (a.event) {
    events.push_back(m.event_by_label(*a.event));
  } else {
    for (EventId e = 0; e < m.size(); ++e) events.push_back(e);
    std::sort(events.begin(), events.end(), [&](EventId x, EventId y) { return m.label(x) < m.label(y); });
  }
  nlohmann::json report = nlohmann::json::array();
  for (EventId e : events)
    for (std::size_t i = 0; i < texts.size(); ++i)
      report.push_back({{"event", m.label(e)}, {"guard", texts[i]}, {"value", truth.at(e, g.roots[i])}});
  emit(out, report, a.pretty);
  return exit_ok;
}

struct SimulateArgs {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t extensions = 1;
  std::string out_path;
  bool pretty = false;
  bool concurrent = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const Scenario sc = load_scenario(a.scenario);
  const GuardSet g = scenario_guard_set(sc);
  RunOptions opt;
  opt.concurrent = a.concurrent;
  nlohmann::json logs = nlohmann::json::array();
  for (std::size_t i = 0; i < a.extensions; ++i)
    logs.push_back(run_log_to_json(run_scenario(sc, g, derive_seed(a.seed, i), opt)));
  if (a.out_path.empty()) {
    emit(out, logs, a.pretty);
  } else {
    std::ofstream file(a.out_path);
    if (!file) throw FormatError("cannot write " + a.out_path);
    emit(file, logs, a.pretty);
  }
  return exit_ok;
}

struct FuzzArgs {
  FuzzConfig cfg;
  std::string mutate = "none";
  bool pretty = false;
};

int cmd_fuzz(FuzzArgs a, std::ostream& out, std::ostream& err) {
  auto m = parse_mutation(a.mutate);
  if (!m) {
    err << "unknown mutation '" << a.mutate << "'\n";
    return exit_invalid;
  }
  a.cfg.mutation = *m;
  try {
    a.cfg.params.validate();
  } catch (const std::invalid_argument& e) {
    err << e.what() << '\n';
    return exit_invalid;
  }
  const auto summary = run_fuzz(a.cfg);
  emit(out, fuzz_summary_to_json(summary), a.pretty);
  return summary.ok() ? exit_ok : exit_mismatch;
}

std::string render(const Valuation& vars) {
  std::string s = "{";
  bool first = true;
  for (const auto& [k, v] : vars) {
    s += (first ? "" : ", ") + k + ": " + to_literal(v);
    first = false;
  }
  return s + "}";
}

int cmd_explain(const std::string& trace, std::uint64_t label, std::ostream& out) {
  const Msc m = Msc::build(load_trace(trace));
  const EventId e = m.event_by_label(label);
  out << "event " << label << " on " << m.lifeline_name(m.pid(e)) << " (" << to_string(m.tag(e)) << ")\n";
  std::size_t width = 8;
  for (const auto& l : m.lifelines()) width = std::max(width, l.size() + 2);
  out << std::left << std::setw(static_cast<int>(width)) << "lifeline" << std::setw(8) << "latest" << std::setw(7)
      << "index" << "valuation\n";
  for (LifelineIndex b = 0; b < m.lifeline_count(); ++b) {
    auto last = m.last_visible(e, b);
    if (!last) continue;
    out << std::setw(static_cast<int>(width)) << m.lifeline_name(b) << std::setw(8) << m.label(*last) << std::setw(7)
        << m.local_index(*last) << render(m.valuation(*last)) << '\n';
  }
  return exit_ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal past logic: offline checking, monitored simulation, differential fuzzing"};
  app.require_subcommand(1);

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Evaluate guards on a trace with the denotational semantics");
  c->add_option("trace", check.trace, "Trace file (JSON)")->required();
  c->add_option("-g,--guard", check.guards, "Guard text (repeatable)");
  c->add_option("--guards-file", check.guards_file, "File with one guard per line");
  c->add_option("-e,--event", check.event, "Restrict to one event id");
  c->add_flag("--pretty", check.pretty, "Indented JSON");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run a scenario with one online monitor per lifeline");
  s->add_option("scenario", sim.scenario, "Scenario file (JSON)")->required();
  s->add_option("--seed", sim.seed, "Base seed")->envname("CPL_SEED");
  s->add_option("--extensions", sim.extensions, "Number of runs (derived seeds)");
  s->add_option("-o,--out", sim.out_path, "Write logs here instead of standard output");
  s->add_flag("--concurrent", sim.concurrent, "One thread per lifeline");
  s->add_flag("--pretty", sim.pretty, "Indented JSON");

  FuzzArgs fz;
  auto* f = app.add_subcommand("fuzz", "Differential check of monitors against the denotational semantics");
  f->add_option("--seeds", fz.cfg.seeds, "Random instances");
  f->add_option("--extensions", fz.cfg.extensions, "Sampled linear extensions per instance");
  f->add_option("--seed", fz.cfg.params.seed, "Base seed")->envname("CPL_SEED");
  f->add_option("--lifelines", fz.cfg.params.lifelines, "Maximum lifeline count");
  f->add_option("--events", fz.cfg.params.events_per_lifeline, "Maximum events per lifeline");
  f->add_option("--msg-prob", fz.cfg.params.message_probability, "Probability that an event sends");
  f->add_option("--vars", fz.cfg.params.variables, "Variable alphabet size");
  f->add_option("--values", fz.cfg.params.values, "Value alphabet size");
  f->add_option("--depth", fz.cfg.params.depth, "Formula depth bound");
  f->add_option("--formulas", fz.cfg.params.formulas, "Formulas per guard set");
  f->add_option("--jobs", fz.cfg.jobs, "Parallel instances");
  f->add_option("--mutate", fz.mutate, "none | swap-merge-order | strict-at | old-copy-timing");
  f->add_flag("--keep-going", fz.cfg.keep_going, "Collect every mismatch instead of stopping at the first");
  f->add_flag("--pretty", fz.pretty, "Indented JSON");

  std::string explain_trace;
  std::uint64_t explain_event = 0;
  auto* x = app.add_subcommand("explain", "Show the latest visible event of every lifeline");
  x->add_option("trace", explain_trace, "Trace file (JSON)")->required();
  x->add_option("-e,--event", explain_event, "Event id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_invalid;
  }

  try {
    if (*c) return cmd_check(check, out);
    if (*s) return cmd_simulate(sim, out);
    if (*f) return cmd_fuzz(fz, out, err);
    if (*x) return cmd_explain(explain_trace, explain_event, out);
  } catch (const ParseError& e) {
    err << "guard syntax error at " << e.what() << '\n';
    return exit_invalid;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return exit_invalid;
  }
  return exit_invalid;
}

}  // namespace cpl::cli
