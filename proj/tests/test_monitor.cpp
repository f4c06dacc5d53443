#include "doctest.h"

#include "cpl/denot.hpp"
#include "cpl/parser.hpp"
#include "cpl/rng.hpp"
#include "cpl/simulator.hpp"
#include "cpl/trace_io.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace cpl;
using namespace cpl::test;

namespace {

std::shared_ptr<const MonitorContext> context(const std::vector<std::string>& lanes,
                                              const std::vector<std::string>& guards) {
  std::vector<Formula> fs;
  for (const auto& g : guards) fs.push_back(parse_guard(g, lanes));
  return std::make_shared<const MonitorContext>(lanes, make_guard_set(fs, lanes));
}

EventDescriptor describe(const Msc& m, EventId e) {
  EventDescriptor d;
  d.tag = m.tag(e);
  d.receiver = m.receiver(e);
  d.store_after = m.valuation(e);
  return d;
}

// Drives every lifeline's monitor of m along ext.
struct Driver {
  const Msc& m;
  std::shared_ptr<const MonitorContext> ctx;
  std::vector<MonitorState> mons;
  std::vector<std::optional<MessagePayload>> sent;

  Driver(const Msc& chart, std::shared_ptr<const MonitorContext> c, Mutation mut = Mutation::none)
      : m(chart), ctx(std::move(c)), sent(chart.size()) {
    for (LifelineIndex b = 0; b < m.lifeline_count(); ++b) mons.push_back(init_monitor(b, ctx, mut));
  }

  EventDescriptor descriptor(EventId e) {
    auto d = describe(m, e);
    if (auto s = m.matching_send(e)) d.incoming = sent[*s];
    return d;
  }

  void step(EventId e) {
    auto d = descriptor(e);
    if (auto out = on_event(mons[m.pid(e)], d)) sent[e] = std::move(out);
  }
};

std::uint64_t clock_of(const MonitorState& s, const std::string& lane) {
  return s.vc[*s.ctx->find_lifeline(lane)];
}

}  // namespace

TEST_SUITE("vector clocks") {
  TEST_CASE("merge is a semilattice join") {
    SplitMix64 rng(3);
    auto random_clock = [&] {
      VectorClock c(4);
      for (LifelineIndex b = 0; b < 4; ++b) c[b] = rng.below(5);
      return c;
    };
    for (int i = 0; i < 500; ++i) {
      const auto a = random_clock(), b = random_clock(), c = random_clock();
      auto ab = a;
      ab.merge(b);
      auto ba = b;
      ba.merge(a);
      CHECK(ab == ba);
      auto ab_c = ab;
      ab_c.merge(c);
      auto bc = b;
      bc.merge(c);
      auto a_bc = a;
      a_bc.merge(bc);
      CHECK(ab_c == a_bc);
      auto aa = a;
      aa.merge(a);
      CHECK(aa == a);
      for (LifelineIndex k = 0; k < 4; ++k) CHECK(ab[k] == std::max(a[k], b[k]));
    }
    VectorClock small(2);
    CHECK_THROWS_AS(small.merge(VectorClock(3)), MonitorError);
  }
}

TEST_SUITE("monitor") {
  TEST_CASE("fresh state") {
    const auto ctx = context({"A", "B"}, {"At[B].x == 1 && Y(x == 2)"});
    const auto s = init_monitor(0, ctx);
    CHECK(s.vc[0] == 0);
    CHECK(s.vc[1] == 0);
    for (const auto& v : s.view) CHECK_FALSE(v.has_value());
    for (const auto& v : s.var) CHECK_FALSE(v.has_value());
    CHECK(s.store.empty());
    CHECK(s.old.size() == ctx->sub_count());
    for (bool b : s.old) CHECK_FALSE(b);
    CHECK_THROWS_AS(init_monitor(2, ctx), LookupError);
  }

  TEST_CASE("fresh state is coherent at a first event") {
    RawMsc raw;
    raw.lifelines = {"A", "B"};
    raw.events = {act(0, "A", {{"x", int_value(1)}}), act(1, "B")};
    const Msc m = Msc::build(raw);
    const auto ctx = context(m.lifelines(), {"x == 1 && At[B].x == 1"});
    auto s = init_monitor(0, ctx);
    begin_event(s, describe(m, 0));
    CHECK(check_coherence(s, m, 0).ok());
  }

  TEST_CASE("single local event") {
    const auto ctx = context({"A"}, {"Here.x == 1"});
    auto s = init_monitor(0, ctx);
    EventDescriptor d;
    d.tag = EventTag::choice;
    d.store_after = {{"x", int_value(1)}};
    d.guard_index = 0;
    CHECK_FALSE(on_event(s, d).has_value());
    CHECK(s.vc[0] == 1);
    CHECK(s.val[ctx->guards().roots[0]]);
    CHECK(s.last_vals == std::vector<bool>{true});
    CHECK(guard_verdict(s, d) == true);
  }

  TEST_CASE("committer sees the pass, not the failure in transit") {
    const Msc m = Msc::build(load_trace(fixture("merge_trace.json")));
    const auto ctx = context(m.lifelines(), {"At[TestRunner].candidate == Here.candidate && "
                                             "at(TestRunner, !(status == \"failed\") S (status == \"passed\"))"});
    Driver run(m, ctx);
    for (std::uint64_t label : {0, 1, 2, 3, 4, 5}) run.step(m.event_by_label(label));
    const auto& committer = run.mons[m.lifeline_index("Committer")];
    CHECK(committer.last_vals[0]);
    CHECK(clock_of(committer, "TestRunner") == 1);
    CHECK(clock_of(committer, "Orchestrator") == 1);
    CHECK(clock_of(committer, "Committer") == 3);
    run.step(m.event_by_label(6));
    CHECK_FALSE(committer.last_vals[0]);
    CHECK(clock_of(committer, "TestRunner") == 2);
  }

  TEST_CASE("yesterday is false at the first local event") {
    const auto ctx = context({"A"}, {"Y(true)"});
    auto s = init_monitor(0, ctx);
    EventDescriptor d;
    begin_event(s, d);
    CHECK_FALSE(eval_local(s, *ctx->guards().index_of(parse_guard("Y(true)", ctx->lifelines()))));
    finish_event(s, d);
    begin_event(s, d);
    CHECK(eval_local(s, *ctx->guards().index_of(parse_guard("Y(true)", ctx->lifelines()))));
  }

  TEST_CASE("at the own lifeline is the formula itself") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      FuzzParams p = small_params(seed);
      const Msc m = gen_random_msc(p);
      p.seed = derive_seed(seed, 5);
      const auto g0 = gen_random_formulas(p, m.lifelines());
      std::vector<Formula> fs = g0.formulas;
      for (const auto& f : g0.formulas)
        for (const auto& l : m.lifelines()) fs.push_back(at(l, f));
      const auto ctx = std::make_shared<const MonitorContext>(m.lifelines(), close_guards(fs));
      Driver run(m, ctx);
      for (EventId e : sample_linear_extension(m, seed)) {
        auto& s = run.mons[m.pid(e)];
        begin_event(s, run.descriptor(e));
        for (const auto& f : g0.formulas) {
          const auto self = ctx->guards().index_of(at(m.lifeline_name(m.pid(e)), f));
          REQUIRE(eval_local(s, *self) == eval_local(s, *ctx->guards().index_of(f)));
        }
        if (auto out = finish_event(s, run.descriptor(e))) run.sent[e] = std::move(out);
      }
    }
  }

  TEST_CASE("errors") {
    const auto ctx = context({"A", "B"}, {"true"});
    auto s = init_monitor(0, ctx);
    EventDescriptor to_self;
    to_self.tag = EventTag::send;
    to_self.receiver = 0;
    CHECK_THROWS_AS(on_event(s, to_self), MonitorError);
    EventDescriptor no_payload;
    no_payload.tag = EventTag::recv;
    CHECK_THROWS_AS(on_event(s, no_payload), MonitorError);
    EventDescriptor no_receiver;
    no_receiver.tag = EventTag::send;
    CHECK_THROWS_AS(on_event(s, no_receiver), MonitorError);
    CHECK_THROWS_AS(eval_local(s, ctx->sub_count()), MonitorError);
    EventDescriptor bad_guard;
    bad_guard.tag = EventTag::choice;
    bad_guard.guard_index = 5;
    CHECK_THROWS_AS(on_event(s, bad_guard), MonitorError);
    EventDescriptor foreign;
    foreign.tag = EventTag::recv;
    foreign.incoming = MessagePayload{VectorClock(3), {}, {}, ""};
    CHECK_THROWS_AS(on_event(s, foreign), MonitorError);
    CHECK_THROWS_AS(std::make_shared<MonitorContext>(std::vector<std::string>{"A"},
                                                     close_guards({at("Z", truth())})),
                    LookupError);
  }

  TEST_CASE("absent variables stay absent") {
    const auto ctx = context({"A", "B"}, {"At[A].x == 1"});
    auto s = init_monitor(0, ctx);
    EventDescriptor d;
    d.store_after = {{"y", int_value(1)}};
    on_event(s, d);
    CHECK_FALSE(s.var_at(0, 0).has_value());
    d.store_after = {{"x", int_value(1)}};
    on_event(s, d);
    CHECK(s.var_at(0, 0) == int_value(1));
    CHECK(s.last_vals[0]);
    d.store_after = {};
    on_event(s, d);
    CHECK_FALSE(s.var_at(0, 0).has_value());
    CHECK_FALSE(s.last_vals[0]);
  }

  TEST_CASE("emitted payloads are snapshots") {
    const auto ctx = context({"A", "B"}, {"At[A].x == 1"});
    auto s = init_monitor(0, ctx);
    EventDescriptor d;
    d.tag = EventTag::send;
    d.receiver = 1;
    d.store_after = {{"x", int_value(1)}};
    d.payload = "hello";
    const auto out = on_event(s, d);
    REQUIRE(out.has_value());
    const auto copy = *out;
    CHECK(out->payload == "hello");
    d.store_after = {{"x", int_value(2)}};
    on_event(s, d);
    CHECK(*out == copy);
    CHECK(out->var[0] == int_value(1));
    CHECK(s.var[0] == int_value(2));
  }
}

TEST_SUITE("coherence and invariants") {
  TEST_CASE("defined entry for an unseen lifeline breaks coherence") {
    RawMsc raw;
    raw.lifelines = {"A", "B"};
    raw.events = {act(0, "A"), act(1, "B")};
    const Msc m = Msc::build(raw);
    const auto ctx = context(m.lifelines(), {"At[B].x == 1"});
    auto s = init_monitor(0, ctx);
    begin_event(s, describe(m, 0));
    REQUIRE(check_coherence(s, m, 0).ok());
    s.view_at(1, 0) = true;
    const auto r = check_coherence(s, m, 0);
    CHECK_FALSE(r.remote);
    CHECK(r.clock);
    CHECK_FALSE(r.ok());
    CHECK_FALSE(r.problems.empty());
  }

  TEST_CASE("each coherence condition is checked") {
    RawMsc raw;
    raw.lifelines = {"A", "B"};
    raw.events = {act(0, "A", {{"x", int_value(1)}}), act(1, "A", {{"x", int_value(2)}}), act(2, "B")};
    const Msc m = Msc::build(chain_in_order(raw));
    const auto ctx = context(m.lifelines(), {"Y(x == 1)", "At[A].x == 2"});
    auto s = init_monitor(0, ctx);
    on_event(s, describe(m, 0));
    begin_event(s, describe(m, 1));
    REQUIRE(check_coherence(s, m, 1).ok());

    auto clock = s;
    clock.vc[0] = 5;
    CHECK_FALSE(check_coherence(clock, m, 1).clock);
    auto store = s;
    store.store = {{"x", int_value(9)}};
    CHECK_FALSE(check_coherence(store, m, 1).local);
    auto own_var = s;
    own_var.var_at(0, 0) = int_value(7);
    CHECK_FALSE(check_coherence(own_var, m, 1).local);
    auto old = s;
    old.old.flip();
    CHECK_FALSE(check_coherence(old, m, 1).previous);
  }

  TEST_CASE("invariants detect tampering") {
    RawMsc raw;
    raw.lifelines = {"A", "B"};
    raw.events = {act(0, "A", {{"x", int_value(1)}}), act(1, "B", {{"x", int_value(1)}})};
    const Msc m = Msc::build(raw);
    const auto ctx = context(m.lifelines(), {"At[B].x == 1 || x == 1"});
    const SatTable truth(m, ctx->guards());
    auto s = init_monitor(0, ctx);
    on_event(s, describe(m, 0));
    REQUIRE(check_invariants(s, m, 0, truth).ok());
    auto presence = s;
    presence.var_at(1, 0) = int_value(1);
    CHECK_FALSE(check_invariants(presence, m, 0, truth).presence);
    auto views = s;
    views.view_at(0, ctx->guards().roots[0]) = false;
    CHECK_FALSE(check_invariants(views, m, 0, truth).views);
    auto vars = s;
    vars.var_at(0, 0) = int_value(3);
    CHECK_FALSE(check_invariants(vars, m, 0, truth).vars);
    auto clock = s;
    clock.vc[1] = 1;
    CHECK_FALSE(check_invariants(clock, m, 0, truth).clock);
  }

  TEST_CASE("clock components count the causal past") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const Msc m = gen_random_msc(small_params(seed, 4, 5));
      const oracle::Reach r(m);
      Driver run(m, context(m.lifelines(), {"true"}));
      for (EventId e : sample_linear_extension(m, seed)) {
        run.step(e);
        for (LifelineIndex b = 0; b < m.lifeline_count(); ++b)
          REQUIRE(run.mons[m.pid(e)].vc[b] == oracle::visible_count(m, r, e, b));
      }
    }
  }

  TEST_CASE("receive merge never copies the receiver's own row") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      FuzzParams p = small_params(seed, 4, 6);
      p.message_probability = 0.8;
      const Msc m = gen_random_msc(p);
      p.seed = derive_seed(seed, 3);
      const auto ctx = std::make_shared<const MonitorContext>(m.lifelines(), gen_random_formulas(p, m.lifelines()));
      Driver run(m, ctx);
      for (EventId e : sample_linear_extension(m, seed)) {
        auto& s = run.mons[m.pid(e)];
        const auto d = run.descriptor(e);
        if (d.incoming) {
          REQUIRE(d.incoming->vc[s.me] <= s.vc[s.me]);
          std::vector<std::optional<bool>> before(s.view.begin() + static_cast<long>(s.me * ctx->sub_count()),
                                                  s.view.begin() + static_cast<long>((s.me + 1) * ctx->sub_count()));
          begin_event(s, d);
          for (std::size_t psi = 0; psi < ctx->sub_count(); ++psi) REQUIRE(s.view_at(s.me, psi) == before[psi]);
          if (auto out = finish_event(s, d)) run.sent[e] = std::move(out);
        } else {
          run.step(e);
        }
      }
    }
  }

  TEST_CASE("monitor values equal the denotation on random charts") {
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      const auto inst = make_fuzz_instance(FuzzParams{}, seed);
      const auto ext = sample_linear_extension(inst.msc, seed);
      const auto rep = differential_check(inst.msc, inst.guards, ext);
      INFO("seed " << seed);
      REQUIRE(rep.mismatches.empty());
      REQUIRE(rep.coherence_failures.empty());
      REQUIRE(rep.invariant_failures.empty());
      REQUIRE(rep.events == inst.msc.size());
    }
  }

  TEST_CASE("verdicts do not depend on the linear extension") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto inst = make_fuzz_instance(FuzzParams{}, seed);
      const auto first = differential_check(inst.msc, inst.guards, sample_linear_extension(inst.msc, 1)).values;
      for (std::uint64_t k = 2; k < 6; ++k)
        REQUIRE(differential_check(inst.msc, inst.guards, sample_linear_extension(inst.msc, k)).values == first);
    }
  }
}

TEST_SUITE("mutations") {
  TEST_CASE("names") {
    for (auto m : {Mutation::none, Mutation::swap_merge_order, Mutation::strict_at, Mutation::old_copy_timing})
      CHECK(parse_mutation(to_string(m)) == m);
    CHECK_FALSE(parse_mutation("bogus").has_value());
  }

  TEST_CASE("merging clocks before copying loses a relayed view") {
    // B's value reaches C only through A.
    RawMsc raw;
    raw.lifelines = {"A", "B", "C"};
    raw.events = {send(0, "B", "A", {{"x", int_value(1)}}), recv(1, "A"), send(2, "A", "C"), recv(3, "C"),
                  choice(4, "C")};
    raw.messages = {{0, 1}, {2, 3}};
    const Msc m = Msc::build(chain_in_order(raw));
    const auto g = make_guard_set({parse_guard("At[B].x == 1", m.lifelines())}, m.lifelines());
    const auto ext = m.topological_order();
    const auto good = differential_check(m, g, ext);
    CHECK(good.ok());
    CHECK(good.values[m.event_by_label(4)][g.roots[0]]);
    const auto bad = differential_check(m, g, ext, {Mutation::swap_merge_order, false});
    CHECK_FALSE(bad.mismatches.empty());
    CHECK_FALSE(bad.values[m.event_by_label(4)][g.roots[0]]);
  }

  TEST_CASE("strict self modality reads the previous event") {
    RawMsc raw;
    raw.lifelines = {"A"};
    raw.events = {act(0, "A", {{"x", int_value(0)}}), act(1, "A", {{"x", int_value(1)}})};
    const Msc m = Msc::build(chain_in_order(raw));
    const auto g = make_guard_set({parse_guard("at(A, x == 1)", m.lifelines())}, m.lifelines());
    CHECK(differential_check(m, g, m.topological_order()).ok());
    CHECK_FALSE(differential_check(m, g, m.topological_order(), {Mutation::strict_at, false}).mismatches.empty());
  }

  TEST_CASE("late copy of previous values") {
    RawMsc raw;
    raw.lifelines = {"A"};
    raw.events = {act(0, "A", {{"x", int_value(0)}}), act(1, "A", {{"x", int_value(1)}})};
    const Msc m = Msc::build(chain_in_order(raw));
    const auto g = make_guard_set({parse_guard("Y(x == 1)", m.lifelines())}, m.lifelines());
    CHECK(differential_check(m, g, m.topological_order()).ok());
    const auto bad = differential_check(m, g, m.topological_order(), {Mutation::old_copy_timing, false});
    CHECK_FALSE(bad.mismatches.empty());
  }
}

TEST_SUITE("wire format") {
  TEST_CASE("round trip") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto inst = make_fuzz_instance(FuzzParams{}, seed);
      const auto ctx = std::make_shared<const MonitorContext>(inst.msc.lifelines(), inst.guards);
      Driver run(inst.msc, ctx);
      for (EventId e : sample_linear_extension(inst.msc, seed)) {
        run.step(e);
        if (!run.sent[e]) continue;
        const auto j = payload_to_json(*run.sent[e], *ctx);
        REQUIRE(payload_from_json(j, *ctx) == *run.sent[e]);
        REQUIRE(payload_from_json(json::parse(j.dump()), *ctx) == *run.sent[e]);
      }
    }
  }

  TEST_CASE("shape") {
    const auto ctx = context({"A", "B"}, {"At[A].x == 1"});
    auto s = init_monitor(0, ctx);
    EventDescriptor d;
    d.tag = EventTag::send;
    d.receiver = 1;
    d.store_after = {{"x", int_value(1)}};
    const auto j = payload_to_json(*on_event(s, d), *ctx);
    CHECK(j.at("vc") == json{{"A", 1}, {"B", 0}});
    CHECK(j.at("view").size() == ctx->sub_count());
    CHECK(j.at("view")[0][0] == "A");
    CHECK(j.at("var") == json::parse(R"([["A", "x", {"int": 1}]])"));
    CHECK(j.at("payload") == "");
  }

  TEST_CASE("malformed payloads") {
    const auto ctx = context({"A", "B"}, {"At[A].x == 1"});
    const auto ok = json::parse(R"({"vc": {"A": 1, "B": 0}, "view": [["A", 0, true]],
                                    "var": [["A", "x", {"int": 1}]], "payload": ""})");
    CHECK_NOTHROW(payload_from_json(ok, *ctx));
    auto extra = ok;
    extra["more"] = 1;
    CHECK_THROWS_AS(payload_from_json(extra, *ctx), FormatError);
    auto lane = ok;
    lane["view"][0][0] = "Z";
    CHECK_THROWS_AS(payload_from_json(lane, *ctx), FormatError);
    auto index = ok;
    index["view"][0][1] = 9;
    CHECK_THROWS_AS(payload_from_json(index, *ctx), FormatError);
    auto var = ok;
    var["var"][0][1] = "y";
    CHECK_THROWS_AS(payload_from_json(var, *ctx), FormatError);
    auto clock = ok;
    clock["vc"].erase("B");
    CHECK_THROWS_AS(payload_from_json(clock, *ctx), FormatError);
    auto negative = ok;
    negative["vc"]["A"] = -1;
    CHECK_THROWS_AS(payload_from_json(negative, *ctx), FormatError);
  }
}
