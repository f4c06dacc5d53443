#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cpl/msc.hpp"
#include "cpl/simulator.hpp"

namespace cpl::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(CPL_FIXTURE_DIR) / name; }

inline RawEvent act(std::uint64_t id, std::string lane, Valuation vars = {}) {
  return {id, std::move(lane), EventTag::act, std::nullopt, std::move(vars)};
}
inline RawEvent choice(std::uint64_t id, std::string lane, Valuation vars = {}) {
  return {id, std::move(lane), EventTag::choice, std::nullopt, std::move(vars)};
}
inline RawEvent recv(std::uint64_t id, std::string lane, Valuation vars = {}) {
  return {id, std::move(lane), EventTag::recv, std::nullopt, std::move(vars)};
}
inline RawEvent send(std::uint64_t id, std::string lane, std::string to, Valuation vars = {}) {
  return {id, std::move(lane), EventTag::send, std::move(to), std::move(vars)};
}

/// Adds succ edges so that each lifeline's events follow their listed order.
inline RawMsc chain_in_order(RawMsc raw) {
  std::map<std::string, std::uint64_t> tail;
  for (const auto& ev : raw.events) {
    if (auto it = tail.find(ev.lifeline); it != tail.end()) raw.succ.emplace_back(it->second, ev.id);
    tail[ev.lifeline] = ev.id;
  }
  return raw;
}

/// Six events on three lifelines: A sends to B, C runs two independent acts.
inline Msc diamond() {
  RawMsc raw;
  raw.lifelines = {"A", "B", "C"};
  raw.events = {send(0, "A", "B"), act(1, "A"), act(2, "B"), recv(3, "B"), act(4, "C"), act(5, "C")};
  raw.messages = {{0, 3}};
  return Msc::build(chain_in_order(raw));
}

inline FuzzParams small_params(std::uint64_t seed, std::size_t lifelines = 3, std::size_t events = 5) {
  FuzzParams p;
  p.seed = seed;
  p.lifelines = lifelines;
  p.events_per_lifeline = events;
  return p;
}

}  // namespace cpl::test
