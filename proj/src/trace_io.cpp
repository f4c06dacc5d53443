#include "cpl/trace_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cpl {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw FormatError(msg); }

std::uint64_t event_id(const json& j, std::string_view where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    bad(std::string(where) + ": event ids must be non-negative integers");
  return j.get<std::uint64_t>();
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> id_pairs(const json& j, std::string_view key) {
  if (!j.is_array()) bad(std::string(key) + " must be an array");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) bad(std::string(key) + " entries must be [from, to] pairs");
    out.emplace_back(event_id(p[0], key), event_id(p[1], key));
  }
  return out;
}

}  // namespace

void require_keys_within(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  if (!obj.is_object()) bad(std::string(where) + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      bad("unknown key '" + item.key() + "' in " + std::string(where));
  }
}

json value_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>)
          return json{{"int", x}};
        else if constexpr (std::is_same_v<T, std::string>)
          return json{{"str", x}};
        else
          return json{{"bool", x}};
      },
      v);
}

Value value_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) bad("value must be a single-key object {int|str|bool: ...}");
  const auto& [key, x] = *j.items().begin();
  if (key == "int") {
    if (!x.is_number_integer()) bad("\"int\" value must be an integer");
    return int_value(x.get<std::int64_t>());
  }
  if (key == "str") {
    if (!x.is_string()) bad("\"str\" value must be a string");
    return str_value(x.get<std::string>());
  }
  if (key == "bool") {
    if (!x.is_boolean()) bad("\"bool\" value must be a boolean");
    return bool_value(x.get<bool>());
  }
  bad("unknown value tag '" + key + "'");
}

json valuation_to_json(const Valuation& vars) {
  json out = json::object();
  for (const auto& [name, v] : vars) out[name] = value_to_json(v);
  return out;
}

Valuation valuation_from_json(const json& j) {
  if (!j.is_object()) bad("vars must be an object");
  Valuation out;
  for (const auto& [name, v] : j.items()) out.emplace(name, value_from_json(v));
  return out;
}

RawMsc trace_from_json(const json& j, std::initializer_list<std::string_view> extra_keys) {
  if (!j.is_object()) bad("trace must be a JSON object");
  for (const auto& item : j.items()) {
    static constexpr std::string_view known[] = {"lifelines", "events", "succ", "messages"};
    if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known) &&
        std::find(extra_keys.begin(), extra_keys.end(), item.key()) == extra_keys.end())
      bad("unknown key '" + item.key() + "' in trace");
  }
  if (!j.contains("lifelines") || !j.contains("events")) bad("trace needs 'lifelines' and 'events'");

  RawMsc raw;
  const auto& lifelines = j.at("lifelines");
  if (!lifelines.is_array()) bad("lifelines must be an array");
  for (const auto& l : lifelines) {
    if (!l.is_string()) bad("lifeline names must be strings");
    raw.lifelines.push_back(l.get<std::string>());
  }

  const auto& events = j.at("events");
  if (!events.is_array()) bad("events must be an array");
  for (const auto& ev : events) {
    require_keys_within(ev, {"id", "lifeline", "kind", "receiver", "vars"}, "event");
    if (!ev.contains("id") || !ev.contains("lifeline") || !ev.contains("kind"))
      bad("event needs 'id', 'lifeline' and 'kind'");
    RawEvent e;
    e.id = event_id(ev.at("id"), "event");
    if (!ev.at("lifeline").is_string()) bad("event lifeline must be a string");
    e.lifeline = ev.at("lifeline").get<std::string>();
    if (!ev.at("kind").is_string()) bad("event kind must be a string");
    auto tag = parse_event_tag(ev.at("kind").get<std::string>());
    if (!tag) bad("unknown event kind '" + ev.at("kind").get<std::string>() + "'");
    e.tag = *tag;
    if (ev.contains("receiver")) {
      if (!ev.at("receiver").is_string()) bad("receiver must be a string");
      e.receiver = ev.at("receiver").get<std::string>();
    }
    if (ev.contains("vars")) e.vars = valuation_from_json(ev.at("vars"));
    raw.events.push_back(std::move(e));
  }
  if (j.contains("succ")) raw.succ = id_pairs(j.at("succ"), "succ");
  if (j.contains("messages")) raw.messages = id_pairs(j.at("messages"), "messages");
  return raw;
}

json trace_to_json(const RawMsc& raw) {
  json events = json::array();
  for (const auto& e : raw.events) {
    json ev = {{"id", e.id}, {"lifeline", e.lifeline}, {"kind", std::string(to_string(e.tag))}};
    if (e.receiver) ev["receiver"] = *e.receiver;
    ev["vars"] = valuation_to_json(e.vars);
    events.push_back(std::move(ev));
  }
  auto pairs = [](const auto& ps) {
    json out = json::array();
    for (const auto& [a, b] : ps) out.push_back({a, b});
    return out;
  };
  return json{{"lifelines", raw.lifelines},
              {"events", std::move(events)},
              {"succ", pairs(raw.succ)},
              {"messages", pairs(raw.messages)}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    bad(path.string() + ": " + e.what());
  }
}

RawMsc load_trace(const std::filesystem::path& path) { return trace_from_json(read_json_file(path)); }

}  // namespace cpl
