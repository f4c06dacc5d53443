#pragma once

#include <filesystem>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cpl/msc.hpp"
#include "cpl/value.hpp"

namespace cpl {

using json = nlohmann::json;

/// Malformed JSON input: wrong types, missing or unknown keys.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"int":n} | {"str":s} | {"bool":b}
json value_to_json(const Value& v);
Value value_from_json(const json& j);

json valuation_to_json(const Valuation& vars);
Valuation valuation_from_json(const json& j);

/// Trace format: {lifelines, events:[{id, lifeline, kind, receiver?, vars}],
/// succ:[[from,to]], messages:[[send,recv]]}. Keys outside that set are
/// rejected unless listed in `extra_keys` (used by formats that embed a trace).
RawMsc trace_from_json(const json& j, std::initializer_list<std::string_view> extra_keys = {});
json trace_to_json(const RawMsc& raw);

json read_json_file(const std::filesystem::path& path);
RawMsc load_trace(const std::filesystem::path& path);

/// Rejects keys of `obj` outside `allowed`; `where` names the object in the message.
void require_keys_within(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where);

}  // namespace cpl
