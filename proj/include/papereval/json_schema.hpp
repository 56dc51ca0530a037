#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace papereval {

using Json = nlohmann::json;
/// Object keys keep insertion order; used where output order matters.
using OrderedJson = nlohmann::ordered_json;

/// Validates `value` against a JSON-Schema subset: type, properties,
/// required, items, enum, minimum/maximum, minItems/maxItems,
/// additionalProperties=false. Returns the first violation as a path and
/// message, or nullopt when valid.
std::optional<std::string> validate_schema(const Json& value, const Json& schema);

/// Pulls a JSON value out of model output: a ```json fenced block first,
/// then any fenced block, then the outermost {...} or [...] span.
std::optional<Json> extract_json(std::string_view text);

}  // namespace papereval
