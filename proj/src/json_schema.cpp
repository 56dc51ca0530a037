#include "papereval/json_schema.hpp"

#include <algorithm>

namespace papereval {

namespace {

bool type_matches(const Json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>())));
    if (type == "number") return v.is_number();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    return false;
}

std::optional<std::string> check(const Json& v, const Json& schema, const std::string& path) {
    if (!schema.is_object()) return std::nullopt;
    if (auto t = schema.find("type"); t != schema.end()) {
        bool ok = false;
        if (t->is_string()) {
            ok = type_matches(v, t->get<std::string>());
        } else if (t->is_array()) {
            ok = std::any_of(t->begin(), t->end(), [&](const Json& x) { return x.is_string() && type_matches(v, x.get<std::string>()); });
        }
        if (!ok) return path + ": expected type " + t->dump();
    }
    if (auto e = schema.find("enum"); e != schema.end() && e->is_array()) {
        if (std::find(e->begin(), e->end(), v) == e->end()) return path + ": value " + v.dump() + " not in " + e->dump();
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (auto m = schema.find("minimum"); m != schema.end() && x < m->get<double>()) return path + ": below minimum " + m->dump();
        if (auto m = schema.find("maximum"); m != schema.end() && x > m->get<double>()) return path + ": above maximum " + m->dump();
    }
    if (v.is_object()) {
        if (auto req = schema.find("required"); req != schema.end() && req->is_array()) {
            for (const auto& name : *req) {
                if (!v.contains(name.get<std::string>())) return path + ": missing required property '" + name.get<std::string>() + "'";
            }
        }
        const auto props = schema.find("properties");
        if (props != schema.end() && props->is_object()) {
            for (auto it = props->begin(); it != props->end(); ++it) {
                if (auto sub = v.find(it.key()); sub != v.end()) {
                    if (auto err = check(*sub, it.value(), path + "." + it.key())) return err;
                }
            }
        }
        if (auto ap = schema.find("additionalProperties"); ap != schema.end() && ap->is_boolean() && !ap->get<bool>()) {
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (props == schema.end() || !props->contains(it.key())) return path + ": unexpected property '" + it.key() + "'";
            }
        }
    }
    if (v.is_array()) {
        if (auto m = schema.find("minItems"); m != schema.end() && v.size() < m->get<std::size_t>()) return path + ": fewer than " + m->dump() + " items";
        if (auto m = schema.find("maxItems"); m != schema.end() && v.size() > m->get<std::size_t>()) return path + ": more than " + m->dump() + " items";
        if (auto items = schema.find("items"); items != schema.end()) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (auto err = check(v[i], *items, path + "[" + std::to_string(i) + "]")) return err;
            }
        }
    }
    return std::nullopt;
}

std::optional<Json> try_parse(std::string_view s) {
    auto parsed = Json::parse(s.begin(), s.end(), nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    return parsed;
}

}  // namespace

std::optional<std::string> validate_schema(const Json& value, const Json& schema) { return check(value, schema, "$"); }

std::optional<Json> extract_json(std::string_view text) {
    // Fenced blocks, preferring ones tagged json.
    std::optional<Json> any_fenced;
    std::size_t i = 0;
    while (true) {
        const auto open = text.find("```", i);
        if (open == std::string_view::npos) break;
        const auto nl = text.find('\n', open);
        if (nl == std::string_view::npos) break;
        const auto close = text.find("```", nl);
        if (close == std::string_view::npos) break;
        const auto tag = text.substr(open + 3, nl - open - 3);
        auto parsed = try_parse(text.substr(nl + 1, close - nl - 1));
        if (parsed) {
            if (tag.find("json") != std::string_view::npos) return parsed;
            if (!any_fenced) any_fenced = std::move(parsed);
        }
        i = close + 3;
    }
    if (any_fenced) return any_fenced;
    if (auto whole = try_parse(text)) return whole;
    for (const char open : {'{', '['}) {
        const char close = open == '{' ? '}' : ']';
        const auto b = text.find(open);
        const auto e = text.rfind(close);
        if (b != std::string_view::npos && e != std::string_view::npos && e > b) {
            if (auto parsed = try_parse(text.substr(b, e - b + 1))) return parsed;
        }
    }
    return std::nullopt;
}

}  // namespace papereval
