#include "neurolens/json_schema.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <fmt/format.h>

namespace neurolens {

namespace {

using nlohmann::json;

std::string escape_pointer_token(const std::string& token) {
    std::string out;
    for (char c : token) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

bool has_type(const json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    if (type == "number") return value.is_number();
    if (type == "integer") {
        if (value.is_number_integer()) return true;
        if (value.is_number_float()) {
            const double d = value.get<double>();
            return std::isfinite(d) && d == std::floor(d);
        }
    }
    return false;
}

std::size_t utf8_length(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) {
            ++n;
        }
    }
    return n;
}

bool is_date_time(const std::string& s) {
    static const std::regex re(R"(^\d{4}-(0[1-9]|1[0-2])-(0[1-9]|[12]\d|3[01])[Tt]([01]\d|2[0-3]):[0-5]\d:([0-5]\d|60)(\.\d+)?([Zz]|[+-]([01]\d|2[0-3]):[0-5]\d)$)");
    return std::regex_match(s, re);
}

class Validator {
public:
    std::vector<SchemaViolation> violations;

    void check(const json& value, const json& schema, const std::string& path) {
        if (schema.is_boolean()) {
            if (!schema.get<bool>()) {
                fail(path, "no value is allowed here");
            }
            return;
        }
        if (!schema.is_object()) {
            return;
        }
        if (auto it = schema.find("type"); it != schema.end() && !check_type(value, *it, path)) {
            return;
        }
        if (auto it = schema.find("const"); it != schema.end() && value != *it) {
            fail(path, fmt::format("must equal {}", it->dump()));
        }
        if (auto it = schema.find("enum"); it != schema.end() && it->is_array()) {
            if (std::find(it->begin(), it->end(), value) == it->end()) {
                fail(path, fmt::format("{} is not one of {}", value.dump(), it->dump()));
            }
        }
        if (value.is_number()) {
            check_number(value.get<double>(), schema, path);
        }
        if (value.is_string()) {
            check_string(value.get<std::string>(), schema, path);
        }
        if (value.is_array()) {
            check_array(value, schema, path);
        }
        if (value.is_object()) {
            check_object(value, schema, path);
        }
    }

private:
    void fail(const std::string& path, std::string message) {
        violations.push_back({path, std::move(message)});
    }

    bool check_type(const json& value, const json& type, const std::string& path) {
        if (type.is_string()) {
            if (!has_type(value, type.get<std::string>())) {
                fail(path, fmt::format("expected {}, found {}", type.get<std::string>(), value.type_name()));
                return false;
            }
            return true;
        }
        if (type.is_array()) {
            for (const auto& t : type) {
                if (t.is_string() && has_type(value, t.get<std::string>())) {
                    return true;
                }
            }
            fail(path, fmt::format("expected one of {}, found {}", type.dump(), value.type_name()));
            return false;
        }
        return true;
    }

    void check_number(double v, const json& schema, const std::string& path) {
        if (auto it = schema.find("minimum"); it != schema.end() && it->is_number() && v < it->get<double>()) {
            fail(path, fmt::format("{} is below the minimum {}", v, it->get<double>()));
        }
        if (auto it = schema.find("maximum"); it != schema.end() && it->is_number() && v > it->get<double>()) {
            fail(path, fmt::format("{} exceeds the maximum {}", v, it->get<double>()));
        }
        if (auto it = schema.find("exclusiveMinimum"); it != schema.end() && it->is_number() && v <= it->get<double>()) {
            fail(path, fmt::format("{} must be greater than {}", v, it->get<double>()));
        }
        if (auto it = schema.find("exclusiveMaximum"); it != schema.end() && it->is_number() && v >= it->get<double>()) {
            fail(path, fmt::format("{} must be less than {}", v, it->get<double>()));
        }
    }

    void check_string(const std::string& s, const json& schema, const std::string& path) {
        const std::size_t n = utf8_length(s);
        if (auto it = schema.find("minLength"); it != schema.end() && n < it->get<std::size_t>()) {
            fail(path, fmt::format("string shorter than {} characters", it->get<std::size_t>()));
        }
        if (auto it = schema.find("maxLength"); it != schema.end() && n > it->get<std::size_t>()) {
            fail(path, fmt::format("string longer than {} characters", it->get<std::size_t>()));
        }
        if (auto it = schema.find("pattern"); it != schema.end() && it->is_string()) {
            if (!std::regex_search(s, std::regex(it->get<std::string>(), std::regex::ECMAScript))) {
                fail(path, fmt::format("does not match pattern {}", it->dump()));
            }
        }
        if (auto it = schema.find("format"); it != schema.end() && *it == "date-time" && !is_date_time(s)) {
            fail(path, fmt::format("'{}' is not an RFC 3339 date-time", s));
        }
    }

    void check_array(const json& value, const json& schema, const std::string& path) {
        if (auto it = schema.find("minItems"); it != schema.end() && value.size() < it->get<std::size_t>()) {
            fail(path, fmt::format("array has fewer than {} items", it->get<std::size_t>()));
        }
        if (auto it = schema.find("maxItems"); it != schema.end() && value.size() > it->get<std::size_t>()) {
            fail(path, fmt::format("array has more than {} items", it->get<std::size_t>()));
        }
        if (auto it = schema.find("items"); it != schema.end()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                check(value[i], *it, fmt::format("{}/{}", path, i));
            }
        }
    }

    void check_object(const json& value, const json& schema, const std::string& path) {
        if (auto it = schema.find("required"); it != schema.end() && it->is_array()) {
            for (const auto& key : *it) {
                if (key.is_string() && !value.contains(key.get<std::string>())) {
                    fail(fmt::format("{}/{}", path, escape_pointer_token(key.get<std::string>())),
                         fmt::format("required property '{}' is missing", key.get<std::string>()));
                }
            }
        }
        const json* properties = nullptr;
        if (auto it = schema.find("properties"); it != schema.end() && it->is_object()) {
            properties = &*it;
        }
        const auto additional = schema.find("additionalProperties");
        for (const auto& [key, member] : value.items()) {
            const std::string member_path = fmt::format("{}/{}", path, escape_pointer_token(key));
            if (properties != nullptr && properties->contains(key)) {
                check(member, (*properties)[key], member_path);
            } else if (additional != schema.end()) {
                if (additional->is_boolean() && !additional->get<bool>()) {
                    fail(member_path, fmt::format("property '{}' is not allowed", key));
                } else if (additional->is_object()) {
                    check(member, *additional, member_path);
                }
            }
        }
    }
};

}  // namespace

std::vector<SchemaViolation> validate_json_schema(const nlohmann::json& instance, const nlohmann::json& schema) {
    Validator v;
    v.check(instance, schema, "");
    return v.violations;
}

}  // namespace neurolens
