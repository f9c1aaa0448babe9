#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace neurolens {

struct SchemaViolation {
    std::string path;     ///< JSON pointer into the instance, "" for the root
    std::string message;
    friend bool operator==(const SchemaViolation&, const SchemaViolation&) = default;
};

/**
 * Validates `instance` against a JSON Schema subset: type, const, enum,
 * properties, required, additionalProperties (boolean or schema), items,
 * minItems, maxItems, minimum, maximum, exclusiveMinimum, exclusiveMaximum,
 * minLength, maxLength, pattern and format "date-time". Unknown keywords are
 * ignored. Every violation is reported, not only the first.
 */
std::vector<SchemaViolation> validate_json_schema(const nlohmann::json& instance, const nlohmann::json& schema);

}  // namespace neurolens
