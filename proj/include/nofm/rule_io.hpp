#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "nofm/catalog.hpp"
#include "nofm/errors.hpp"
#include "nofm/rules.hpp"

namespace nofm {

// Parses one line of rule JSON against the catalog. The schema is strict:
// unknown types, unknown keys, missing keys, wrong value types, unknown
// features, kind mismatches, out-of-range parameters and logical nesting
// past max_depth all throw RuleError.
Rule parse_rule(std::string_view line, const FeatureCatalog& meta,
                int max_depth);

// Same validation, starting from an already-parsed JSON value.
Rule rule_from_json(const nlohmann::json& j, const FeatureCatalog& meta,
                    int max_depth);

// Canonical one-line serialization: sorted keys, shortest round-trippable
// numbers, sorted category sets. parse_rule(serialize_rule(r)) is
// structurally identical to r.
std::string serialize_rule(const Rule& r);
nlohmann::json rule_to_json(const Rule& r);

}  // namespace nofm
