#pragma once

#include <string>
#include <vector>

#include "uavm/sim.hpp"

namespace uavm {

inline constexpr int kSchemaVersion = 1;

/// Strict parse: unknown keys, wrong shapes and wrong schema_version are
/// ConfigErrors carrying the offending field path.
Scenario scenario_from_json(const std::string &json_text);

Scenario load_scenario(const std::string &path);

/// Canonical, fully explicit single-line form; embedding it in a log makes the
/// log self-describing.
std::string scenario_to_json(const Scenario &scenario);

Scenario builtin_scenario(const std::string &name);
std::vector<std::string> builtin_scenario_names();

} // namespace uavm
