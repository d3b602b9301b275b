#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "scal/extended_mdp.hpp"
#include "scal/harness.hpp"
#include "scal/mdp.hpp"

namespace scal {

using Json = nlohmann::json;

/// Malformed or missing configuration; `field` names the offending entry.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& field, const std::string& message)
        : std::runtime_error(field + ": " + message), field(field) {}
    std::string field;
};

Json load_json_file(const std::string& path);

FiniteMdp mdp_from_json(const Json& j);
Json mdp_to_json(const FiniteMdp& mdp);

/// {"probs": [[...], ...]} or {"actions": [a0, a1, ...]}
DecisionRule rule_from_json(const Json& j, const FiniteMdp& mdp);
Json rule_to_json(const DecisionRule& d);

Json bmdp_to_json(const BoundedParamMdp& bmdp);
BoundedParamMdp bmdp_from_json(const Json& j);

RunConfig run_config_from_json(const Json& j);
AgentConfig agent_config_from_json(const Json& j);

}  // namespace scal
