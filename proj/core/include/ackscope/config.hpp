#pragma once

// YAML loaders for the profile catalog, scenarios and mitigation blocks.
// Errors are reported as ValidationError carrying the offending line.

#include <string>
#include <string_view>

#include "ackscope/device.hpp"
#include "ackscope/mitigation.hpp"
#include "ackscope/simulation.hpp"

namespace ackscope {

ProfileCatalog parse_profile_catalog(std::string_view yaml);
ProfileCatalog load_profile_catalog(const std::string& path);

Scenario parse_scenario(std::string_view yaml, const ProfileCatalog& catalog = ProfileCatalog::builtin());
Scenario load_scenario(const std::string& path, const ProfileCatalog& catalog = ProfileCatalog::builtin());

// A standalone `mitigations:` mapping (same keys as in scenarios).
MitigationConfig parse_mitigations(std::string_view yaml);

std::string profile_to_yaml(const PlatformProfile& profile);

}  // namespace ackscope
