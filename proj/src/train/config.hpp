// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Single JSON configuration schema shared by every pipeline command.
// A resolved config is defaults <- user file <- dotted overrides, with
// unknown keys and type mismatches rejected by name.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace geode {

// Full configuration tree with every default filled in.
nlohmann::json default_config();

// Merge user keys over the defaults. Unknown keys or type mismatches
// throw ConfigError naming the offending key.
nlohmann::json resolve_config(const nlohmann::json& user,
                              const std::vector<std::string>& overrides);

// Parses "a.b.c=value" against the defaults tree; the value is parsed as
// JSON when valid, else taken as a string.
void apply_override(nlohmann::json& cfg, const std::string& spec);

// Human-readable schema listing: dotted key, JSON type, default.
std::string schema_text();

}  // namespace geode
