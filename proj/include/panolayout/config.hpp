#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "panolayout/training.hpp"

namespace panolayout {

/// Flat TOML subset: `key = value` lines, `#` comments, an optional
/// `[train]` table, and string, integer, float and boolean values. Returns
/// keys with string quotes removed from their values.
std::map<std::string, std::string> parse_flat_toml(const std::string& text);

/// Overrides fields of base with the keys present; unknown keys are errors.
TrainConfig train_config_from_toml(const std::string& text, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});
std::string train_config_to_toml(const TrainConfig& cfg);

}  // namespace panolayout
