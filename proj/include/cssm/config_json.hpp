#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "cssm/model.hpp"

namespace cssm {

// Rejects unknown keys so config typos fail loudly.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& context);

ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& cfg);

}  // namespace cssm
