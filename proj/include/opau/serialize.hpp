#pragma once

#include <nlohmann/json_fwd.hpp>

#include <filesystem>

#include "opau/activations.hpp"

namespace opau {

/// {"basis": str, "k": int, "l": int, "c": [...], "d": [...], "safe": bool}.
/// Coefficients round-trip at full binary-to-decimal fidelity.
nlohmann::json to_json(const OpauParams& params);
OpauParams opau_params_from_json(const nlohmann::json& doc);

void save_opau_params(const std::filesystem::path& path, const OpauParams& params);
OpauParams load_opau_params(const std::filesystem::path& path);

}  // namespace opau
