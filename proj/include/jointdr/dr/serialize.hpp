#pragma once

#include "json.hpp"
#include "jointdr/core/grid.hpp"
#include "jointdr/dr/dr_model.hpp"

namespace jointdr {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json grid_to_json(const ThresholdGrid& grid);
ThresholdGrid grid_from_json(const nlohmann::json& j);

nlohmann::json design_to_json(const DesignSpec& design);
DesignSpec design_from_json(const nlohmann::json& j);

/// Versioned envelope {"format", "version", "kind": "dr", ...}. Doubles are
/// written in shortest round-trip form, so a reload reproduces every grid
/// point and coefficient bit for bit.
nlohmann::json to_json(const DrModel& model);
DrModel dr_model_from_json(const nlohmann::json& j);

/// Throws InputError unless `j` is a model envelope of this version and kind.
void check_envelope(const nlohmann::json& j, std::string_view kind);

}  // namespace jointdr
