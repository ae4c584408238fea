#pragma once

#include <string>

#include <json.hpp>

namespace kinreg::json_out {

/// Serializes with 17 significant digits per number and sorted object keys;
/// non-finite numbers become null. Output ends with a newline.
std::string dump(const nlohmann::json& j, int indent = 2);

/// %.17g formatting shared with the CSV writers.
std::string number(double v);

}  // namespace kinreg::json_out
