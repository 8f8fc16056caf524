#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace extctrl {

/// Shortest text that is stable across runs: 17 significant digits, "%.17g".
/// Non-finite values render as "inf", "-inf" or "nan".
std::string format_double(double v);

/// Serializes JSON with object keys in sorted order and every floating-point
/// number printed with 17 significant digits. Non-finite numbers become null.
std::string dump_json(const nlohmann::json& j, int indent = 2);

}  // namespace extctrl
