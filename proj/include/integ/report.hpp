#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "integ/types.hpp"

namespace integ::cli {

inline constexpr const char* kToolName = "intcheck";
inline constexpr const char* kToolVersion = "1.0.0";

/// JSON Schema (draft 2020-12) of the report written by `intcheck check`.
std::string_view report_schema();

/// {"value", "tolerance", "passed"}; non-finite values become null.
nlohmann::json claim(double value, double tolerance, bool passed);
/// A residual that passes when strictly below its tolerance.
nlohmann::json residual_claim(double value, double tolerance);

nlohmann::json number(double v);
nlohmann::json to_json(const Vec& v);
std::string hex64(std::uint64_t h);

}  // namespace integ::cli
