#include "integ/report.hpp"

#include <cmath>
#include <cstdio>

#include "integ/report_schema.hpp"

namespace integ::cli {

std::string_view report_schema() { return kReportSchema; }

nlohmann::json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

nlohmann::json claim(double value, double tolerance, bool passed) {
    return {{"value", number(value)}, {"tolerance", tolerance}, {"passed", passed}};
}

nlohmann::json residual_claim(double value, double tolerance) {
    return claim(value, tolerance, std::isfinite(value) && value < tolerance);
}

nlohmann::json to_json(const Vec& v) {
    auto out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
    return out;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace integ::cli
