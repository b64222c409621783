#pragma once

#include "json.hpp"
#include "lionlab/harness.hpp"

namespace lionlab::harness_detail {

using nlohmann::json;

OptimizerConfig parse_optimizer(const json& o);
json optimizer_to_json(const OptimizerConfig& c);
RunConfig parse_run_json(const json& j);
json run_config_json(const RunConfig& cfg);
bool all_finite(const ParamVector& v);
json axis_value_json(const AxisValue& v);
void set_path(json& j, const std::string& path, const AxisValue& v);

}  // namespace lionlab::harness_detail
