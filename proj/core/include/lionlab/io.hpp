#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lionlab/harness.hpp"
#include "lionlab/jobs.hpp"
#include "lionlab/stability.hpp"

namespace lionlab::io {

// Shortest decimal that round-trips the double exactly.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Every emitted file starts with a comment/header carrying the tool version
// and the config hash. Wall-clock timing stays out of run/grid/stability
// files so identical (config, seeds) reproduce them byte for byte; only the
// compare table reports timing.
std::string run_csv(const RunLog& log);
std::string run_summary_json(const RunConfig& cfg, const RunLog& log);

std::string grid_csv(const GridResult& grid, const std::string& hash);
std::string grid_json(const GridResult& grid, const std::string& hash);

std::string stability_curve_csv(const StabilityReport& rep, const std::string& hash);
std::string stability_summary_json(const StabilityReport& rep, const std::string& hash,
                                   std::size_t steps);
std::string sweep_csv(const SweepResult& res, const std::string& hash);
std::string sweep_json(const SweepResult& res, const std::string& hash);

std::string diagnostics_json(const DiagnoseReport& rep);
std::string diagnostics_curve_csv(const DiagnoseReport& rep);

std::string compare_csv(const CompareResult& res, const std::string& hash);
std::string compare_curves_csv(const CompareResult& res, const std::string& hash);

}  // namespace lionlab::io
