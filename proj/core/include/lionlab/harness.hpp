#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lionlab/diagnostics.hpp"
#include "lionlab/optim.hpp"
#include "lionlab/problems.hpp"

namespace lionlab {

// Configuration problems (bad schema, invalid values) are reported with this
// type so callers can map them to the config-error exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ScheduleKind { constant, theorem3, theorem2_smallT, theorem2_largeT };

const char* schedule_kind_name(ScheduleKind k);
ScheduleKind schedule_kind_from_name(const std::string& name);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::constant;
  double c_eta = 1.0;    // theorem3: eta = c_eta / T^{3/4}
  double alpha = 1.25;   // exponent in the weight-decay cap, must exceed 1
  bool lambda_from_cap = false;  // set lambda to the cap instead of validating
};

struct ResolvedSchedule {
  double eta = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double lambda_max = 0.0;
};

// theorem3:        eta = c_eta/T^{3/4}, beta_i = 1 - (1 - base beta_i)/sqrt(T),
//                  lambda_max = 1/(2 eta Ghat T^alpha)
// theorem2_smallT: eta = 1/sqrt(d);  theorem2_largeT: eta = 1/(sqrt(d) T);
//                  both keep base betas and cap lambda at 1/eta.
ResolvedSchedule schedule_params(const ScheduleSpec& spec, std::size_t steps,
                                 std::size_t dim, double g_hat,
                                 const OptimizerConfig& base);

struct SeedBundle {
  std::uint64_t init = 1;
  std::uint64_t index = 1;
};

struct RunConfig {
  ProblemSpec problem;
  DatasetSpec dataset;
  OptimizerConfig optimizer;
  std::size_t steps = 1;
  std::size_t batch_size = 1;
  ScheduleSpec schedule;
  std::size_t record_every = 0;  // 0 -> max(1, steps/100)
  InitSpec init;
  SeedBundle seeds;
  bool capture_trajectory = false;
  bool allow_lambda_zero_clion = false;
};

// Strict JSON parsing: unknown keys are errors, as are invalid values.
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

// FNV-1a over the canonical JSON form; stable across runs and platforms.
std::string config_hash(const RunConfig& cfg);
std::string hash_bytes(const std::string& bytes);

struct RunRow {
  std::size_t t = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double l1_grad = 0.0;  // ||grad F_S(w_t)||_1
  double w_norm = 0.0;
  Branch branch = Branch::na;
};

struct RunSummary {
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double final_l1_grad = 0.0;
  double avg_l1_grad_recorded = 0.0;  // mean over recorded rows, t >= 1
  double branch_fraction = 0.0;
  double wall_seconds = 0.0;  // informational; kept out of replayable files
  std::string config_hash;
  bool aborted = false;
  std::size_t abort_step = 0;
  std::vector<std::string> warnings;
  double eta = 0.0, beta1 = 0.0, beta2 = 0.0, lambda = 0.0;  // resolved values
};

struct RunLog {
  std::vector<RunRow> rows;
  RunSummary summary;
  ParamVector w_final;
  std::optional<Trajectory> trajectory;
};

RunLog run(const RunConfig& cfg);

using AxisValue = std::variant<double, std::string>;

struct GridAxis {
  std::string path;  // dotted JSON path, e.g. "optimizer.eta"
  std::vector<AxisValue> values;
};

enum class GridMetric { final_test_loss, final_train_loss };

struct GridSpec {
  std::string base_json;
  std::vector<GridAxis> axes;
  GridMetric metric = GridMetric::final_test_loss;
  std::vector<std::uint64_t> replicate_index_seeds;  // empty -> single run
};

struct GridCell {
  std::vector<AxisValue> values;  // aligned with sorted axis order
  std::string config_hash;
  double metric = 0.0;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  bool aborted = false;
};

struct GridResult {
  std::vector<std::string> axis_paths;
  std::vector<GridCell> cells;  // lexicographic order over sorted axis values
  std::size_t best_index = 0;
  bool all_aborted = false;
};

// Runs every cell; cells and replicates may execute concurrently, and the
// result table is assembled in cell order regardless of thread count.
GridResult grid_search(const GridSpec& spec, std::size_t threads = 1);

std::size_t env_thread_count();  // LIONLAB_THREADS, default 1

}  // namespace lionlab
