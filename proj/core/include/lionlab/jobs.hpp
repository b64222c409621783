#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lionlab/harness.hpp"
#include "lionlab/stability.hpp"

namespace lionlab {

// Parsed `stability` front-end config: one twin run, or an N-sweep.
struct StabilityJob {
  TwinRunSpec base;
  ScheduleSpec schedule;
  bool allow_lambda_zero_clion = false;
  bool is_sweep = false;
  std::vector<std::size_t> n_grid;
  std::size_t replicates = 20;
  std::string canonical_json;  // for hashing and provenance
};

StabilityJob parse_stability_config(const std::string& json_text);
// Applies the schedule and the lambda validation rules onto base.optimizer.
void resolve_stability_job(StabilityJob& job);
std::string stability_job_hash(const StabilityJob& job);

struct GridJob {
  GridSpec spec;
  std::string canonical_json;
};
GridJob parse_grid_config(const std::string& json_text);
std::string grid_job_hash(const GridJob& job);

struct DiagnoseJob {
  RunConfig run_cfg;  // trajectory capture is forced on
  std::size_t replicates = 1;
  bool lemma2_enabled = true;
  double lemma2_alpha = 1.25;
  bool lemma3_enabled = false;
  std::optional<double> sigma_override;
  std::optional<double> g_override;
  std::optional<double> l_override;
  std::string canonical_json;
};

struct DiagnoseReport {
  std::optional<double> tau;  // min over replicates
  std::size_t tau_skipped = 0;
  std::optional<double> nu0;
  double nu0_floor = 0.0;  // 1/sqrt(d), the scale the l1 rate asks of nu0
  double branch_fraction = 0.0;
  std::vector<double> avg_l1;        // running average, first replicate
  double avg_l1_final_mean = 0.0;    // replicate mean of the final value
  // Pairwise inequality sweeps over consecutive (c_t, c_{t+1}) pairs of the
  // first replicate, with tau recomputed per pair.
  std::size_t lemma1_checked = 0;
  std::size_t lemma1_violations = 0;
  double lemma1_worst_margin = 0.0;  // max of lhs - rhs over pairs
  std::size_t lemmaC1_checked = 0;
  std::size_t lemmaC1_violations = 0;
  double lemmaC1_worst_margin = 0.0;
  bool lemma2_ran = false;
  Lemma2Report lemma2;
  bool lemma3_ran = false;
  Lemma3Result lemma3;
  double g_used = 0.0;
  bool g_empirical = false;
  double sigma_used = 0.0;
  double l_used = 0.0;
  double nu = 0.0;
  std::string config_hash;
  std::size_t replicates = 1;
  std::size_t steps = 0;
};

DiagnoseJob parse_diagnose_config(const std::string& json_text);
DiagnoseReport diagnose(const DiagnoseJob& job, std::size_t threads = 1);

struct CompareEntry {
  std::string label;
  std::string optimizer_json;
  std::vector<GridAxis> axes;  // optional per-entry grid
};

struct CompareSpec {
  std::string base_json;  // complete run config except "optimizer"
  std::vector<CompareEntry> entries;
  GridMetric metric = GridMetric::final_test_loss;
  bool decouple_seeds = false;
  std::string canonical_json;
};

struct CompareRow {
  std::string label;
  std::string method;
  std::string config_hash;
  double eta = 0.0, beta1 = 0.0, beta2 = 0.0, lambda = 0.0, nu = 0.0;
  double branch_fraction = 0.0;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double avg_l1_grad = 0.0;
  double wall_seconds = 0.0;
  bool aborted = false;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<RunLog> winner_logs;  // aligned with rows; curves come from these
};

CompareSpec parse_compare_config(const std::string& json_text);
std::string compare_spec_hash(const CompareSpec& spec);
CompareResult compare(const CompareSpec& spec, std::size_t threads = 1);

}  // namespace lionlab
