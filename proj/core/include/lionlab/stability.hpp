#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lionlab/diagnostics.hpp"
#include "lionlab/optim.hpp"
#include "lionlab/problems.hpp"

namespace lionlab {

// Two runs of the same optimizer on S and S^(i), coupled through a shared
// sample-index sequence and a shared w0.
struct TwinRunSpec {
  ProblemSpec problem;
  DatasetSpec dataset;
  std::size_t replace_index = 1;  // 1-based position i
  OptimizerConfig optimizer;
  std::size_t steps = 1;
  std::uint64_t index_seed = 0;
  std::uint64_t init_seed = 0;
  InitSpec init;
  bool capture = false;  // keep full trajectories for pairwise checks
};

struct StabilityReport {
  std::vector<double> divergence;           // ||w_t - w_t^(i)||_2, t = 0..T
  std::vector<double> momentum_divergence;  // ||m_t - m_t^(i)||_2, t = 0..T
  std::vector<double> direction_gap;        // ||h(c_t) - h(c_t^(i))||_2, t = 1..T
  double final_divergence = 0.0;
  double gap_estimate = 0.0;  // held-out minus train loss at w_T (S run)
  std::optional<double> tau_joint;
  std::size_t tau_skipped = 0;  // steps where either c_t was identically zero
  std::optional<double> tau_base;      // over the S trajectory alone
  std::optional<double> tau_replaced;  // over the S^(i) trajectory alone
  bool zero_divergence = false;        // exact equality along the whole run
  std::optional<Trajectory> traj_base;
  std::optional<Trajectory> traj_replaced;
};

StabilityReport twin_run(const TwinRunSpec& spec);

// Mean test loss minus mean train loss at w.
double gap_estimate(const Problem& p, const ParamVector& w, const Dataset& train,
                    const Dataset& test);

struct SweepPoint {
  std::size_t n = 0;
  double mean_divergence = 0.0;
  std::size_t replicates = 0;
  std::size_t zero_count = 0;  // replicates with exactly zero divergence
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double slope = 0.0;
  double slope_stderr = 0.0;
  bool degenerate = false;  // not enough nonzero points to fit
  std::string note;
  std::optional<double> tau_joint_min;
};

// Replicates vary (dataset_seed, index_seed, init_seed, i) via a derived
// counter stream; results are merged in replicate order so the outcome is
// identical for every thread count.
SweepResult stability_sweep(const TwinRunSpec& base,
                            const std::vector<std::size_t>& n_grid,
                            std::size_t replicates, std::size_t threads = 1);

}  // namespace lionlab
