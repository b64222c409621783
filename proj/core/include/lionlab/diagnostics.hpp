#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lionlab/optim.hpp"
#include "lionlab/problems.hpp"
#include "lionlab/vecmath.hpp"

namespace lionlab {

// Per-step record of one optimizer run. Step t (1-based) lives at array
// index t-1; w additionally carries w[0] = w0.
struct Trajectory {
  std::vector<ParamVector> w;  // length steps()+1
  std::vector<ParamVector> c;
  std::vector<ParamVector> g;
  std::vector<ParamVector> m;
  std::vector<Branch> branch;
  std::vector<std::size_t> sample_index;  // 0-based dataset positions
  std::vector<double> sample_loss;        // f(w_{t-1}; xi_{j_t})
  OptimizerConfig config;
  std::optional<double> declared_G;
  std::optional<double> declared_L;

  std::size_t steps() const { return c.size(); }
  std::size_t dim() const { return w.empty() ? 0 : w[0].size(); }
};

struct TauResult {
  std::optional<double> tau;
  std::size_t skipped_steps = 0;  // steps with c_t identically zero
};

// min over steps of min_abs_nonzero(c_t); empty if every c_t is zero.
TauResult tau_of(const Trajectory& traj);

struct PairCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

// ||sign(c) - sign(c')||_2 <= (2 sqrt(d)/tau) ||c - c'||_2.
// Requires tau > 0 and tau <= min_abs_nonzero of both inputs.
PairCheck check_lemma1(const ParamVector& c, const ParamVector& c_prime, double tau);

// <x, sign(x) - sign(y)> <= 2 sqrt(d) ||x - y||_2, checked pointwise.
PairCheck check_lemmaC1(const ParamVector& x, const ParamVector& y);

struct Lemma2Violation {
  std::size_t step = 0;
  std::string which;  // "iterate" or "displacement"
  double lhs = 0.0;
  double rhs = 0.0;
};

struct Lemma2Report {
  bool preconditions_ok = false;
  std::string precondition_note;
  double g_hat = 0.0;
  std::size_t checked_steps = 0;
  std::vector<Lemma2Violation> violations;
};

// ||w_t|| <= (t+1) eta Ghat and ||w_t - w_{t-1}|| <= 2 eta Ghat, gated on
// ||w_0|| <= eta Ghat and lambda <= 1/(2 eta Ghat T^alpha).
Lemma2Report check_lemma2(const Trajectory& traj, double eta, double lambda,
                          double g_hat, double schedule_alpha);

struct Lemma3Constants {
  double sigma = 0.0;
  double G = 0.0;
  double L = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double eta = 0.0;
};

struct Lemma3Result {
  double lhs = 0.0;  // replicate-averaged (1/T) sum_t ||c_{t+1} - grad F_S(w_t)||
  double rhs = 0.0;
  double g_hat = 0.0;
  std::size_t horizon = 0;  // the T the average runs over (traj steps - 1)
  bool ok = false;          // lhs <= rhs * 1.05
};

// Trajectories must carry at least 2 steps; the average runs over
// t = 1..steps-1 so that c_{t+1} is available for every term.
Lemma3Result check_lemma3(std::span<const Trajectory> trajs, const Problem& p,
                          const Dataset& ds, const Lemma3Constants& k);

// Running average A_t = (1/t) sum_{s<=t} ||grad F_S(w_s)||_1, t = 1..T.
std::vector<double> avg_l1_grad(const Trajectory& traj, const Problem& p,
                                const Dataset& ds);

// Largest nu0 with nu0 ||c||_1 <= ||c||^2 over identity-branch steps:
// min over those steps of ||c||^2 / ||c||_1. Empty without such steps.
std::optional<double> nu0_estimate(const Trajectory& traj);

double branch_fraction(const Trajectory& traj);  // fraction of sign-branch steps

// Declared lipschitz_G when available, else 1.5x the empirical max ||g_t||.
struct EffectiveG {
  double value = 0.0;
  bool empirical = false;
};
EffectiveG effective_G(const Trajectory& traj, const Problem& p);

}  // namespace lionlab
