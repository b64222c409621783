#include "lionlab/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace lionlab {

namespace {
constexpr double kDeterministicSlack = 1e-12;
constexpr double kStatisticalSlack = 0.05;

double l2_diff(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a.size(), b.size(), "l2_diff");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return std::sqrt(acc);
}
}  // namespace

TauResult tau_of(const Trajectory& traj) {
  TauResult r;
  for (const ParamVector& c : traj.c) {
    const auto q = min_abs_nonzero(c);
    if (!q) {
      ++r.skipped_steps;
      continue;
    }
    if (!r.tau || *q < *r.tau) r.tau = *q;
  }
  return r;
}

PairCheck check_lemma1(const ParamVector& c, const ParamVector& c_prime, double tau) {
  require_same_dim(c.size(), c_prime.size(), "check_lemma1");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  for (const ParamVector* v : {&c, &c_prime}) {
    const auto q = min_abs_nonzero(*v);
    if (q && *q < tau) throw std::invalid_argument("tau too large for inputs");
  }
  PairCheck r;
  r.lhs = l2_diff(sign_vec(c), sign_vec(c_prime));
  const double d = static_cast<double>(c.size());
  r.rhs = (2.0 * std::sqrt(d) / tau) * l2_diff(c, c_prime);
  r.ok = r.lhs <= r.rhs + kDeterministicSlack;
  return r;
}

PairCheck check_lemmaC1(const ParamVector& x, const ParamVector& y) {
  require_same_dim(x.size(), y.size(), "check_lemmaC1");
  PairCheck r;
  const ParamVector sx = sign_vec(x);
  const ParamVector sy = sign_vec(y);
  double lhs = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) lhs += x[j] * (sx[j] - sy[j]);
  r.lhs = lhs;
  r.rhs = 2.0 * std::sqrt(static_cast<double>(x.size())) * l2_diff(x, y);
  r.ok = r.lhs <= r.rhs + kDeterministicSlack;
  return r;
}

Lemma2Report check_lemma2(const Trajectory& traj, double eta, double lambda,
                          double g_hat, double schedule_alpha) {
  if (!(schedule_alpha > 1.0)) throw std::invalid_argument("schedule_alpha must exceed 1");
  Lemma2Report rep;
  rep.g_hat = g_hat;
  const double t_total = static_cast<double>(traj.steps());
  const double w0_norm = norm(traj.w.at(0), NormKind::l2);
  const double lambda_cap = 1.0 / (2.0 * eta * g_hat * std::pow(t_total, schedule_alpha));
  if (w0_norm > eta * g_hat) {
    rep.precondition_note = "preconditions not satisfied: ||w0|| > eta*Ghat";
    return rep;
  }
  if (lambda > lambda_cap) {
    rep.precondition_note = "preconditions not satisfied: lambda above cap";
    return rep;
  }
  rep.preconditions_ok = true;
  for (std::size_t t = 1; t <= traj.steps(); ++t) {
    const double wt = norm(traj.w[t], NormKind::l2);
    const double bound_iter = (static_cast<double>(t) + 1.0) * eta * g_hat;
    if (wt > bound_iter + kDeterministicSlack) {
      rep.violations.push_back({t, "iterate", wt, bound_iter});
    }
    const double disp = l2_diff(traj.w[t], traj.w[t - 1]);
    const double bound_disp = 2.0 * eta * g_hat;
    if (disp > bound_disp + kDeterministicSlack) {
      rep.violations.push_back({t, "displacement", disp, bound_disp});
    }
    ++rep.checked_steps;
  }
  return rep;
}

Lemma3Result check_lemma3(std::span<const Trajectory> trajs, const Problem& p,
                          const Dataset& ds, const Lemma3Constants& k) {
  if (trajs.empty()) throw std::invalid_argument("check_lemma3: no trajectories");
  if (!(k.beta2 < 1.0 && k.beta2 >= 0.0))
    throw std::invalid_argument("check_lemma3: beta2 out of range");
  Lemma3Result r;
  const std::size_t steps = trajs[0].steps();
  if (steps < 2) throw std::invalid_argument("check_lemma3: need >= 2 steps");
  const std::size_t horizon = steps - 1;
  double acc = 0.0;
  for (const Trajectory& traj : trajs) {
    if (traj.steps() != steps)
      throw std::invalid_argument("check_lemma3: trajectory lengths differ");
    double traj_acc = 0.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
      const ParamVector grad_f = full_grad(p, traj.w[t], ds);
      traj_acc += l2_diff(traj.c[t], grad_f);  // c[t] holds c_{t+1}
    }
    acc += traj_acc / static_cast<double>(horizon);
  }
  r.lhs = acc / static_cast<double>(trajs.size());
  r.horizon = horizon;
  r.g_hat = std::max(k.G, std::sqrt(static_cast<double>(p.dim)));
  const double omb2 = 1.0 - k.beta2;
  r.rhs = std::sqrt(2.0 * (k.sigma * k.sigma + k.G * k.G)) /
              std::sqrt(omb2 * static_cast<double>(horizon)) +
          2.0 * std::sqrt(2.0) * k.L * r.g_hat * k.eta / omb2 +
          std::sqrt(2.0) * std::fabs(k.beta1 - k.beta2) / std::sqrt(omb2) * k.sigma +
          (1.0 - k.beta1) / std::sqrt(omb2) * k.sigma;
  r.ok = r.lhs <= r.rhs * (1.0 + kStatisticalSlack);
  return r;
}

std::vector<double> avg_l1_grad(const Trajectory& traj, const Problem& p,
                                const Dataset& ds) {
  std::vector<double> out;
  out.reserve(traj.steps());
  double acc = 0.0;
  for (std::size_t t = 1; t <= traj.steps(); ++t) {
    acc += norm(full_grad(p, traj.w[t], ds), NormKind::l1);
    out.push_back(acc / static_cast<double>(t));
  }
  return out;
}

std::optional<double> nu0_estimate(const Trajectory& traj) {
  std::optional<double> out;
  for (std::size_t t = 0; t < traj.steps(); ++t) {
    if (traj.branch[t] != Branch::identity) continue;
    const double l1 = norm(traj.c[t], NormKind::l1);
    if (l1 == 0.0) continue;
    const double l2 = norm(traj.c[t], NormKind::l2);
    const double ratio = l2 * l2 / l1;
    if (!out || ratio < *out) out = ratio;
  }
  return out;
}

double branch_fraction(const Trajectory& traj) {
  if (traj.steps() == 0) return 0.0;
  std::size_t signs = 0;
  for (Branch b : traj.branch) {
    if (b == Branch::sign) ++signs;
  }
  return static_cast<double>(signs) / static_cast<double>(traj.steps());
}

EffectiveG effective_G(const Trajectory& traj, const Problem& p) {
  if (p.lipschitz_G) return {*p.lipschitz_G, false};
  double gmax = 0.0;
  for (const ParamVector& g : traj.g) gmax = std::max(gmax, norm(g, NormKind::l2));
  return {1.5 * gmax, true};
}

}  // namespace lionlab
