#include "lionlab/stability.hpp"

#include <cmath>
#include <stdexcept>

#include "lionlab/rng.hpp"
#include "parallel.hpp"

namespace lionlab {

namespace {

double l2_diff(const ParamVector& a, const ParamVector& b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return std::sqrt(acc);
}

void fold_tau(const ParamVector& c, std::optional<double>& tau, std::size_t& skipped) {
  const auto q = min_abs_nonzero(c);
  if (!q) {
    ++skipped;
    return;
  }
  if (!tau || *q < *tau) tau = *q;
}

void append_step(Trajectory& traj, const StepResult& r, const ParamVector& g,
                 std::size_t j, double sample_loss) {
  traj.w.push_back(r.w);
  traj.c.push_back(r.dir.c);
  traj.g.push_back(g);
  traj.m.push_back(r.state.m);
  traj.branch.push_back(r.state.branch_taken);
  traj.sample_index.push_back(j);
  traj.sample_loss.push_back(sample_loss);
}

}  // namespace

StabilityReport twin_run(const TwinRunSpec& spec) {
  if (spec.replace_index < 1 || spec.replace_index > spec.dataset.n) {
    throw std::invalid_argument("replace_index out of range");
  }
  if (spec.steps < 1) throw std::invalid_argument("steps must be >= 1");
  validate_config(spec.optimizer);

  Problem problem = build_problem(spec.problem);
  Dataset train = build_train(spec.dataset, problem.feature_dim());
  declare_constants(problem, train);
  const std::uint64_t fresh_seed =
      rng::draw(rng::stream_key(spec.dataset.seed, rng::Role::replacement), 0);
  const Dataset replaced = replace_sample(train, spec.replace_index, fresh_seed);

  const ParamVector w0 = make_init(spec.init, spec.init_seed, problem.dim);
  ParamVector w_a = w0;
  ParamVector w_b = w0;
  OptimizerState st_a = make_state(spec.optimizer, problem.dim);
  OptimizerState st_b = st_a;

  StabilityReport rep;
  rep.divergence.reserve(spec.steps + 1);
  rep.momentum_divergence.reserve(spec.steps + 1);
  rep.direction_gap.reserve(spec.steps);
  rep.divergence.push_back(0.0);
  rep.momentum_divergence.push_back(0.0);
  if (spec.capture) {
    rep.traj_base.emplace();
    rep.traj_replaced.emplace();
    for (Trajectory* t : {&*rep.traj_base, &*rep.traj_replaced}) {
      t->w.push_back(w0);
      t->config = spec.optimizer;
      t->declared_G = problem.lipschitz_G;
      t->declared_L = problem.smooth_L;
    }
  }

  std::optional<double> tau_joint, tau_a, tau_b;
  std::size_t skipped_a = 0, skipped_b = 0, skipped_joint = 0;
  bool identical = true;

  const std::uint64_t index_key = rng::stream_key(spec.index_seed, rng::Role::index);
  for (std::size_t t = 0; t < spec.steps; ++t) {
    const std::size_t j = rng::index_below(index_key, t, train.n());
    const ParamVector g_a = grad(problem, w_a, train.samples[j]);
    const ParamVector g_b = grad(problem, w_b, replaced.samples[j]);
    const StepResult r_a = optimizer_step(w_a, g_a, st_a, spec.optimizer);
    const StepResult r_b = optimizer_step(w_b, g_b, st_b, spec.optimizer);
    require_finite(r_a.w, "twin_run: trajectory on S");
    require_finite(r_b.w, "twin_run: trajectory on S^(i)");

    rep.divergence.push_back(l2_diff(r_a.w, r_b.w));
    rep.momentum_divergence.push_back(l2_diff(r_a.state.m, r_b.state.m));
    rep.direction_gap.push_back(l2_diff(r_a.dir.h_of_c, r_b.dir.h_of_c));
    identical = identical && r_a.w == r_b.w && r_a.state.m == r_b.state.m;

    fold_tau(r_a.dir.c, tau_a, skipped_a);
    fold_tau(r_b.dir.c, tau_b, skipped_b);
    fold_tau(r_a.dir.c, tau_joint, skipped_joint);
    fold_tau(r_b.dir.c, tau_joint, skipped_joint);

    if (spec.capture) {
      append_step(*rep.traj_base, r_a, g_a, j, loss(problem, w_a, train.samples[j]));
      append_step(*rep.traj_replaced, r_b, g_b, j,
                  loss(problem, w_b, replaced.samples[j]));
    }
    w_a = r_a.w;
    w_b = r_b.w;
    st_a = r_a.state;
    st_b = r_b.state;
  }

  rep.final_divergence = rep.divergence.back();
  rep.zero_divergence = identical;
  rep.tau_joint = tau_joint;
  rep.tau_skipped = skipped_joint;
  rep.tau_base = tau_a;
  rep.tau_replaced = tau_b;

  const Dataset test = build_test(spec.dataset, problem.feature_dim());
  rep.gap_estimate = gap_estimate(problem, w_a, train, test);
  return rep;
}

double gap_estimate(const Problem& p, const ParamVector& w, const Dataset& train,
                    const Dataset& test) {
  return full_loss(p, w, test) - full_loss(p, w, train);
}

SweepResult stability_sweep(const TwinRunSpec& base,
                            const std::vector<std::size_t>& n_grid,
                            std::size_t replicates, std::size_t threads) {
  if (n_grid.size() < 4) {
    throw std::invalid_argument("need >=4 N values for slope fit");
  }
  for (std::size_t a = 1; a < n_grid.size(); ++a) {
    if (n_grid[a] <= n_grid[a - 1]) {
      throw std::invalid_argument("n_grid must be strictly increasing");
    }
  }
  if (replicates < 10) throw std::invalid_argument("need >=10 replicates");

  const std::uint64_t sweep_key = rng::stream_key(
      rng::mix(base.dataset.seed) + base.index_seed, rng::Role::sweep);

  struct Cell {
    double divergence = 0.0;
    std::optional<double> tau;
    bool zero = false;
  };
  const std::size_t total = n_grid.size() * replicates;
  std::vector<Cell> cells(total);
  detail::parallel_for(total, threads, [&](std::size_t idx) {
    const std::size_t a = idx / replicates;
    const std::uint64_t c0 = static_cast<std::uint64_t>(idx) * 4;
    TwinRunSpec spec = base;
    spec.dataset.n = n_grid[a];
    spec.dataset.seed = rng::draw(sweep_key, c0);
    spec.index_seed = rng::draw(sweep_key, c0 + 1);
    spec.init_seed = rng::draw(sweep_key, c0 + 2);
    spec.replace_index = 1 + rng::draw(sweep_key, c0 + 3) % spec.dataset.n;
    spec.capture = false;
    const StabilityReport rep = twin_run(spec);
    cells[idx] = {rep.final_divergence, rep.tau_joint, rep.zero_divergence};
  });

  SweepResult out;
  out.points.reserve(n_grid.size());
  for (std::size_t a = 0; a < n_grid.size(); ++a) {
    SweepPoint pt;
    pt.n = n_grid[a];
    pt.replicates = replicates;
    double acc = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      const Cell& cell = cells[a * replicates + r];
      acc += cell.divergence;
      if (cell.zero) ++pt.zero_count;
      if (cell.tau && (!out.tau_joint_min || *cell.tau < *out.tau_joint_min)) {
        out.tau_joint_min = *cell.tau;
      }
    }
    pt.mean_divergence = acc / static_cast<double>(replicates);
    out.points.push_back(pt);
  }

  std::vector<double> xs, ys;
  for (const SweepPoint& pt : out.points) {
    if (pt.mean_divergence > 0.0) {
      xs.push_back(std::log(static_cast<double>(pt.n)));
      ys.push_back(std::log(pt.mean_divergence));
    }
  }
  if (xs.size() < 2) {
    out.degenerate = true;
    out.note = "no divergence observed";
    return out;
  }
  const auto k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  out.slope = sxy / sxx;
  const double intercept = my - out.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + out.slope * xs[i]);
    rss += e * e;
  }
  out.slope_stderr = xs.size() > 2 ? std::sqrt(rss / (k - 2.0) / sxx) : 0.0;
  if (xs.size() < out.points.size()) {
    out.note = "zero-divergence grid points excluded from fit";
  }
  return out;
}

}  // namespace lionlab
