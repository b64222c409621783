#include "lionlab/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace lionlab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void check_step_inputs(const ParamVector& w, const ParamVector& g,
                       const OptimizerState& state) {
  require_same_dim(w.size(), g.size(), "step");
  require_same_dim(w.size(), state.m.size(), "step state");
  require_finite(g, "gradient");
}

// w' = w - eta*(h + lambda*w). Shared by every rule so that reductions
// between methods (clion -> lion -> signsgd) are bit-exact.
ParamVector apply_direction(const ParamVector& w, const ParamVector& h,
                            double eta, double lambda) {
  ParamVector out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    out[j] = w[j] - eta * (h[j] + lambda * w[j]);
  }
  return out;
}

StepResult sign_family_step(const ParamVector& w, const ParamVector& g,
                            const OptimizerState& state, const OptimizerConfig& cfg,
                            const ParamVector& c, ParamVector h, Branch branch) {
  StepResult r;
  r.w = apply_direction(w, h, cfg.eta, cfg.lambda);
  r.state.m = combine(cfg.beta2, state.m, 1.0 - cfg.beta2, g);
  r.state.v = state.v;
  r.state.step = state.step + 1;
  r.state.branch_taken = branch;
  r.dir.c = c;
  r.dir.h_of_c = std::move(h);
  return r;
}

// Bias-corrected Adam direction; shared by adam_step and adamw_step.
void adam_moments(const ParamVector& g, const OptimizerState& state,
                  const OptimizerConfig& cfg, ParamVector& m_out,
                  ParamVector& v_out, ParamVector& update_out) {
  const auto t = static_cast<double>(state.step + 1);
  m_out = combine(cfg.beta1, state.m, 1.0 - cfg.beta1, g);
  v_out.resize(g.size());
  update_out.resize(g.size());
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t j = 0; j < g.size(); ++j) {
    v_out[j] = cfg.beta2 * state.v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
    const double m_hat = m_out[j] / bc1;
    const double v_hat = v_out[j] / bc2;
    update_out[j] = m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::sgd: return "sgd";
    case Method::sgdm: return "sgdm";
    case Method::signsgd: return "signsgd";
    case Method::adam: return "adam";
    case Method::adamw: return "adamw";
    case Method::lion: return "lion";
    case Method::rlion: return "rlion";
    case Method::clion: return "clion";
    case Method::lionk: return "lionk";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::sgd, Method::sgdm, Method::signsgd, Method::adam,
                   Method::adamw, Method::lion, Method::rlion, Method::clion,
                   Method::lionk}) {
    if (name == method_name(m)) return m;
  }
  throw std::invalid_argument("unknown optimizer method: " + name);
}

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::sign: return "sign";
    case Branch::identity: return "identity";
    case Branch::na: return "na";
  }
  return "?";
}

void validate_config(const OptimizerConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0))
    throw std::invalid_argument("beta1 must lie in [0,1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("beta2 must lie in [0,1)");
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (cfg.method == Method::clion && !(cfg.nu > 0.0))
    throw std::invalid_argument("nu must be positive");
  if (cfg.method == Method::rlion && !(cfg.alpha_curve > 0.0))
    throw std::invalid_argument("alpha_curve must be positive");
  if (cfg.method == Method::lionk && cfg.lionk_kind == LionKKind::tanh_k &&
      !(cfg.a_tanh > 0.0))
    throw std::invalid_argument("a_tanh must be positive");
  if (cfg.method == Method::lionk && cfg.lionk_kind == LionKKind::indicator_sign &&
      !(cfg.e_indicator > 0.0))
    throw std::invalid_argument("e_indicator must be positive");
  if ((cfg.method == Method::adam || cfg.method == Method::adamw) &&
      !(cfg.epsilon > 0.0))
    throw std::invalid_argument("epsilon must be positive");
  if (cfg.method == Method::signsgd && cfg.lambda != 0.0)
    throw std::invalid_argument("lambda must be 0 for signsgd");
}

OptimizerState make_state(const OptimizerConfig& cfg, std::size_t dim) {
  validate_config(cfg);
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  OptimizerState s;
  s.m.assign(dim, 0.0);
  s.v.assign(dim, 0.0);
  s.step = 0;
  s.branch_taken = Branch::na;
  return s;
}

StepResult lion_step(const ParamVector& w, const ParamVector& g,
                     const OptimizerState& state, const OptimizerConfig& cfg) {
  check_step_inputs(w, g, state);
  ParamVector c = combine(cfg.beta1, state.m, 1.0 - cfg.beta1, g);
  return sign_family_step(w, g, state, cfg, c, sign_vec(c), Branch::sign);
}

StepResult clion_step(const ParamVector& w, const ParamVector& g,
                      const OptimizerState& state, const OptimizerConfig& cfg) {
  check_step_inputs(w, g, state);
  ParamVector c = combine(cfg.beta1, state.m, 1.0 - cfg.beta1, g);
  // Sign branch iff the smallest nonzero |c_j| clears the threshold.
  // c = 0 leaves the condition vacuous; treat it as the identity branch.
  const auto q = min_abs_nonzero(c);
  const bool take_sign = q.has_value() && *q >= cfg.nu;
  ParamVector h = take_sign ? sign_vec(c) : c;
  return sign_family_step(w, g, state, cfg, c, std::move(h),
                          take_sign ? Branch::sign : Branch::identity);
}

StepResult signsgd_step(const ParamVector& w, const ParamVector& g,
                        const OptimizerState& state, const OptimizerConfig& cfg) {
  check_step_inputs(w, g, state);
  StepResult r;
  r.dir.c = g;
  r.dir.h_of_c = sign_vec(g);
  r.w = apply_direction(w, r.dir.h_of_c, cfg.eta, 0.0);
  r.state = state;  // m stays 0
  r.state.step = state.step + 1;
  r.state.branch_taken = Branch::sign;
  return r;
}

StepResult rlion_step(const ParamVector& w, const ParamVector& g,
                      const OptimizerState& state, const OptimizerConfig& cfg) {
  check_step_inputs(w, g, state);
  ParamVector c = combine(cfg.beta1, state.m, 1.0 - cfg.beta1, g);
  ParamVector h(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    h[j] = (2.0 / kPi) * std::atan(cfg.alpha_curve * c[j]);
  }
  return sign_family_step(w, g, state, cfg, c, std::move(h), Branch::na);
}

StepResult lionk_step(const ParamVector& w, const ParamVector& g,
                      const OptimizerState& state, const OptimizerConfig& cfg,
                      LionKKind kind) {
  check_step_inputs(w, g, state);
  ParamVector c = combine(cfg.beta1, state.m, 1.0 - cfg.beta1, g);
  ParamVector h(c.size());
  if (kind == LionKKind::tanh_k) {
    for (std::size_t j = 0; j < c.size(); ++j) h[j] = std::tanh(cfg.a_tanh * c[j]);
  } else {
    for (std::size_t j = 0; j < c.size(); ++j) {
      h[j] = std::fabs(c[j]) > cfg.e_indicator ? (c[j] > 0.0 ? 1.0 : -1.0) : 0.0;
    }
  }
  return sign_family_step(w, g, state, cfg, c, std::move(h), Branch::na);
}

StepResult sgd_step(const ParamVector& w, const ParamVector& g,
                    const OptimizerState& state, const OptimizerConfig& cfg) {
  check_step_inputs(w, g, state);
  StepResult r;
  r.w.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) r.w[j] = w[j] - cfg.eta * g[j];
  r.state = state;
  r.state.step = state.step + 1;
  r.state.branch_taken = Branch::na;
  r.dir.c = g;
  r.dir.h_of_c = g;
  return r;
}

StepResult sgdm_step(const ParamVector& w, const ParamVector& g,
                     const OptimizerState& state, const OptimizerConfig& cfg) {
  check_step_inputs(w, g, state);
  StepResult r;
  // Heavy-ball accumulation m' = beta1*m + g.
  r.state.m = combine(cfg.beta1, state.m, 1.0, g);
  r.state.v = state.v;
  r.state.step = state.step + 1;
  r.state.branch_taken = Branch::na;
  r.w.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) r.w[j] = w[j] - cfg.eta * r.state.m[j];
  r.dir.c = r.state.m;
  r.dir.h_of_c = r.state.m;
  return r;
}

StepResult adam_step(const ParamVector& w, const ParamVector& g,
                     const OptimizerState& state, const OptimizerConfig& cfg) {
  check_step_inputs(w, g, state);
  require_same_dim(w.size(), state.v.size(), "adam state");
  StepResult r;
  ParamVector update;
  adam_moments(g, state, cfg, r.state.m, r.state.v, update);
  r.state.step = state.step + 1;
  r.state.branch_taken = Branch::na;
  r.w.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) r.w[j] = w[j] - cfg.eta * update[j];
  r.dir.c = r.state.m;
  r.dir.h_of_c = std::move(update);
  return r;
}

StepResult adamw_step(const ParamVector& w, const ParamVector& g,
                      const OptimizerState& state, const OptimizerConfig& cfg) {
  check_step_inputs(w, g, state);
  require_same_dim(w.size(), state.v.size(), "adamw state");
  StepResult r;
  ParamVector update;
  adam_moments(g, state, cfg, r.state.m, r.state.v, update);
  r.state.step = state.step + 1;
  r.state.branch_taken = Branch::na;
  r.w = apply_direction(w, update, cfg.eta, cfg.lambda);
  r.dir.c = r.state.m;
  r.dir.h_of_c = std::move(update);
  return r;
}

StepResult optimizer_step(const ParamVector& w, const ParamVector& g,
                          const OptimizerState& state, const OptimizerConfig& cfg) {
  switch (cfg.method) {
    case Method::sgd: return sgd_step(w, g, state, cfg);
    case Method::sgdm: return sgdm_step(w, g, state, cfg);
    case Method::signsgd: return signsgd_step(w, g, state, cfg);
    case Method::adam: return adam_step(w, g, state, cfg);
    case Method::adamw: return adamw_step(w, g, state, cfg);
    case Method::lion: return lion_step(w, g, state, cfg);
    case Method::rlion: return rlion_step(w, g, state, cfg);
    case Method::clion: return clion_step(w, g, state, cfg);
    case Method::lionk: return lionk_step(w, g, state, cfg, cfg.lionk_kind);
  }
  throw std::invalid_argument("unknown optimizer method");
}

}  // namespace lionlab
