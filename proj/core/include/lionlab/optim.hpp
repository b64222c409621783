#pragma once

#include <cstdint>
#include <string>

#include "lionlab/vecmath.hpp"

namespace lionlab {

enum class Method { sgd, sgdm, signsgd, adam, adamw, lion, rlion, clion, lionk };
enum class LionKKind { tanh_k, indicator_sign };
enum class Branch { sign, identity, na };

const char* method_name(Method m);
Method method_from_name(const std::string& name);
const char* branch_name(Branch b);

struct OptimizerConfig {
  Method method = Method::lion;
  double eta = 1e-3;          // learning rate
  double beta1 = 0.9;         // update-direction interpolation (Lion family),
                              // first-moment decay (Adam family), momentum (SGDM)
  double beta2 = 0.99;        // stored-momentum decay (Lion family),
                              // second-moment decay (Adam family)
  double lambda = 0.0;        // decoupled weight decay
  double nu = 1e-3;           // cautious threshold (clion)
  double alpha_curve = 10.0;  // arctan steepness (rlion)
  double a_tanh = 1.0;        // tanh slope (lionk)
  double e_indicator = 0.1;   // dead-zone half width (lionk)
  double epsilon = 1e-8;      // denominator guard (adam/adamw)
  LionKKind lionk_kind = LionKKind::tanh_k;
};

struct OptimizerState {
  ParamVector m;           // first momentum
  ParamVector v;           // second moment, adam family only
  std::uint64_t step = 0;  // completed steps
  Branch branch_taken = Branch::na;
};

struct UpdateDirection {
  ParamVector c;       // interpolated gradient estimator
  ParamVector h_of_c;  // activated direction actually applied
};

struct StepResult {
  ParamVector w;
  OptimizerState state;
  UpdateDirection dir;
};

// Throws std::invalid_argument naming the offending field.
void validate_config(const OptimizerConfig& cfg);

OptimizerState make_state(const OptimizerConfig& cfg, std::size_t dim);

// Every step rule is a pure function (w, g, state) -> (w', state', dir).
StepResult lion_step(const ParamVector& w, const ParamVector& g,
                     const OptimizerState& state, const OptimizerConfig& cfg);
StepResult clion_step(const ParamVector& w, const ParamVector& g,
                      const OptimizerState& state, const OptimizerConfig& cfg);
StepResult signsgd_step(const ParamVector& w, const ParamVector& g,
                        const OptimizerState& state, const OptimizerConfig& cfg);
StepResult rlion_step(const ParamVector& w, const ParamVector& g,
                      const OptimizerState& state, const OptimizerConfig& cfg);
StepResult lionk_step(const ParamVector& w, const ParamVector& g,
                      const OptimizerState& state, const OptimizerConfig& cfg,
                      LionKKind kind);
StepResult sgd_step(const ParamVector& w, const ParamVector& g,
                    const OptimizerState& state, const OptimizerConfig& cfg);
StepResult sgdm_step(const ParamVector& w, const ParamVector& g,
                     const OptimizerState& state, const OptimizerConfig& cfg);
StepResult adam_step(const ParamVector& w, const ParamVector& g,
                     const OptimizerState& state, const OptimizerConfig& cfg);
StepResult adamw_step(const ParamVector& w, const ParamVector& g,
                      const OptimizerState& state, const OptimizerConfig& cfg);

// Dispatch on cfg.method.
StepResult optimizer_step(const ParamVector& w, const ParamVector& g,
                          const OptimizerState& state, const OptimizerConfig& cfg);

}  // namespace lionlab
