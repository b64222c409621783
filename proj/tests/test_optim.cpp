#include <cmath>
#include <cstring>

#include <stdexcept>

#include "doctest.h"
#include "lionlab/optim.hpp"
#include "lionlab/rng.hpp"

using namespace lionlab;

namespace {

ParamVector random_vec(std::uint64_t key, std::uint64_t t, std::size_t d) {
  ParamVector v(d);
  for (std::size_t j = 0; j < d; ++j) v[j] = rng::gauss(key, t * d + j);
  return v;
}

bool bit_equal(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) return false;
  return a.empty() ||
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

OptimizerConfig lion_cfg(double eta, double b1, double b2, double lambda) {
  OptimizerConfig c;
  c.method = Method::lion;
  c.eta = eta;
  c.beta1 = b1;
  c.beta2 = b2;
  c.lambda = lambda;
  return c;
}

}  // namespace

TEST_CASE("make_state") {
  OptimizerConfig lion = lion_cfg(0.1, 0.9, 0.99, 0.0);
  const OptimizerState s = make_state(lion, 3);
  CHECK(s.m == ParamVector{0.0, 0.0, 0.0});
  CHECK(s.step == 0);
  CHECK(s.branch_taken == Branch::na);

  OptimizerConfig clion = lion;
  clion.method = Method::clion;
  clion.nu = 0.0;
  CHECK_THROWS_WITH_AS(make_state(clion, 3), "nu must be positive",
                       std::invalid_argument);

  OptimizerConfig sgd;
  sgd.method = Method::sgd;
  sgd.eta = 0.1;
  CHECK(make_state(sgd, 1).step == 0);

  OptimizerConfig bad = lion;
  bad.eta = -1.0;
  CHECK_THROWS_WITH_AS(make_state(bad, 1), "eta must be positive",
                       std::invalid_argument);
}

TEST_CASE("lion_step hand trace") {
  const OptimizerConfig cfg = lion_cfg(0.1, 0.9, 0.99, 0.0);
  const OptimizerState s0 = make_state(cfg, 2);
  const StepResult r = lion_step({1.0, 1.0}, {2.0, -3.0}, s0, cfg);
  CHECK(r.dir.c[0] == doctest::Approx(0.2));
  CHECK(r.dir.c[1] == doctest::Approx(-0.3));
  CHECK(r.w[0] == doctest::Approx(0.9));
  CHECK(r.w[1] == doctest::Approx(1.1));
  CHECK(r.state.m[0] == doctest::Approx(0.02));
  CHECK(r.state.m[1] == doctest::Approx(-0.03));
  CHECK(r.state.step == 1);
}

TEST_CASE("lion_step fixed point at zero gradient and momentum") {
  const OptimizerConfig cfg = lion_cfg(0.1, 0.9, 0.99, 0.0);
  const ParamVector w{0.4, -0.7};
  const StepResult r = lion_step(w, {0.0, 0.0}, make_state(cfg, 2), cfg);
  CHECK(r.w == w);
  CHECK(r.dir.h_of_c == ParamVector{0.0, 0.0});
}

TEST_CASE("lion_step with decoupled decay") {
  // beta1 = 0 makes c = g, so sign(c) = (1,-1)
  const OptimizerConfig cfg = lion_cfg(0.1, 0.0, 0.99, 0.5);
  const StepResult r = lion_step({1.0, 1.0}, {3.0, -2.0}, make_state(cfg, 2), cfg);
  CHECK(r.w[0] == doctest::Approx(0.85));
  CHECK(r.w[1] == doctest::Approx(1.05));
}

TEST_CASE("clion identity branch hand trace") {
  OptimizerConfig cfg = lion_cfg(0.1, 0.0, 0.99, 0.0);
  cfg.method = Method::clion;
  cfg.nu = 0.01;
  const StepResult r =
      clion_step({0.0, 0.0}, {0.5, -0.002}, make_state(cfg, 2), cfg);
  CHECK(r.state.branch_taken == Branch::identity);
  CHECK(r.w[0] == doctest::Approx(-0.05));
  CHECK(r.w[1] == doctest::Approx(0.0002));
}

TEST_CASE("clion sign branch matches lion bit for bit") {
  OptimizerConfig clion = lion_cfg(0.1, 0.9, 0.99, 0.03);
  clion.method = Method::clion;
  clion.nu = 0.01;
  const OptimizerConfig lion = lion_cfg(0.1, 0.9, 0.99, 0.03);
  const std::uint64_t key = rng::stream_key(21, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 100; ++t) {
    ParamVector w = random_vec(key, 2 * t, 4);
    ParamVector g = random_vec(key, 2 * t + 1, 4);
    for (double& x : g) x += (x >= 0 ? 1.0 : -1.0);  // keep |c_j| >= nu
    const StepResult a = clion_step(w, g, make_state(clion, 4), clion);
    const StepResult b = lion_step(w, g, make_state(lion, 4), lion);
    REQUIRE(a.state.branch_taken == Branch::sign);
    CHECK(bit_equal(a.w, b.w));
    CHECK(bit_equal(a.state.m, b.state.m));
  }
}

TEST_CASE("clion zero coordinate is excluded from the branch condition") {
  OptimizerConfig cfg = lion_cfg(0.1, 0.0, 0.99, 0.0);
  cfg.method = Method::clion;
  cfg.nu = 0.01;
  const StepResult r = clion_step({0.0, 0.0}, {0.5, 0.0}, make_state(cfg, 2), cfg);
  CHECK(r.state.branch_taken == Branch::sign);
  CHECK(r.dir.h_of_c == ParamVector{1.0, 0.0});
}

TEST_CASE("clion with c = 0 takes the identity branch") {
  OptimizerConfig cfg = lion_cfg(0.1, 0.9, 0.99, 0.0);
  cfg.method = Method::clion;
  cfg.nu = 0.01;
  const ParamVector w{0.3, 0.3};
  const StepResult r = clion_step(w, {0.0, 0.0}, make_state(cfg, 2), cfg);
  CHECK(r.state.branch_taken == Branch::identity);
  CHECK(r.w == w);
}

TEST_CASE("signsgd definition") {
  OptimizerConfig cfg;
  cfg.method = Method::signsgd;
  cfg.eta = 0.01;
  cfg.beta1 = cfg.beta2 = 0.0;
  cfg.lambda = 0.0;
  const StepResult r = signsgd_step({0.0, 0.0}, {5.0, -0.1}, make_state(cfg, 2), cfg);
  CHECK(r.w[0] == doctest::Approx(-0.01));
  CHECK(r.w[1] == doctest::Approx(0.01));
  const ParamVector w{1.0, -1.0};
  CHECK(signsgd_step(w, {0.0, 0.0}, make_state(cfg, 2), cfg).w == w);
}

TEST_CASE("signsgd equals lion with beta1=beta2=lambda=0, bit for bit") {
  OptimizerConfig sign_cfg;
  sign_cfg.method = Method::signsgd;
  sign_cfg.eta = 0.05;
  sign_cfg.beta1 = sign_cfg.beta2 = 0.0;
  sign_cfg.lambda = 0.0;
  const OptimizerConfig lion = lion_cfg(0.05, 0.0, 0.0, 0.0);
  const std::uint64_t key = rng::stream_key(22, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 2000; ++t) {
    const ParamVector w = random_vec(key, 2 * t, 5);
    const ParamVector g = random_vec(key, 2 * t + 1, 5);
    const StepResult a = signsgd_step(w, g, make_state(sign_cfg, 5), sign_cfg);
    const StepResult b = lion_step(w, g, make_state(lion, 5), lion);
    CHECK(bit_equal(a.w, b.w));
  }
}

TEST_CASE("rlion activation values") {
  OptimizerConfig cfg = lion_cfg(0.1, 0.0, 0.99, 0.0);
  cfg.method = Method::rlion;
  cfg.alpha_curve = 1e4;
  const StepResult r =
      rlion_step({0.0, 0.0, 0.0}, {1.0, 0.0, -1.0}, make_state(cfg, 3), cfg);
  // (2/pi)*atan(1e4) evaluated independently
  CHECK(r.dir.h_of_c[0] == doctest::Approx(0.99993634).epsilon(1e-6));
  CHECK(r.dir.h_of_c[1] == 0.0);
  CHECK(r.dir.h_of_c[2] == doctest::Approx(-0.99993634).epsilon(1e-6));
}

TEST_CASE("rlion arctan tail bound |h - sign| <= 2/(pi*alpha*|c|)") {
  OptimizerConfig cfg = lion_cfg(0.1, 0.0, 0.99, 0.0);
  cfg.method = Method::rlion;
  const std::uint64_t key = rng::stream_key(23, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 200; ++t) {
    cfg.alpha_curve = std::exp2(1.0 + 20.0 * rng::uniform01(key, 900 + t));
    const ParamVector g = random_vec(key, t, 4);
    const StepResult r = rlion_step({0, 0, 0, 0}, g, make_state(cfg, 4), cfg);
    for (std::size_t j = 0; j < 4; ++j) {
      if (g[j] == 0.0) continue;
      const double bound =
          2.0 / (3.141592653589793 * cfg.alpha_curve * std::fabs(g[j]));
      CHECK(std::fabs(r.dir.h_of_c[j] - (g[j] > 0 ? 1.0 : -1.0)) <= bound + 1e-15);
    }
  }
}

TEST_CASE("lionk activations") {
  OptimizerConfig cfg = lion_cfg(0.1, 0.0, 0.99, 0.0);
  cfg.method = Method::lionk;
  cfg.e_indicator = 0.1;
  const StepResult dead = lionk_step({0.0, 0.0}, {0.05, -0.5}, make_state(cfg, 2),
                                     cfg, LionKKind::indicator_sign);
  CHECK(dead.dir.h_of_c == ParamVector{0.0, -1.0});

  cfg.a_tanh = 50.0;  // saturation regime
  const StepResult sat = lionk_step({0.0, 0.0}, {1.0, -1.0}, make_state(cfg, 2), cfg,
                                    LionKKind::tanh_k);
  CHECK(sat.dir.h_of_c[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sat.dir.h_of_c[1] == doctest::Approx(-1.0).epsilon(1e-12));

  cfg.a_tanh = 1.0;
  const StepResult zero =
      lionk_step({0.0}, {0.0}, make_state(cfg, 1), cfg, LionKKind::tanh_k);
  CHECK(zero.dir.h_of_c[0] == 0.0);
}

TEST_CASE("sgd and sgdm") {
  OptimizerConfig cfg;
  cfg.method = Method::sgd;
  cfg.eta = 0.1;
  const StepResult r = sgd_step({1.0}, {0.5}, make_state(cfg, 1), cfg);
  CHECK(r.w[0] == doctest::Approx(0.95));

  OptimizerConfig m_cfg;
  m_cfg.method = Method::sgdm;
  m_cfg.eta = 0.1;
  m_cfg.beta1 = 0.9;
  OptimizerState s = make_state(m_cfg, 1);
  StepResult r1 = sgdm_step({1.0}, {1.0}, s, m_cfg);
  CHECK(r1.state.m[0] == doctest::Approx(1.0));  // heavy ball: m' = 0.9*0 + 1
  CHECK(r1.w[0] == doctest::Approx(0.9));
  StepResult r2 = sgdm_step(r1.w, {1.0}, r1.state, m_cfg);
  CHECK(r2.state.m[0] == doctest::Approx(1.9));
  CHECK(r2.w[0] == doctest::Approx(0.9 - 0.19));
}

TEST_CASE("adam first step hand trace") {
  OptimizerConfig cfg;
  cfg.method = Method::adam;
  cfg.eta = 0.001;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.999;
  cfg.epsilon = 1e-8;
  const StepResult r = adam_step({0.0}, {1.0}, make_state(cfg, 1), cfg);
  // m_hat = v_hat = 1 after bias correction, so the update is 1/(1 + eps)
  CHECK(r.w[0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-14));
}

TEST_CASE("adamw with lambda=0 equals adam step for step") {
  OptimizerConfig a;
  a.method = Method::adam;
  a.eta = 0.01;
  a.beta1 = 0.9;
  a.beta2 = 0.999;
  OptimizerConfig w_cfg = a;
  w_cfg.method = Method::adamw;
  w_cfg.lambda = 0.0;
  const std::uint64_t key = rng::stream_key(24, rng::Role::dataset);
  ParamVector w = random_vec(key, 0, 6);
  OptimizerState sa = make_state(a, 6);
  OptimizerState sw = sa;
  for (std::uint64_t t = 1; t <= 300; ++t) {
    const ParamVector g = random_vec(key, t, 6);
    const StepResult ra = adam_step(w, g, sa, a);
    const StepResult rw = adamw_step(w, g, sw, w_cfg);
    REQUIRE(bit_equal(ra.w, rw.w));
    REQUIRE(bit_equal(ra.state.v, rw.state.v));
    w = ra.w;
    sa = ra.state;
    sw = rw.state;
  }
}

TEST_CASE("sign-branch step size cap: ||w'-w||_inf = eta when lambda = 0") {
  const OptimizerConfig cfg = lion_cfg(0.07, 0.9, 0.99, 0.0);
  const std::uint64_t key = rng::stream_key(25, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 100; ++t) {
    const ParamVector w = random_vec(key, 2 * t, 5);
    const ParamVector g = random_vec(key, 2 * t + 1, 5);
    const StepResult r = lion_step(w, g, make_state(cfg, 5), cfg);
    double max_move = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      const double move = std::fabs(r.w[j] - w[j]);
      CHECK(move <= cfg.eta + 1e-15);
      if (r.dir.c[j] != 0.0) CHECK(move == doctest::Approx(cfg.eta).epsilon(1e-15));
      max_move = std::max(max_move, move);
    }
    CHECK(max_move <= cfg.eta + 1e-15);
  }
}

TEST_CASE("lion direction is invariant to positive gradient scaling") {
  const std::uint64_t key = rng::stream_key(26, rng::Role::dataset);
  const OptimizerConfig cfg = lion_cfg(0.05, 0.9, 0.99, 0.0);
  for (std::uint64_t t = 0; t < 100; ++t) {
    const ParamVector w = random_vec(key, 3 * t, 4);
    const ParamVector g = random_vec(key, 3 * t + 1, 4);
    const double scale = std::exp2(10.0 * (rng::uniform01(key, 5000 + t) - 0.5));
    ParamVector gs(4);
    for (std::size_t j = 0; j < 4; ++j) gs[j] = scale * g[j];
    const StepResult r1 = lion_step(w, g, make_state(cfg, 4), cfg);
    const StepResult r2 = lion_step(w, gs, make_state(cfg, 4), cfg);
    CHECK(r1.dir.h_of_c == r2.dir.h_of_c);
    CHECK(r1.w == r2.w);
  }
}

TEST_CASE("step functions are pure") {
  const std::uint64_t key = rng::stream_key(27, rng::Role::dataset);
  const ParamVector w = random_vec(key, 0, 4);
  const ParamVector g = random_vec(key, 1, 4);
  for (Method m : {Method::sgd, Method::sgdm, Method::signsgd, Method::adam,
                   Method::adamw, Method::lion, Method::rlion, Method::clion,
                   Method::lionk}) {
    OptimizerConfig cfg = lion_cfg(0.05, 0.9, 0.99, 0.0);
    cfg.method = m;
    const OptimizerState s = make_state(cfg, 4);
    const StepResult r1 = optimizer_step(w, g, s, cfg);
    const StepResult r2 = optimizer_step(w, g, s, cfg);
    CHECK(bit_equal(r1.w, r2.w));
    CHECK(bit_equal(r1.state.m, r2.state.m));
    CHECK(r1.state.step == r2.state.step);
  }
}

TEST_CASE("every activation is odd-monotone sign compatible") {
  const std::uint64_t key = rng::stream_key(28, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 100; ++t) {
    const ParamVector g = random_vec(key, t, 6);
    OptimizerConfig cfg = lion_cfg(0.05, 0.0, 0.99, 0.0);  // c = g
    for (Method m : {Method::lion, Method::rlion, Method::clion, Method::lionk}) {
      cfg.method = m;
      cfg.nu = 0.5;
      const StepResult r = optimizer_step({0, 0, 0, 0, 0, 0}, g, make_state(cfg, 6), cfg);
      for (std::size_t j = 0; j < 6; ++j) {
        const double h = r.dir.h_of_c[j];
        const bool sign_match = (h > 0) == (g[j] > 0) && (h < 0) == (g[j] < 0);
        CHECK((h == 0.0 || sign_match));
      }
    }
  }
}

TEST_CASE("dimension and finiteness errors") {
  const OptimizerConfig cfg = lion_cfg(0.1, 0.9, 0.99, 0.0);
  CHECK_THROWS_AS(lion_step({1.0}, {1.0, 2.0}, make_state(cfg, 1), cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      lion_step({1.0}, {std::numeric_limits<double>::quiet_NaN()},
                make_state(cfg, 1), cfg),
      std::domain_error);
  OptimizerConfig sign_cfg;
  sign_cfg.method = Method::signsgd;
  sign_cfg.lambda = 0.5;
  CHECK_THROWS_WITH_AS(validate_config(sign_cfg), "lambda must be 0 for signsgd",
                       std::invalid_argument);
}
