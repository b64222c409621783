#include <algorithm>
#include <cmath>
#include <filesystem>

#include <stdexcept>

#include "doctest.h"
#include "lionlab/problems.hpp"
#include "lionlab/rng.hpp"

using namespace lionlab;

namespace {

// Independent gradient oracle: central differences with a per-coordinate
// step h = 1e-6 * (1 + |w_j|).
ParamVector fd_grad(const Problem& p, const ParamVector& w, const Sample& s) {
  ParamVector g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::fabs(w[j]));
    ParamVector wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    g[j] = (loss(p, wp, s) - loss(p, wm, s)) / (2.0 * h);
  }
  return g;
}

double rel_linf_err(const ParamVector& a, const ParamVector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num = std::max(num, std::fabs(a[j] - b[j]));
    den = std::max(den, std::fabs(a[j]));
  }
  return num / (1.0 + den);
}

ParamVector random_w(std::uint64_t key, std::uint64_t t, std::size_t d, double scale) {
  ParamVector w(d);
  for (std::size_t j = 0; j < d; ++j) w[j] = scale * rng::gauss(key, t * d + j);
  return w;
}

struct Setup {
  Problem problem;
  Dataset data;
};

Setup make_setup(ProblemKind kind, std::size_t feature_dim, std::size_t n,
                 std::uint64_t seed) {
  GeneratorId gen = GeneratorId::quadratic_gauss;
  if (kind == ProblemKind::logistic || kind == ProblemKind::mlp2) {
    gen = GeneratorId::two_cluster;
  } else if (kind == ProblemKind::rosenbrock_sum) {
    gen = GeneratorId::rosen_zero;
  }
  Setup s{make_problem(kind, feature_dim), make_dataset(gen, seed, n, feature_dim)};
  declare_constants(s.problem, s.data);
  return s;
}

}  // namespace

TEST_CASE("loss special values") {
  Setup q = make_setup(ProblemKind::quadratic, 3, 4, 1);
  CHECK(loss(q.problem, q.data.samples[2].x, q.data.samples[2]) == 0.0);

  Setup l = make_setup(ProblemKind::logistic, 4, 4, 2);
  const ParamVector zero(4, 0.0);
  CHECK(loss(l.problem, zero, l.data.samples[0]) == doctest::Approx(std::log(2.0)));

  Setup m = make_setup(ProblemKind::mlp2, 5, 4, 3);
  const ParamVector zero_w(m.problem.dim, 0.0);
  CHECK(loss(m.problem, zero_w, m.data.samples[0]) ==
        doctest::Approx(std::log(2.0)));
  CHECK(loss(m.problem, zero_w, m.data.samples[1]) ==
        doctest::Approx(std::log(2.0)));
}

TEST_CASE("losses are non-negative") {
  const std::uint64_t key = rng::stream_key(31, rng::Role::dataset);
  for (ProblemKind kind : {ProblemKind::quadratic, ProblemKind::logistic,
                           ProblemKind::mlp2, ProblemKind::rosenbrock_sum}) {
    Setup s = make_setup(kind, 4, 6, 4);
    for (std::uint64_t t = 0; t < 50; ++t) {
      const ParamVector w = random_w(key, t, s.problem.dim, 1.5);
      for (const Sample& sample : s.data.samples) {
        CHECK(loss(s.problem, w, sample) >= 0.0);
      }
    }
  }
}

TEST_CASE("logistic gradient at the decision boundary") {
  Problem p = make_problem(ProblemKind::logistic, 2);
  Sample s;
  s.x = {1.0, 1.0};
  s.y = 1.0;
  const ParamVector g = grad(p, {0.0, 0.0}, s);  // <w,x> = 0
  CHECK(g[0] == doctest::Approx(-0.5));
  CHECK(g[1] == doctest::Approx(-0.5));
}

TEST_CASE("analytic gradients match central finite differences") {
  const std::uint64_t key = rng::stream_key(32, rng::Role::dataset);
  for (ProblemKind kind : {ProblemKind::quadratic, ProblemKind::logistic,
                           ProblemKind::mlp2, ProblemKind::rosenbrock_sum}) {
    Setup s = make_setup(kind, 4, 8, 5);
    for (std::uint64_t t = 0; t < 100; ++t) {
      const ParamVector w = random_w(key, t, s.problem.dim, 1.0);
      const Sample& sample = s.data.samples[t % s.data.n()];
      const ParamVector g = grad(s.problem, w, sample);
      const ParamVector fd = fd_grad(s.problem, w, sample);
      CHECK(rel_linf_err(g, fd) <= 1e-5);
    }
  }
}

TEST_CASE("full_grad is the mean of per-sample gradients") {
  Setup q = make_setup(ProblemKind::quadratic, 3, 2, 6);
  const ParamVector w{0.5, -0.25, 1.0};
  const ParamVector fg = full_grad(q.problem, w, q.data);
  for (std::size_t j = 0; j < 3; ++j) {
    const double mean_x = (q.data.samples[0].x[j] + q.data.samples[1].x[j]) / 2.0;
    CHECK(fg[j] == doctest::Approx(w[j] - mean_x));
  }

  Dataset single = make_dataset(GeneratorId::quadratic_gauss, 6, 1, 3);
  CHECK(full_grad(q.problem, w, single) == grad(q.problem, w, single.samples[0]));
}

TEST_CASE("full_grad vanishes at the quadratic empirical minimizer") {
  Setup q = make_setup(ProblemKind::quadratic, 4, 50, 7);
  ParamVector mean(4, 0.0);
  for (const Sample& s : q.data.samples) {
    for (std::size_t j = 0; j < 4; ++j) mean[j] += s.x[j];
  }
  for (double& x : mean) x /= static_cast<double>(q.data.n());
  CHECK(norm(full_grad(q.problem, mean, q.data), NormKind::linf) <= 1e-12);
}

TEST_CASE("full_grad is permutation invariant up to summation noise") {
  Setup l = make_setup(ProblemKind::logistic, 5, 40, 8);
  const ParamVector w = random_w(rng::stream_key(33, rng::Role::dataset), 0, 5, 1.0);
  const ParamVector a = full_grad(l.problem, w, l.data);
  Dataset reversed = l.data;
  std::reverse(reversed.samples.begin(), reversed.samples.end());
  const ParamVector b = full_grad(l.problem, w, reversed);
  for (std::size_t j = 0; j < a.size(); ++j) {
    CHECK(std::fabs(a[j] - b[j]) <= 1e-12);
  }
}

TEST_CASE("datasets regenerate byte-identically") {
  const Dataset a = make_dataset(GeneratorId::quadratic_gauss, 7, 10, 2);
  const Dataset b = make_dataset(GeneratorId::quadratic_gauss, 7, 10, 2);
  REQUIRE(a.n() == b.n());
  for (std::size_t i = 0; i < a.n(); ++i) {
    CHECK(a.samples[i].x == b.samples[i].x);
    CHECK(a.samples[i].y == b.samples[i].y);
  }
}

TEST_CASE("two-cluster labels are balanced") {
  for (std::size_t n : {9, 10, 51}) {
    const Dataset ds = make_dataset(GeneratorId::two_cluster, 9, n, 3);
    std::size_t pos = 0;
    for (const Sample& s : ds.samples) pos += s.y > 0 ? 1 : 0;
    CHECK(pos >= n / 2);
    CHECK(pos <= (n + 1) / 2);
  }
}

TEST_CASE("logistic gradients never exceed the declared bound") {
  Setup l = make_setup(ProblemKind::logistic, 5, 30, 10);
  REQUIRE(l.problem.lipschitz_G.has_value());
  const std::uint64_t key = rng::stream_key(34, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 100; ++t) {
    const ParamVector w = random_w(key, t, 5, 3.0);
    for (const Sample& s : l.data.samples) {
      CHECK(norm(grad(l.problem, w, s), NormKind::l2) <=
            *l.problem.lipschitz_G + 1e-12);
    }
  }
}

TEST_CASE("replace_sample changes exactly one position") {
  const Dataset ds = make_dataset(GeneratorId::two_cluster, 11, 12, 3);
  const Dataset rep = replace_sample(ds, 5, 999);
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.samples[i].x != rep.samples[i].x) ++diffs;
  }
  CHECK(diffs == 1);
  CHECK(ds.samples[4].x != rep.samples[4].x);
  // labels keep the position's class
  CHECK(ds.samples[4].y == rep.samples[4].y);
  CHECK_THROWS_AS(replace_sample(ds, 0, 1), std::out_of_range);
  CHECK_THROWS_AS(replace_sample(ds, 13, 1), std::out_of_range);
}

TEST_CASE("replace_sample with the original seed is a no-op") {
  const Dataset ds = make_dataset(GeneratorId::two_cluster, 11, 12, 3);
  const Dataset rep = replace_sample(ds, 5, ds.seed);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    CHECK(ds.samples[i].x == rep.samples[i].x);
  }
}

TEST_CASE("replacement draws follow the generator distribution") {
  const Dataset ds = make_dataset(GeneratorId::two_cluster, 13, 8, 4);
  // position 3 carries label -1, cluster mean -mu with mu_j = 1/2
  const double mu = -0.5;
  const std::size_t draws = 1000;
  ParamVector mean(4, 0.0);
  for (std::uint64_t k = 0; k < draws; ++k) {
    const Dataset rep = replace_sample(ds, 4, 10000 + k);
    for (std::size_t j = 0; j < 4; ++j) mean[j] += rep.samples[3].x[j];
  }
  const double se = 1.0 / std::sqrt(static_cast<double>(draws));
  for (std::size_t j = 0; j < 4; ++j) {
    mean[j] /= static_cast<double>(draws);
    CHECK(std::fabs(mean[j] - mu) <= 3.0 * se);
  }
}

TEST_CASE("gradient noise sigma") {
  Setup l = make_setup(ProblemKind::logistic, 4, 40, 14);
  const ParamVector w(4, 0.1);
  const double sigma = grad_noise_sigma(l.problem, w, l.data);
  CHECK(std::isfinite(sigma));
  CHECK(sigma > 0.0);

  // identical shifts: per-sample gradients coincide up to mean rounding
  Setup r = make_setup(ProblemKind::rosenbrock_sum, 4, 10, 15);
  CHECK(grad_noise_sigma(r.problem, ParamVector(4, 0.3), r.data) <= 1e-12);
}

TEST_CASE("dataset csv round trip is exact") {
  const Dataset ds = make_dataset(GeneratorId::two_cluster, 17, 9, 3);
  const std::string path =
      (std::filesystem::temp_directory_path() / "lionlab_ds_test.csv").string();
  write_dataset_csv(ds, path);
  const Dataset back = read_dataset_csv(path);
  REQUIRE(back.n() == ds.n());
  CHECK(back.generator == ds.generator);
  CHECK(back.seed == ds.seed);
  CHECK(back.feature_dim == ds.feature_dim);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    CHECK(back.samples[i].x == ds.samples[i].x);
    CHECK(back.samples[i].y == ds.samples[i].y);
  }
  std::filesystem::remove(path);
}

TEST_CASE("adversarial-tau generator carries a near-cancelling feature") {
  const Dataset ds = make_dataset(GeneratorId::adversarial_tau, 21, 30, 5);
  std::size_t pos = 0;
  double last_max = 0.0, informative_spread = 0.0;
  for (const Sample& s : ds.samples) {
    pos += s.y > 0 ? 1 : 0;
    last_max = std::max(last_max, std::fabs(s.x[4]));
    informative_spread = std::max(informative_spread, std::fabs(s.x[0]));
  }
  CHECK(pos == 15);  // balanced by parity
  CHECK(last_max < 0.1);
  CHECK(informative_spread > 0.5);
}

TEST_CASE("problem construction guards") {
  CHECK_THROWS_AS(make_problem(ProblemKind::rosenbrock_sum, 1), std::invalid_argument);
  const Problem mlp = make_problem(ProblemKind::mlp2, 20);
  CHECK(mlp.dim == 20 * 16 + 16 + 2 * 16 + 2);
  CHECK(mlp.feature_dim() == 20);
}
