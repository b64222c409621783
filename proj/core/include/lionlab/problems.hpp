#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lionlab/vecmath.hpp"

namespace lionlab {

enum class ProblemKind { quadratic, logistic, mlp2, rosenbrock_sum };
enum class GeneratorId { quadratic_gauss, two_cluster, rosen_zero, adversarial_tau };

const char* problem_kind_name(ProblemKind k);
ProblemKind problem_kind_from_name(const std::string& name);
const char* generator_name(GeneratorId g);
GeneratorId generator_from_name(const std::string& name);

struct Sample {
  ParamVector x;
  double y = 0.0;      // +/-1 label for classification, unused otherwise
  std::size_t id = 0;  // position in the dataset, 0-based
};

struct Dataset {
  GeneratorId generator = GeneratorId::quadratic_gauss;
  std::uint64_t seed = 0;
  std::size_t feature_dim = 0;
  std::vector<Sample> samples;

  std::size_t n() const { return samples.size(); }
};

struct Mlp2Arch {
  std::size_t in = 0;
  std::size_t hidden = 16;
  std::size_t classes = 2;

  std::size_t param_dim() const {
    return hidden * in + hidden + classes * hidden + classes;
  }
};

struct Problem {
  ProblemKind kind = ProblemKind::quadratic;
  std::size_t dim = 0;  // parameter dimension
  std::optional<double> lipschitz_G;
  std::optional<double> smooth_L;
  Mlp2Arch arch;  // mlp2 only

  std::size_t feature_dim() const { return kind == ProblemKind::mlp2 ? arch.in : dim; }
};

// feature_dim is the data dimension; for mlp2 the parameter dimension is
// derived from the architecture (in -> hidden tanh -> classes softmax).
Problem make_problem(ProblemKind kind, std::size_t feature_dim, std::size_t hidden = 16);

// Fills declared constants where the problem admits them: logistic gets
// G = max_i ||x_i|| and L = max_i ||x_i||^2 / 4; quadratic gets L = 1.
void declare_constants(Problem& p, const Dataset& ds);

double loss(const Problem& p, const ParamVector& w, const Sample& s);
ParamVector grad(const Problem& p, const ParamVector& w, const Sample& s);

// Mean of per-sample values in index order (deterministic summation).
ParamVector full_grad(const Problem& p, const ParamVector& w, const Dataset& ds);
double full_loss(const Problem& p, const ParamVector& w, const Dataset& ds);

Dataset make_dataset(GeneratorId gen, std::uint64_t seed, std::size_t n,
                     std::size_t dim);

// S^(i): position i (1-based) redrawn as make_dataset(gen, fresh_seed, ...)
// would draw it; every other sample is byte-identical.
Dataset replace_sample(const Dataset& ds, std::size_t i, std::uint64_t fresh_seed);

// sqrt of the empirical variance (1/N) sum_i ||grad_i - full_grad||^2 at w.
double grad_noise_sigma(const Problem& p, const ParamVector& w, const Dataset& ds);

void write_dataset_csv(const Dataset& ds, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

// Declarative pieces shared by the experiment drivers.

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  std::size_t dim = 1;  // feature dimension
  std::size_t hidden = 16;
};

struct DatasetSpec {
  GeneratorId generator = GeneratorId::quadratic_gauss;
  std::uint64_t seed = 0;
  std::size_t n = 1;
  std::size_t test_multiplier = 10;
};

struct InitSpec {
  enum class Kind { zeros, gauss } kind = Kind::zeros;
  double scale = 0.1;
};

Problem build_problem(const ProblemSpec& ps);
Dataset build_train(const DatasetSpec& ds, std::size_t feature_dim);
// Same generator, disjoint derived seed, size n * test_multiplier.
Dataset build_test(const DatasetSpec& ds, std::size_t feature_dim);
ParamVector make_init(const InitSpec& init, std::uint64_t seed, std::size_t dim);

}  // namespace lionlab
