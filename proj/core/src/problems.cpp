#include "lionlab/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lionlab/rng.hpp"
#include "lionlab/version.hpp"

namespace lionlab {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

struct Mlp2Forward {
  std::vector<double> hidden;   // tanh activations
  std::vector<double> logits;
  std::vector<double> probs;
  double loss = 0.0;
};

// Parameter layout: [W1 (hidden x in, row-major), b1, W2 (classes x hidden), b2].
Mlp2Forward mlp2_forward(const Mlp2Arch& a, const ParamVector& w, const Sample& s) {
  Mlp2Forward f;
  f.hidden.resize(a.hidden);
  const double* w1 = w.data();
  const double* b1 = w1 + a.hidden * a.in;
  const double* w2 = b1 + a.hidden;
  const double* b2 = w2 + a.classes * a.hidden;
  for (std::size_t k = 0; k < a.hidden; ++k) {
    double z = b1[k];
    for (std::size_t j = 0; j < a.in; ++j) z += w1[k * a.in + j] * s.x[j];
    f.hidden[k] = std::tanh(z);
  }
  f.logits.resize(a.classes);
  for (std::size_t c = 0; c < a.classes; ++c) {
    double z = b2[c];
    for (std::size_t k = 0; k < a.hidden; ++k) z += w2[c * a.hidden + k] * f.hidden[k];
    f.logits[c] = z;
  }
  const double zmax = *std::max_element(f.logits.begin(), f.logits.end());
  double sum = 0.0;
  f.probs.resize(a.classes);
  for (std::size_t c = 0; c < a.classes; ++c) {
    f.probs[c] = std::exp(f.logits[c] - zmax);
    sum += f.probs[c];
  }
  for (std::size_t c = 0; c < a.classes; ++c) f.probs[c] /= sum;
  const std::size_t target = s.y > 0.0 ? 1 : 0;
  f.loss = -(f.logits[target] - zmax - std::log(sum));
  return f;
}

double rosenbrock(const ParamVector& u) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    const double a = u[j + 1] - u[j] * u[j];
    const double b = 1.0 - u[j];
    acc += 100.0 * a * a + b * b;
  }
  return acc;
}

Sample draw_sample(GeneratorId gen, std::uint64_t seed, std::size_t i,
                   std::size_t dim) {
  const std::uint64_t key = rng::stream_key(seed, rng::Role::dataset);
  Sample s;
  s.id = i;
  s.x.resize(dim);
  const std::uint64_t base = static_cast<std::uint64_t>(i) * dim;
  switch (gen) {
    case GeneratorId::quadratic_gauss:
      for (std::size_t j = 0; j < dim; ++j) s.x[j] = rng::gauss(key, base + j);
      s.y = 0.0;
      break;
    case GeneratorId::two_cluster: {
      // Balanced labels by parity; clusters at +/- mu with mu_j = 1/sqrt(dim).
      s.y = (i % 2 == 0) ? 1.0 : -1.0;
      const double mu = 1.0 / std::sqrt(static_cast<double>(dim));
      for (std::size_t j = 0; j < dim; ++j) {
        s.x[j] = s.y * mu + rng::gauss(key, base + j);
      }
      break;
    }
    case GeneratorId::rosen_zero:
      // Deterministic zero shifts: every per-sample gradient coincides.
      s.y = 0.0;
      break;
    case GeneratorId::adversarial_tau: {
      // Two-cluster classification data whose last feature carries no class
      // signal and nearly cancels across samples. On logistic losses the
      // matching coordinate of c_t then hovers close to zero at a scale set
      // by the feature itself, keeping tau tiny along the whole trajectory.
      s.y = (i % 2 == 0) ? 1.0 : -1.0;
      const std::size_t informative = dim > 1 ? dim - 1 : 1;
      const double mu = 1.0 / std::sqrt(static_cast<double>(informative));
      for (std::size_t j = 0; j < informative; ++j) {
        s.x[j] = s.y * mu + rng::gauss(key, base + j);
      }
      if (dim > 1) s.x[dim - 1] = 0.01 * rng::gauss(key, base + dim - 1);
      break;
    }
  }
  return s;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, p);
}

}  // namespace

const char* problem_kind_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::quadratic: return "quadratic";
    case ProblemKind::logistic: return "logistic";
    case ProblemKind::mlp2: return "mlp2";
    case ProblemKind::rosenbrock_sum: return "rosenbrock_sum";
  }
  return "?";
}

ProblemKind problem_kind_from_name(const std::string& name) {
  for (ProblemKind k : {ProblemKind::quadratic, ProblemKind::logistic,
                        ProblemKind::mlp2, ProblemKind::rosenbrock_sum}) {
    if (name == problem_kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown problem kind: " + name);
}

const char* generator_name(GeneratorId g) {
  switch (g) {
    case GeneratorId::quadratic_gauss: return "quadratic-gauss";
    case GeneratorId::two_cluster: return "two-cluster";
    case GeneratorId::rosen_zero: return "rosen-zero";
    case GeneratorId::adversarial_tau: return "adversarial-tau";
  }
  return "?";
}

GeneratorId generator_from_name(const std::string& name) {
  for (GeneratorId g : {GeneratorId::quadratic_gauss, GeneratorId::two_cluster,
                        GeneratorId::rosen_zero, GeneratorId::adversarial_tau}) {
    if (name == generator_name(g)) return g;
  }
  throw std::invalid_argument("unknown dataset generator: " + name);
}

Problem make_problem(ProblemKind kind, std::size_t feature_dim, std::size_t hidden) {
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  Problem p;
  p.kind = kind;
  switch (kind) {
    case ProblemKind::quadratic:
      p.dim = feature_dim;
      p.smooth_L = 1.0;
      break;
    case ProblemKind::logistic:
      p.dim = feature_dim;
      break;
    case ProblemKind::mlp2:
      p.arch = Mlp2Arch{feature_dim, hidden, 2};
      p.dim = p.arch.param_dim();
      break;
    case ProblemKind::rosenbrock_sum:
      if (feature_dim < 2)
        throw std::invalid_argument("rosenbrock_sum requires dim >= 2");
      p.dim = feature_dim;
      break;
  }
  return p;
}

void declare_constants(Problem& p, const Dataset& ds) {
  if (p.kind == ProblemKind::logistic) {
    double gmax = 0.0;
    for (const Sample& s : ds.samples) gmax = std::max(gmax, norm(s.x, NormKind::l2));
    p.lipschitz_G = gmax;
    p.smooth_L = gmax * gmax / 4.0;
  }
}

double loss(const Problem& p, const ParamVector& w, const Sample& s) {
  require_same_dim(w.size(), p.dim, "loss w");
  switch (p.kind) {
    case ProblemKind::quadratic: {
      require_same_dim(s.x.size(), p.dim, "loss sample");
      double acc = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double d = w[j] - s.x[j];
        acc += d * d;
      }
      return 0.5 * acc;
    }
    case ProblemKind::logistic: {
      require_same_dim(s.x.size(), p.dim, "loss sample");
      return softplus(-s.y * dot(w, s.x));
    }
    case ProblemKind::mlp2: {
      require_same_dim(s.x.size(), p.arch.in, "loss sample");
      return mlp2_forward(p.arch, w, s).loss;
    }
    case ProblemKind::rosenbrock_sum: {
      require_same_dim(s.x.size(), p.dim, "loss sample");
      ParamVector u(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) u[j] = w[j] - s.x[j];
      return rosenbrock(u);
    }
  }
  throw std::invalid_argument("unknown problem kind");
}

ParamVector grad(const Problem& p, const ParamVector& w, const Sample& s) {
  require_same_dim(w.size(), p.dim, "grad w");
  switch (p.kind) {
    case ProblemKind::quadratic: {
      require_same_dim(s.x.size(), p.dim, "grad sample");
      ParamVector g(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) g[j] = w[j] - s.x[j];
      return g;
    }
    case ProblemKind::logistic: {
      require_same_dim(s.x.size(), p.dim, "grad sample");
      const double z = dot(w, s.x);
      const double coef = -s.y * (1.0 - sigmoid(s.y * z));
      ParamVector g(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) g[j] = coef * s.x[j];
      return g;
    }
    case ProblemKind::mlp2: {
      require_same_dim(s.x.size(), p.arch.in, "grad sample");
      const Mlp2Arch& a = p.arch;
      const Mlp2Forward f = mlp2_forward(a, w, s);
      ParamVector g(w.size(), 0.0);
      double* g1 = g.data();
      double* gb1 = g1 + a.hidden * a.in;
      double* g2 = gb1 + a.hidden;
      double* gb2 = g2 + a.classes * a.hidden;
      const double* w2 = w.data() + a.hidden * a.in + a.hidden;
      const std::size_t target = s.y > 0.0 ? 1 : 0;
      std::vector<double> dlogit(a.classes);
      for (std::size_t c = 0; c < a.classes; ++c) {
        dlogit[c] = f.probs[c] - (c == target ? 1.0 : 0.0);
      }
      for (std::size_t c = 0; c < a.classes; ++c) {
        gb2[c] = dlogit[c];
        for (std::size_t k = 0; k < a.hidden; ++k) {
          g2[c * a.hidden + k] = dlogit[c] * f.hidden[k];
        }
      }
      for (std::size_t k = 0; k < a.hidden; ++k) {
        double dh = 0.0;
        for (std::size_t c = 0; c < a.classes; ++c) dh += dlogit[c] * w2[c * a.hidden + k];
        const double dpre = dh * (1.0 - f.hidden[k] * f.hidden[k]);
        gb1[k] = dpre;
        for (std::size_t j = 0; j < a.in; ++j) g1[k * a.in + j] = dpre * s.x[j];
      }
      return g;
    }
    case ProblemKind::rosenbrock_sum: {
      require_same_dim(s.x.size(), p.dim, "grad sample");
      const std::size_t d = w.size();
      ParamVector u(d), g(d, 0.0);
      for (std::size_t j = 0; j < d; ++j) u[j] = w[j] - s.x[j];
      for (std::size_t j = 0; j + 1 < d; ++j) {
        const double a = u[j + 1] - u[j] * u[j];
        g[j] += -400.0 * u[j] * a - 2.0 * (1.0 - u[j]);
        g[j + 1] += 200.0 * a;
      }
      return g;
    }
  }
  throw std::invalid_argument("unknown problem kind");
}

ParamVector full_grad(const Problem& p, const ParamVector& w, const Dataset& ds) {
  if (ds.n() == 0) throw std::invalid_argument("full_grad: empty dataset");
  ParamVector acc(w.size(), 0.0);
  for (const Sample& s : ds.samples) {
    const ParamVector g = grad(p, w, s);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
  }
  const double inv = 1.0 / static_cast<double>(ds.n());
  for (double& x : acc) x *= inv;
  return acc;
}

double full_loss(const Problem& p, const ParamVector& w, const Dataset& ds) {
  if (ds.n() == 0) throw std::invalid_argument("full_loss: empty dataset");
  double acc = 0.0;
  for (const Sample& s : ds.samples) acc += loss(p, w, s);
  return acc / static_cast<double>(ds.n());
}

Dataset make_dataset(GeneratorId gen, std::uint64_t seed, std::size_t n,
                     std::size_t dim) {
  if (n < 1) throw std::invalid_argument("dataset size must be >= 1");
  if (dim < 1) throw std::invalid_argument("dataset dim must be >= 1");
  Dataset ds;
  ds.generator = gen;
  ds.seed = seed;
  ds.feature_dim = dim;
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.samples.push_back(draw_sample(gen, seed, i, dim));
  }
  return ds;
}

Dataset replace_sample(const Dataset& ds, std::size_t i, std::uint64_t fresh_seed) {
  if (i < 1 || i > ds.n()) throw std::out_of_range("replace_sample: index out of range");
  Dataset out = ds;
  out.samples[i - 1] = draw_sample(ds.generator, fresh_seed, i - 1, ds.feature_dim);
  return out;
}

double grad_noise_sigma(const Problem& p, const ParamVector& w, const Dataset& ds) {
  const ParamVector mean = full_grad(p, w, ds);
  double acc = 0.0;
  for (const Sample& s : ds.samples) {
    const ParamVector g = grad(p, w, s);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double d = g[j] - mean[j];
      acc += d * d;
    }
  }
  return std::sqrt(acc / static_cast<double>(ds.n()));
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::string out;
  out += "# lionlab ";
  out += kVersion;
  out += " dataset generator=";
  out += generator_name(ds.generator);
  out += " seed=" + std::to_string(ds.seed);
  out += " n=" + std::to_string(ds.n());
  out += " dim=" + std::to_string(ds.feature_dim);
  out += "\n";
  for (const Sample& s : ds.samples) {
    for (double x : s.x) {
      append_double(out, x);
      out += ',';
    }
    append_double(out, s.y);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << out;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for read: " + path);
  Dataset ds;
  std::string line;
  bool have_header = false;
  std::size_t id = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line);
      std::string tok;
      while (hs >> tok) {
        auto eat = [&](const char* k) -> std::optional<std::string> {
          const std::string key(k);
          if (tok.rfind(key, 0) == 0) return tok.substr(key.size());
          return std::nullopt;
        };
        if (auto v = eat("generator=")) ds.generator = generator_from_name(*v);
        if (auto v = eat("seed=")) ds.seed = std::stoull(*v);
        if (auto v = eat("dim=")) ds.feature_dim = std::stoull(*v);
      }
      have_header = true;
      continue;
    }
    Sample s;
    s.id = id++;
    std::size_t pos = 0;
    std::vector<double> vals;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      double v = 0.0;
      auto res = std::from_chars(line.data() + pos, line.data() + next, v);
      if (res.ec != std::errc()) throw std::runtime_error("bad float in " + path);
      vals.push_back(v);
      pos = next + 1;
      if (next == line.size()) break;
    }
    if (vals.size() < 2) throw std::runtime_error("short row in " + path);
    s.y = vals.back();
    vals.pop_back();
    s.x = std::move(vals);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw std::runtime_error("empty dataset: " + path);
  if (!have_header) ds.feature_dim = ds.samples[0].x.size();
  return ds;
}

Problem build_problem(const ProblemSpec& ps) {
  return make_problem(ps.kind, ps.dim, ps.hidden);
}

Dataset build_train(const DatasetSpec& ds, std::size_t feature_dim) {
  return make_dataset(ds.generator, ds.seed, ds.n, feature_dim);
}

Dataset build_test(const DatasetSpec& ds, std::size_t feature_dim) {
  const std::uint64_t test_seed = rng::stream_key(ds.seed, rng::Role::test_dataset);
  return make_dataset(ds.generator, test_seed, ds.n * ds.test_multiplier, feature_dim);
}

ParamVector make_init(const InitSpec& init, std::uint64_t seed, std::size_t dim) {
  ParamVector w(dim, 0.0);
  if (init.kind == InitSpec::Kind::gauss) {
    const std::uint64_t key = rng::stream_key(seed, rng::Role::init);
    for (std::size_t j = 0; j < dim; ++j) w[j] = init.scale * rng::gauss(key, j);
  }
  return w;
}

}  // namespace lionlab
