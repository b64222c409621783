#include "lionlab/vecmath.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lionlab {

void require_finite(const ParamVector& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::domain_error(std::string(what) + ": non-finite component");
    }
  }
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

ParamVector sign_vec(const ParamVector& v) {
  require_finite(v, "sign_vec");
  ParamVector out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    out[j] = v[j] > 0.0 ? 1.0 : (v[j] < 0.0 ? -1.0 : 0.0);
  }
  return out;
}

double norm(const ParamVector& v, NormKind kind) {
  require_finite(v, "norm");
  double acc = 0.0;
  switch (kind) {
    case NormKind::l1:
      for (double x : v) acc += std::fabs(x);
      return acc;
    case NormKind::l2:
      for (double x : v) acc += x * x;
      return std::sqrt(acc);
    case NormKind::linf:
      for (double x : v) acc = std::max(acc, std::fabs(x));
      return acc;
  }
  return acc;
}

std::optional<double> min_abs_nonzero(const ParamVector& v) {
  require_finite(v, "min_abs_nonzero");
  std::optional<double> out;
  for (double x : v) {
    if (x == 0.0) continue;
    const double a = std::fabs(x);
    if (!out || a < *out) out = a;
  }
  return out;
}

ParamVector combine(double a, const ParamVector& x, double b, const ParamVector& y) {
  require_same_dim(x.size(), y.size(), "combine");
  ParamVector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = a * x[j] + b * y[j];
  }
  return out;
}

double dot(const ParamVector& x, const ParamVector& y) {
  require_same_dim(x.size(), y.size(), "dot");
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) acc += x[j] * y[j];
  return acc;
}

}  // namespace lionlab
