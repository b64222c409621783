#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace lionlab {

// Flat dense parameter vector. All entries are expected to stay finite;
// operations below reject NaN/Inf inputs.
using ParamVector = std::vector<double>;

enum class NormKind { l1, l2, linf };

// Throws std::domain_error("non-finite component") on NaN/Inf.
void require_finite(const ParamVector& v, const char* what);
// Throws std::invalid_argument on mismatch.
void require_same_dim(std::size_t a, std::size_t b, const char* what);

// Componentwise sign with sign(0) = 0 exactly; no epsilon thresholding.
ParamVector sign_vec(const ParamVector& v);

// Norms use naive left-to-right summation so replays are byte-exact.
double norm(const ParamVector& v, NormKind kind);

// min_{j: v_j != 0} |v_j|; empty when every component is exactly zero.
std::optional<double> min_abs_nonzero(const ParamVector& v);

// a*x + b*y componentwise.
ParamVector combine(double a, const ParamVector& x, double b, const ParamVector& y);

double dot(const ParamVector& x, const ParamVector& y);

}  // namespace lionlab
