#pragma once

#include <cmath>

namespace dtscr {

/// exp(x) / (1 + exp(x)) without overflow; exact 0 and 1 at -inf and +inf.
inline double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(1 + exp(x)).
inline double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace dtscr
