#include <cmath>
#include <string>

#include "loopshape/error.hpp"
#include "loopshape/fracapprox.hpp"

namespace loopshape::frac {

namespace {

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

}  // namespace

double gamma_fn(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "gamma of a non-finite value");
  if (is_nonpositive_integer(x)) {
    throw Error(ErrorCode::PoleArgument, "gamma has a pole at " + std::to_string(x));
  }
  return std::tgamma(x);
}

double rgamma(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "rgamma of a non-finite value");
  if (is_nonpositive_integer(x)) return 0.0;
  const double g = std::tgamma(x);
  // Overflow of Gamma means 1/Gamma underflows to its limit.
  if (!std::isfinite(g)) return 0.0;
  return 1.0 / g;
}

double gamma_binomial(double a, int n) {
  if (n < 0) return 0.0;
  if (!is_nonpositive_integer(a + 1.0)) {
    return gamma_fn(a + 1.0) * rgamma(n + 1.0) * rgamma(a - n + 1.0);
  }
  // a is a negative integer: Gamma(a+1) has a pole that cancels against
  // Gamma(a-n+1). Use the falling product, which is the limit value.
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= (a - i) / (i + 1);
  return r;
}

}  // namespace loopshape::frac
