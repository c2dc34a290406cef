#pragma once

#include <functional>
#include <complex>
#include <span>
#include <string_view>
#include <vector>

#include "loopshape/transfer_function.hpp"

/// Integer-order rational approximations of the fractional operator s^nu.
namespace loopshape::frac {

/// Gamma function; throws PoleArgument at non-positive integers.
double gamma_fn(double x);
/// 1/Gamma(x), defined for every real and exactly 0 at non-positive integers.
double rgamma(double x);
/// Generalized binomial coefficient Gamma(a+1) / (Gamma(n+1) Gamma(a-n+1)).
double gamma_binomial(double a, int n);

/// Largest |nu| any method accepts.
constexpr double kMaxOrder = 5.0;

struct CroneConfig {
  double omega_low_rad_s = 1e-2;
  double omega_high_rad_s = 1e2;
  int n_pairs = 5;
};

struct CfeConfig {
  double sample_period_s = 1e-3;
  int order = 3;
};

enum class Method { Crone, Carlson, Matsuda, Tustin, Sobfd, Tobfd };
enum class CfeMethod { Tustin, Sobfd, Tobfd };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
bool is_discrete_method(Method m);
CfeMethod to_cfe(Method m);

/// Recursive zero/pole placement over [omega_low, omega_high] for an order
/// |nu| < 1. Zeros and poles are in rad/s, both of length n_pairs.
struct CronePlacement {
  std::vector<double> zeros_rad_s;
  std::vector<double> poles_rad_s;
};
CronePlacement crone_placement(double nu, double omega_low, double omega_high, int n_pairs);

/// Product of (1 + s/z_k)/(1 + s/p_k); unit gain at DC.
RationalTF pairs_to_tf(const CronePlacement& placement);

/// Band-limited CRONE (Oustaloup) approximation. The gain is fixed so that
/// |F(j w_u)| = w_u^nu at w_u = sqrt(omega_low*omega_high). Orders with
/// |nu| > 1 are split into s^n times s^(nu-n), n = trunc(nu).
RationalTF crone(double nu, const CroneConfig& cfg);

/// Carlson's Newton-type iteration F_i = F_{i-1} ((q-1)F^q + (q+1)s) /
/// ((q+1)F^q + (q-1)s) with q = 1/nu and F_0 = 1. The iterate is assembled
/// with plain rational arithmetic and nothing cancels, so every iteration
/// keeps the common factors of the two bracketed terms.
RationalTF carlson(double nu, int iterations);

/// The same iteration for target^(1/q), target a rational function.
RationalTF carlson_root(const RationalTF& target, int q, int iterations);

/// Continued-fraction (Thiele) interpolation of a positive function sampled
/// at real points s_k. The result satisfies F(s_k) = values[k] exactly.
RationalTF matsuda_fit(std::span<const double> points, std::span<const double> values);

/// Matsuda approximation of s^nu interpolating w^nu at 2*n_pairs+1
/// logarithmically spaced points spanning the band, endpoints included.
RationalTF matsuda(double nu, const CroneConfig& band);

std::vector<double> log_points(double lo, double hi, std::size_t count);

/// Power-series coefficients c_k of the discretized operator in z^-1,
/// (generating rule)^nu = sum_k c_k z^-k, k < terms, from the gamma sums.
std::vector<double> cfe_series(double nu, CfeMethod method, double sample_period_s,
                               std::size_t terms);

/// Third-order backward-difference series before the imaginary parts of the
/// conjugate root pair are discarded.
std::vector<std::complex<double>> tobfd_series_complex(double nu, double sample_period_s,
                                                       std::size_t terms);

/// Diagonal Pade approximant [n/n] of a power series, i.e. the truncated
/// continued fraction. Returns numerator and denominator in ascending powers
/// of the series variable with q[0] = 1. A series that is exactly rational
/// of lower degree yields that lower degree.
struct PadeResult {
  std::vector<double> num;
  std::vector<double> den;
};
PadeResult diagonal_pade(std::span<const double> series, int order);

/// Discrete approximation of s^nu: generating rule raised to nu, expanded,
/// and truncated to a rational function of degree `order` in z^-1.
RationalTF cfe_discretize(double nu, const CfeConfig& cfg, CfeMethod method);

}  // namespace loopshape::frac
