#include "loopshape/fracapprox.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "loopshape/error.hpp"

namespace loopshape::frac {

namespace {

constexpr int kMaxCronePairs = 50;
constexpr int kMaxCfeOrder = 20;
constexpr int kMaxCarlsonIterations = 4;
constexpr std::size_t kMaxCarlsonDegree = 64;
constexpr double kDegenerateDivisor = 1e-12;
constexpr double kComplexResidue = 1e-9;

void check_order(double nu, double limit = kMaxOrder) {
  if (!std::isfinite(nu) || std::abs(nu) > limit) {
    throw Error(ErrorCode::OrderOutOfRange,
                "fractional order " + std::to_string(nu) + " outside [-" +
                    std::to_string(limit) + ", " + std::to_string(limit) + "]");
  }
}

void check_band(const CroneConfig& cfg) {
  if (!(cfg.omega_low_rad_s > 0.0) || !(cfg.omega_high_rad_s > cfg.omega_low_rad_s) ||
      !std::isfinite(cfg.omega_high_rad_s)) {
    throw Error(ErrorCode::InvalidArgument, "approximation band must satisfy 0 < low < high");
  }
  if (cfg.n_pairs < 1 || cfg.n_pairs > kMaxCronePairs) {
    throw Error(ErrorCode::OrderOutOfRange, "number of pole/zero pairs must be in [1, 50]");
  }
}

RationalTF s_power(int n) {
  if (n >= 0) return RationalTF(Polynomial::monomial(1.0, static_cast<std::size_t>(n)), {1.0});
  return RationalTF({1.0}, Polynomial::monomial(1.0, static_cast<std::size_t>(-n)));
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Crone: return "crone";
    case Method::Carlson: return "carlson";
    case Method::Matsuda: return "matsuda";
    case Method::Tustin: return "tustin";
    case Method::Sobfd: return "sobfd";
    case Method::Tobfd: return "tobfd";
  }
  return "crone";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Crone, Method::Carlson, Method::Matsuda, Method::Tustin,
                   Method::Sobfd, Method::Tobfd}) {
    if (name == method_name(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown approximation method '" +
                                              std::string(name) + "'");
}

bool is_discrete_method(Method m) {
  return m == Method::Tustin || m == Method::Sobfd || m == Method::Tobfd;
}

CfeMethod to_cfe(Method m) {
  switch (m) {
    case Method::Tustin: return CfeMethod::Tustin;
    case Method::Sobfd: return CfeMethod::Sobfd;
    case Method::Tobfd: return CfeMethod::Tobfd;
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "not a discrete approximation method");
}

CronePlacement crone_placement(double nu, double omega_low, double omega_high, int n_pairs) {
  check_order(nu, 1.0);
  check_band({omega_low, omega_high, n_pairs});
  CronePlacement out;
  const double ratio = omega_high / omega_low;
  const double two_n = 2.0 * n_pairs;
  for (int k = 1; k <= n_pairs; ++k) {
    out.zeros_rad_s.push_back(omega_low * std::pow(ratio, (2.0 * k - 1.0 - nu) / two_n));
    out.poles_rad_s.push_back(omega_low * std::pow(ratio, (2.0 * k - 1.0 + nu) / two_n));
  }
  return out;
}

RationalTF pairs_to_tf(const CronePlacement& placement) {
  Polynomial num{1.0};
  Polynomial den{1.0};
  for (double z : placement.zeros_rad_s) num = num * Polynomial{1.0, 1.0 / z};
  for (double p : placement.poles_rad_s) den = den * Polynomial{1.0, 1.0 / p};
  return RationalTF(std::move(num), std::move(den));
}

RationalTF crone(double nu, const CroneConfig& cfg) {
  check_order(nu);
  check_band(cfg);
  if (nu == 0.0) return RationalTF::gain(1.0);
  const int integer_part = std::abs(nu) > 1.0 ? static_cast<int>(std::trunc(nu)) : 0;
  const double remainder = nu - integer_part;
  RationalTF out = s_power(integer_part);
  if (remainder == 0.0) return out;
  const RationalTF shape =
      pairs_to_tf(crone_placement(remainder, cfg.omega_low_rad_s, cfg.omega_high_rad_s, cfg.n_pairs));
  const double center = std::sqrt(cfg.omega_low_rad_s * cfg.omega_high_rad_s);
  const double gain = std::pow(center, remainder) / std::abs(shape.at({0.0, center}));
  return series(out, shape.scaled(gain));
}

RationalTF carlson_root(const RationalTF& target, int q, int iterations) {
  if (q < 1) throw Error(ErrorCode::UnsupportedOrder, "Carlson root index must be positive");
  if (iterations < 1 || iterations > kMaxCarlsonIterations) {
    throw Error(ErrorCode::InvalidArgument, "Carlson iterations must be in [1, 4]");
  }
  const auto uq = static_cast<unsigned>(q);
  RationalTF f = RationalTF::gain(1.0);
  for (int i = 0; i < iterations; ++i) {
    const RationalTF fq(f.num().pow(uq), f.den().pow(uq));
    const RationalTF upper = parallel(fq.scaled(q - 1.0), target.scaled(q + 1.0));
    const RationalTF lower = parallel(fq.scaled(q + 1.0), target.scaled(q - 1.0));
    f = series(f, series(upper, reciprocal(lower)));
    if (f.order() > kMaxCarlsonDegree) {
      throw Error(ErrorCode::IterationBudget,
                  "Carlson iteration " + std::to_string(i + 1) + " reaches degree " +
                      std::to_string(f.order()) + " (limit 64)");
    }
  }
  return f;
}

RationalTF carlson(double nu, int iterations) {
  check_order(nu, 1.0);
  if (nu == 0.0) return RationalTF::gain(1.0);
  const double q = 1.0 / std::abs(nu);
  const double q_round = std::round(q);
  if (std::abs(q - q_round) > 1e-9 * q) {
    throw Error(ErrorCode::UnsupportedOrder,
                "Carlson needs 1/nu to be an integer, got nu = " + std::to_string(nu));
  }
  const RationalTF s({0.0, 1.0}, {1.0});
  RationalTF f = carlson_root(s, static_cast<int>(q_round), iterations);
  return nu > 0.0 ? f : reciprocal(f);
}

std::vector<double> log_points(double lo, double hi, std::size_t count) {
  std::vector<double> pts(count);
  if (count == 1) {
    pts[0] = std::sqrt(lo * hi);
    return pts;
  }
  const double span = std::log(hi / lo);
  for (std::size_t k = 0; k < count; ++k) {
    pts[k] = lo * std::exp(span * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  pts.front() = lo;
  pts.back() = hi;
  return pts;
}

RationalTF matsuda_fit(std::span<const double> points, std::span<const double> values) {
  const std::size_t m = points.size();
  if (m == 0 || values.size() != m) {
    throw Error(ErrorCode::InvalidArgument, "interpolation needs matching points and values");
  }
  // Work in x = s / scale so the recursion sees O(1) abscissae.
  double log_mean = 0.0;
  for (double p : points) log_mean += std::log(p);
  const double scale = std::exp(log_mean / static_cast<double>(m));
  std::vector<double> x(m);
  for (std::size_t k = 0; k < m; ++k) x[k] = points[k] / scale;

  std::vector<double> v(values.begin(), values.end());
  std::vector<double> a(m);
  for (std::size_t i = 0; i < m; ++i) {
    a[i] = v[i];
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = v[j] - a[i];
      if (std::abs(d) < kDegenerateDivisor) {
        throw Error(ErrorCode::DegenerateInterpolation,
                    "continued-fraction coefficient " + std::to_string(i + 1) +
                        " divides by " + std::to_string(d));
      }
      v[j] = (x[j] - x[i]) / d;
    }
  }
  Polynomial p{a[m - 1]};
  Polynomial q{1.0};
  for (std::size_t i = m - 1; i-- > 0;) {
    Polynomial next = a[i] * p + Polynomial{-x[i], 1.0} * q;
    q = std::move(p);
    p = std::move(next);
  }
  auto unscale = [scale](const Polynomial& poly) {
    std::vector<double> c = poly.vec();
    double f = 1.0;
    for (double& ck : c) {
      ck /= f;
      f *= scale;
    }
    return Polynomial(std::move(c));
  };
  return RationalTF(unscale(p), unscale(q));
}

RationalTF matsuda(double nu, const CroneConfig& band) {
  check_order(nu);
  check_band(band);
  if (!(std::abs(nu) < 1.0)) {
    throw Error(ErrorCode::OrderOutOfRange, "Matsuda approximation needs |nu| < 1");
  }
  if (nu == 0.0) return RationalTF::gain(1.0);
  const auto pts = log_points(band.omega_low_rad_s, band.omega_high_rad_s,
                              2 * static_cast<std::size_t>(band.n_pairs) + 1);
  std::vector<double> vals(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) vals[k] = std::pow(pts[k], nu);
  return matsuda_fit(pts, vals);
}

std::vector<std::complex<double>> tobfd_series_complex(double nu, double sample_period_s,
                                                       std::size_t terms) {
  // (1 - x)^v (x + r)^v (x + conj r)^v / (3T)^v, r = -7/4 - j sqrt(39)/4,
  // so (x + r)(x + conj r) = (2x^2 - 7x + 11)/2.
  const double v = nu;
  const std::complex<double> r(-1.75, -std::sqrt(39.0) / 4.0);
  const std::complex<double> rc = std::conj(r);
  const double pre = std::pow(3.0 * sample_period_s, -v);
  std::vector<std::complex<double>> cc(terms);
  for (std::size_t k = 0; k < terms; ++k) {
    std::complex<double> sum = 0.0;
    for (std::size_t t = 0; t <= k; ++t) {
      for (std::size_t p = 0; p <= t; ++p) {
        const double sign = (p % 2 == 0) ? 1.0 : -1.0;
        const auto n2 = static_cast<int>(t - p);
        const auto n3 = static_cast<int>(k - t);
        sum += sign * gamma_binomial(v, static_cast<int>(p)) * gamma_binomial(v, n2) *
               std::pow(r, v - n2) * gamma_binomial(v, n3) * std::pow(rc, v - n3);
      }
    }
    cc[k] = pre * sum;
  }
  return cc;
}

std::vector<double> cfe_series(double nu, CfeMethod method, double sample_period_s,
                               std::size_t terms) {
  const double v = nu;
  const double T = sample_period_s;
  std::vector<double> c(terms, 0.0);
  switch (method) {
    case CfeMethod::Tustin: {
      // ((1 - x)/(1 + x))^v (2/T)^v with x = z^-1.
      const double pre = std::pow(2.0 / T, v);
      for (std::size_t k = 0; k < terms; ++k) {
        double sum = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
          const double sign = (j % 2 == 0) ? 1.0 : -1.0;
          sum += sign * gamma_binomial(v, static_cast<int>(j)) *
                 gamma_binomial(-v, static_cast<int>(k - j));
        }
        c[k] = pre * sum;
      }
      break;
    }
    case CfeMethod::Sobfd: {
      // ((1 - x)(3 - x))^v / (2T)^v.
      const double pre = std::pow(2.0 * T, -v);
      for (std::size_t k = 0; k < terms; ++k) {
        double sum = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
          sum += std::pow(3.0, v - static_cast<double>(j)) *
                 gamma_binomial(v, static_cast<int>(j)) *
                 gamma_binomial(v, static_cast<int>(k - j));
        }
        c[k] = ((k % 2 == 0) ? 1.0 : -1.0) * pre * sum;
      }
      break;
    }
    case CfeMethod::Tobfd: {
      const auto cc = tobfd_series_complex(nu, sample_period_s, terms);
      double max_abs = 0.0;
      for (const auto& x : cc) max_abs = std::max(max_abs, std::abs(x));
      for (std::size_t k = 0; k < terms; ++k) {
        if (std::abs(cc[k].imag()) > kComplexResidue * max_abs) {
          throw Error(ErrorCode::ComplexResidue,
                      "TOBFD coefficient " + std::to_string(k) + " keeps an imaginary part " +
                          std::to_string(cc[k].imag()));
        }
        c[k] = cc[k].real();
      }
      break;
    }
  }
  return c;
}

PadeResult diagonal_pade(std::span<const double> series, int order) {
  if (order < 0 || series.size() < 2 * static_cast<std::size_t>(order) + 1) {
    throw Error(ErrorCode::InvalidArgument, "Pade [n/n] needs 2n+1 series terms");
  }
  double scale = 0.0;
  for (double v : series) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return {{0.0}, {1.0}};
  std::vector<double> c(series.begin(), series.end());
  for (double& v : c) v /= scale;

  for (int n = order; n >= 0; --n) {
    std::vector<double> q(static_cast<std::size_t>(n) + 1, 0.0);
    q[0] = 1.0;
    if (n > 0) {
      Eigen::MatrixXd a(n, n);
      Eigen::VectorXd rhs(n);
      for (int row = 0; row < n; ++row) {
        const int k = n + 1 + row;
        for (int j = 1; j <= n; ++j) a(row, j - 1) = c[static_cast<std::size_t>(k - j)];
        rhs(row) = -c[static_cast<std::size_t>(k)];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      lu.setThreshold(1e-12);
      if (lu.rank() < n) continue;
      const Eigen::VectorXd sol = lu.solve(rhs);
      for (int j = 1; j <= n; ++j) q[static_cast<std::size_t>(j)] = sol(j - 1);
    }
    std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k <= n; ++k) {
      double acc = 0.0;
      for (int j = 0; j <= k; ++j) acc += q[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(k - j)];
      p[static_cast<std::size_t>(k)] = acc * scale;
    }
    return {std::move(p), std::move(q)};
  }
  return {{c[0] * scale}, {1.0}};
}

RationalTF cfe_discretize(double nu, const CfeConfig& cfg, CfeMethod method) {
  check_order(nu, 1.0);
  if (!(cfg.sample_period_s > 0.0) || !std::isfinite(cfg.sample_period_s)) {
    throw Error(ErrorCode::InvalidArgument, "sample period must be positive");
  }
  if (cfg.order < 1 || cfg.order > kMaxCfeOrder) {
    throw Error(ErrorCode::OrderOutOfRange, "CFE truncation order must be in [1, 20]");
  }
  if (nu == 0.0) return RationalTF::discrete({1.0}, {1.0}, cfg.sample_period_s);
  const auto terms = cfe_series(nu, method, cfg.sample_period_s,
                                2 * static_cast<std::size_t>(cfg.order) + 1);
  const PadeResult pade = diagonal_pade(terms, cfg.order);
  // Multiplying num and den (both degree n in z^-1) by z^n reverses them.
  std::vector<double> num(pade.num.rbegin(), pade.num.rend());
  std::vector<double> den(pade.den.rbegin(), pade.den.rend());
  return RationalTF::discrete(Polynomial(std::move(num)), Polynomial(std::move(den)),
                              cfg.sample_period_s);
}

}  // namespace loopshape::frac
