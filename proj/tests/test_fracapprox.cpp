#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "loopshape/error.hpp"
#include "loopshape/fracapprox.hpp"

using namespace loopshape;
using namespace loopshape::frac;

namespace {

double deg(Complex z) { return std::arg(z) * 180.0 / M_PI; }
double db(Complex z) { return 20.0 * std::log10(std::abs(z)); }
double at_rad(const RationalTF& tf, double w, Complex* out = nullptr) {
  const Complex v = tf.response(rad_to_hz(w));
  if (out) *out = v;
  return std::abs(v);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("crone") == Method::Crone);
  CHECK(parse_method("tobfd") == Method::Tobfd);
  CHECK(method_name(Method::Matsuda) == "matsuda");
  CHECK(is_discrete_method(Method::Sobfd));
  CHECK(!is_discrete_method(Method::Carlson));
  CHECK_THROWS_AS(parse_method("oustaloup"), Error);
}

TEST_CASE("crone placement is geometric and interleaved") {
  const auto p = crone_placement(0.5, 1e-2, 1e2, 4);
  REQUIRE(p.zeros_rad_s.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(p.zeros_rad_s[k] < p.poles_rad_s[k]);
    if (k > 0) {
      CHECK(p.zeros_rad_s[k] / p.zeros_rad_s[k - 1] == doctest::Approx(10.0));
      CHECK(p.poles_rad_s[k - 1] < p.zeros_rad_s[k]);
    }
  }
  const auto lag = crone_placement(-0.5, 1e-2, 1e2, 4);
  CHECK(lag.zeros_rad_s[0] > lag.poles_rad_s[0]);
}

TEST_CASE("crone") {
  const RationalTF one = crone(0.0, {});
  CHECK(one.is_constant());
  CHECK(one.pole_count() == 0);
  CHECK(crone(0.5, {1e-2, 1e2, 2}).pole_count() == 2);

  Complex v;
  at_rad(crone(0.5, {1e-2, 1e2, 5}), 1.0, &v);
  CHECK(std::abs(deg(v) - 45.0) <= 2.0);
  CHECK(std::abs(db(v)) <= 0.5);

  // Integer part split off: s^1.5 = s * s^0.5.
  const RationalTF f = crone(1.5, {1e-2, 1e2, 5});
  at_rad(f, 1.0, &v);
  CHECK(std::abs(deg(v) - 135.0) <= 2.0);
  CHECK(at_rad(f, 10.0) == doctest::Approx(std::pow(10.0, 1.5)).epsilon(0.06));

  CHECK(code_of([] { crone(5.5, {}); }) == ErrorCode::OrderOutOfRange);
  CHECK(code_of([] { crone(0.5, {1e-2, 1e2, 0}); }) == ErrorCode::OrderOutOfRange);
  CHECK_THROWS_AS(crone(0.5, {1e2, 1e-2, 3}), Error);
}

TEST_CASE("carlson") {
  const RationalTF f1 = carlson(0.5, 1);
  CHECK(f1.num() == Polynomial{1.0, 3.0});
  CHECK(f1.den() == Polynomial{3.0, 1.0});
  CHECK(carlson(0.5, 2).pole_count() == 6);
  CHECK(carlson(-0.5, 1).num() == Polynomial{3.0, 1.0});
  for (int i = 1; i <= 3; ++i) CHECK(carlson(0.5, i).at(1.0).real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(carlson(1.0 / 3.0, 1).at(1.0).real() == doctest::Approx(1.0));
  CHECK(code_of([] { carlson(2.0 / 3.0, 1); }) == ErrorCode::UnsupportedOrder);
  CHECK(code_of([] { carlson(0.5, 5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { carlson(0.25, 4); }) == ErrorCode::IterationBudget);

  Complex v;
  CHECK(at_rad(carlson(0.5, 2), 1.0, &v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(deg(v) - 45.0) < 0.1);
}

TEST_CASE("matsuda interpolates its nodes") {
  CHECK(matsuda(0.0, {}).is_constant());
  CHECK(matsuda(0.5, {1e-2, 1e2, 2}).pole_count() == 2);
  for (double nu : {0.25, 0.5, 0.75, -0.4}) {
    for (int n : {1, 3, 6}) {
      const RationalTF tf = matsuda(nu, {1e-2, 1e2, n});
      for (double s : log_points(1e-2, 1e2, static_cast<std::size_t>(2 * n + 1))) {
        CHECK(std::abs(tf.at(s).real() / std::pow(s, nu) - 1.0) < 1e-9);
      }
    }
  }
  CHECK(code_of([] { matsuda(1.2, {}); }) == ErrorCode::OrderOutOfRange);
  const std::vector<double> pts{1.0, 2.0, 3.0};
  const std::vector<double> flat{1.0, 1.0, 1.0};
  CHECK(code_of([&] { matsuda_fit(pts, flat); }) == ErrorCode::DegenerateInterpolation);
}

TEST_CASE("log points") {
  const auto p = log_points(1e-2, 1e2, 5);
  REQUIRE(p.size() == 5);
  CHECK(p.front() == 1e-2);
  CHECK(p.back() == 1e2);
  CHECK(p[2] == doctest::Approx(1.0));
}

TEST_CASE("cfe series of integer orders are the generating rules") {
  // Tustin with nu = 1: (2/T)(1 - x)/(1 + x) = (2/T)(1 - 2x + 2x^2 - ...).
  const auto t = cfe_series(1.0, CfeMethod::Tustin, 0.001, 4);
  CHECK(t[0] == doctest::Approx(2000.0));
  CHECK(t[1] == doctest::Approx(-4000.0));
  CHECK(t[2] == doctest::Approx(4000.0));
  // Second-order backward difference: (3 - 4x + x^2)/(2T).
  const auto s = cfe_series(1.0, CfeMethod::Sobfd, 0.5, 4);
  CHECK(s[0] == doctest::Approx(3.0));
  CHECK(s[1] == doctest::Approx(-4.0));
  CHECK(s[2] == doctest::Approx(1.0));
  CHECK(std::abs(s[3]) < 1e-12);
  // Third-order backward difference: (11 - 18x + 9x^2 - 2x^3)/(6T).
  const auto b = cfe_series(1.0, CfeMethod::Tobfd, 1.0 / 6.0, 5);
  CHECK(b[0] == doctest::Approx(11.0));
  CHECK(b[1] == doctest::Approx(-18.0));
  CHECK(b[2] == doctest::Approx(9.0));
  CHECK(b[3] == doctest::Approx(-2.0));
  CHECK(std::abs(b[4]) < 1e-10);
}

TEST_CASE("half-order series squares to the generating rule") {
  const double T = 1e-3;
  for (auto m : {CfeMethod::Tustin, CfeMethod::Sobfd, CfeMethod::Tobfd}) {
    const auto h = cfe_series(0.5, m, T, 6);
    const auto w = cfe_series(1.0, m, T, 6);
    for (std::size_t k = 0; k < 6; ++k) {
      double sq = 0.0;
      for (std::size_t j = 0; j <= k; ++j) sq += h[j] * h[k - j];
      CHECK(sq == doctest::Approx(w[k]).epsilon(1e-10).scale(w[0]));
    }
  }
}

TEST_CASE("diagonal pade") {
  // exp(x) [1/1] = (1 + x/2)/(1 - x/2).
  const std::vector<double> e{1.0, 1.0, 0.5};
  const auto p = diagonal_pade(e, 1);
  REQUIRE(p.num.size() == 2);
  CHECK(p.num[1] == doctest::Approx(0.5));
  CHECK(p.den[1] == doctest::Approx(-0.5));
  // An exactly rational series falls back to its own lower degree.
  const std::vector<double> r{1.0, -1.0, 1.0, -1.0, 1.0};
  const auto q = diagonal_pade(r, 2);
  CHECK(q.den.size() == 2);
}

TEST_CASE("cfe discretization") {
  const double T = 0.001;
  const RationalTF d = cfe_discretize(1.0, {T, 1}, CfeMethod::Tustin);
  CHECK(d.is_discrete());
  CHECK(equivalent(d, RationalTF::discrete(Polynomial{-2000.0, 2000.0}, Polynomial{1.0, 1.0}, T), 1e-12));
  CHECK(cfe_discretize(0.0, {T, 3}, CfeMethod::Sobfd).is_constant());
  for (auto m : {CfeMethod::Tustin, CfeMethod::Sobfd, CfeMethod::Tobfd}) {
    const RationalTF tf = cfe_discretize(0.5, {1e-4, 3}, m);
    CHECK(tf.pole_count() == 3);
    const double w = 1000.0;
    CHECK(std::abs(20.0 * std::log10(at_rad(tf, w)) - 10.0 * std::log10(w)) < 1.5);
  }
  CHECK(code_of([] { cfe_discretize(0.5, {-1.0, 3}, CfeMethod::Tustin); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { cfe_discretize(0.5, {1e-3, 0}, CfeMethod::Tustin); }) == ErrorCode::OrderOutOfRange);
  CHECK(code_of([] { cfe_discretize(1.5, {1e-3, 3}, CfeMethod::Tustin); }) == ErrorCode::OrderOutOfRange);
}

TEST_CASE("tobfd residue of the conjugate pair") {
  for (const auto& c : tobfd_series_complex(0.3, 1e-3, 8)) CHECK(std::abs(c.imag()) < 1e-9 * std::abs(c.real()) + 1e-12);
}
