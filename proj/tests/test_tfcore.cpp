#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "loopshape/error.hpp"
#include "loopshape/polynomial.hpp"
#include "loopshape/transfer_function.hpp"

using namespace loopshape;

namespace {

double deg(Complex z) { return std::arg(z) * 180.0 / M_PI; }
const double kOneRad = 1.0 / kTwoPi;

}  // namespace

TEST_CASE("polynomial arithmetic") {
  CHECK((Polynomial{1.0, 1.0} * Polynomial{1.0, 1.0}) == Polynomial{1.0, 2.0, 1.0});
  CHECK((Polynomial{1.0} + Polynomial{0.0}) == Polynomial{1.0});
  const Polynomial z = Polynomial{0.0} * Polynomial{3.0, 2.0};
  CHECK(z.is_zero());
  CHECK(z.degree() == 0);
  CHECK((Polynomial{1.0, 2.0} - Polynomial{1.0, 2.0}).is_zero());
  CHECK(Polynomial{1.0, 1.0}.pow(3) == Polynomial{1.0, 3.0, 3.0, 1.0});
  CHECK(Polynomial{1.0, 2.0, 3.0}.reversed() == Polynomial{3.0, 2.0, 1.0});
  CHECK(Polynomial{2.0, 0.0, 0.0}.degree() == 0);
}

TEST_CASE("leading cancellation trims the degree") {
  const Polynomial a{1.0, 0.1 + 0.2, 1.0};
  const Polynomial b{0.0, 0.3, -1.0};
  CHECK((a + b).degree() == 1);
}

TEST_CASE("polynomial evaluation and roots") {
  const Polynomial p{6.0, -5.0, 1.0};
  CHECK(p(2.0) == 0.0);
  CHECK(p(Complex(0.0, 1.0)) == Complex(5.0, -5.0));
  auto r = p.roots();
  REQUIRE(r.size() == 2);
  std::sort(r.begin(), r.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
  CHECK(r[0].real() == doctest::Approx(2.0));
  CHECK(r[1].real() == doctest::Approx(3.0));
  CHECK(Polynomial{0.0, 0.0, 1.0}.roots().size() == 2);
}

TEST_CASE("badly scaled polynomial roots") {
  const std::vector<Complex> expect{{-1e-3, 0.0}, {-1.0, 0.0}, {-1e4, 0.0}, {-1e3, 9949.8743710662}};
  // (s + 1e-3)(s + 1)(s + 1e4)(s^2 + 2e3 s + 1e8)
  const Polynomial p = Polynomial{1e-3, 1.0} * Polynomial{1.0, 1.0} * Polynomial{1e4, 1.0} *
                       Polynomial{1e8, 2e3, 1.0};
  const auto r = p.roots();
  REQUIRE(r.size() == 5);
  for (const auto& e : expect) {
    double best = 1e300;
    for (const auto& x : r) best = std::min(best, std::abs(x - e) / std::abs(e));
    CHECK(best < 1e-9);
  }
}

TEST_CASE("interconnections never cancel") {
  const RationalTF integ(Polynomial{1.0}, Polynomial{0.0, 1.0});
  const RationalTF diff(Polynomial{0.0, 1.0}, Polynomial{1.0});
  const RationalTF s = series(integ, diff);
  CHECK(s.num() == Polynomial{0.0, 1.0});
  CHECK(s.den() == Polynomial{0.0, 1.0});

  const RationalTF half = feedback(RationalTF::gain(1.0));
  CHECK(half.at(0.0) == Complex(0.5, 0.0));

  const RationalTF wi(Polynomial{10.0}, Polynomial{0.0, 1.0});
  const RationalTF pi = parallel(RationalTF::gain(1.0), wi);
  CHECK(pi.num() == Polynomial{10.0, 1.0});
  CHECK(pi.den() == Polynomial{0.0, 1.0});
  CHECK(equivalent(reciprocal(pi), RationalTF(Polynomial{0.0, 1.0}, Polynomial{10.0, 1.0})));
}

TEST_CASE("mixing domains is an error") {
  const RationalTF a(Polynomial{1.0}, Polynomial{1.0, 1.0});
  const RationalTF b = RationalTF::discrete(Polynomial{1.0}, Polynomial{-0.5, 1.0}, 0.01);
  CHECK_THROWS_AS(series(a, b), Error);
  const RationalTF c = RationalTF::discrete(Polynomial{1.0}, Polynomial{-0.5, 1.0}, 0.02);
  try {
    series(b, c);
    FAIL("expected DomainMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainMismatch);
  }
}

TEST_CASE("frequency response") {
  const RationalTF integ(Polynomial{1.0}, Polynomial{0.0, 1.0});
  const Complex v = integ.response(kOneRad);
  CHECK(std::abs(v) == doctest::Approx(1.0));
  CHECK(deg(v) == doctest::Approx(-90.0));

  const RationalTF lag(Polynomial{1.0}, Polynomial{1.0, 1.0});
  const Complex w = lag.response(kOneRad);
  CHECK(20.0 * std::log10(std::abs(w)) == doctest::Approx(-3.0103).epsilon(1e-4));
  CHECK(deg(w) == doctest::Approx(-45.0));

  const RationalTF dz = RationalTF::discrete(Polynomial{1.0}, Polynomial{0.0, 1.0}, 0.1);
  const Complex d = dz.response(1.0);
  CHECK(std::abs(d) == doctest::Approx(1.0));
  CHECK(deg(d) == doctest::Approx(-36.0));
  CHECK_THROWS_AS(dz.response(6.0), Error);
}

TEST_CASE("evaluating at a pole is not finite") {
  const RationalTF integ(Polynomial{1.0}, Polynomial{0.0, 1.0});
  CHECK(!std::isfinite(std::abs(integ.response(0.0))));
}

TEST_CASE("FRD interpolation") {
  const FrdData frd({1.0, 10.0, 100.0}, {{1.0, 0.0}, {0.0, -1.0}, {-0.1, 0.0}});
  CHECK(frd.interpolate(10.0) == Complex(0.0, -1.0));
  CHECK(frd.interpolate(1.0) == Complex(1.0, 0.0));
  const Complex mid = frd.interpolate(std::sqrt(10.0));
  CHECK(mid.real() == doctest::Approx(0.5));
  CHECK(mid.imag() == doctest::Approx(-0.5));
  CHECK_THROWS_AS(frd.interpolate(1000.0), Error);
  CHECK_THROWS_AS(FrdData({1.0, 1.0}, {{1.0, 0.0}, {1.0, 0.0}}), Error);
}

TEST_CASE("sensitivity functions") {
  const std::vector<double> f{0.01, kOneRad, 10.0};
  const auto t = sensitivity(RationalTF::gain(1.0), RationalTF::gain(1.0), SensitivityKind::Complementary, f);
  for (const auto& v : t.values) CHECK(v == Complex(0.5, 0.0));

  const RationalTF integ(Polynomial{1.0}, Polynomial{0.0, 1.0});
  const auto s = sensitivity(integ, RationalTF::gain(1.0), SensitivityKind::Sensitivity, f);
  CHECK(std::abs(s.values[1]) == doctest::Approx(1.0 / std::sqrt(2.0)));

  const RationalTF p(Polynomial{3.0, 1.0}, Polynomial{2.0, 5.0, 1.0});
  const RationalTF c(Polynomial{4.0}, Polynomial{0.0, 1.0});
  const auto S = sensitivity(p, c, SensitivityKind::Sensitivity, f);
  const auto T = sensitivity(p, c, SensitivityKind::Complementary, f);
  for (std::size_t k = 0; k < f.size(); ++k) CHECK(std::abs(S.values[k] + T.values[k] - 1.0) < 1e-12);
}

TEST_CASE("error metadata") {
  CHECK(error_name(ErrorCode::FrdPlantUnsupported) == "FrdPlantUnsupported");
  CHECK(error_module(ErrorCode::FrdPlantUnsupported) == "timesim");
  const SchemaError e("/plant/num", "expected array");
  CHECK(e.code() == ErrorCode::SchemaViolation);
  CHECK(e.path() == "/plant/num");
}
