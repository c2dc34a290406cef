#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fixtures.hpp"
#include "loopshape/error.hpp"
#include "loopshape/filters.hpp"
#include "loopshape/timesim.hpp"

using namespace loopshape;
using namespace loopshape::sim;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

// Coefficients of p(z) / z^n, ascending in z^-1.
std::vector<double> in_delay(const Polynomial& p, std::size_t n) {
  std::vector<double> v(n + 1, 0.0);
  const auto& c = p.vec();
  for (std::size_t k = 0; k < c.size(); ++k) v[n - k] = c[k];
  return v;
}

const RationalTF kLag(Polynomial{1.0}, Polynomial{1.0, 1.0});

}  // namespace

TEST_CASE("shape names") {
  for (auto s : {Shape::Step, Shape::Sine, Shape::Sawtooth, Shape::Gaussian}) CHECK(parse_shape(shape_name(s)) == s);
  CHECK_THROWS_AS(parse_shape("chirp"), Error);
}

TEST_CASE("signal roles") {
  CHECK_THROWS_AS(validate(SignalSpec{Shape::Gaussian, 1.0, 1.0, 1.0, 1, 0.0}, SignalRole::Reference), Error);
  CHECK_THROWS_AS(validate(SignalSpec{Shape::Step}, SignalRole::Noise), Error);
  CHECK_NOTHROW(validate(SignalSpec{Shape::Gaussian, 1.0, 1.0, 0.1, 7, 0.0}, SignalRole::Noise));
  CHECK(code_of([] { validate(SignalSpec{Shape::Gaussian}, SignalRole::Disturbance); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("signal generation") {
  const std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
  SignalSpec step{Shape::Step, 2.0, 1.0, 1.0, std::nullopt, 0.5};
  CHECK(generate(step, t) == std::vector<double>{0.0, 0.0, 2.0, 2.0, 2.0});
  const auto sine = generate(SignalSpec{Shape::Sine, 1.0, 1.0}, t);
  CHECK(sine[1] == doctest::Approx(1.0));
  CHECK(std::abs(sine[2]) < 1e-12);

  SignalSpec g{Shape::Gaussian, 1.0, 1.0, 0.5, 42, 0.0};
  CHECK(generate(g, t) == generate(g, t));
  SignalSpec h = g;
  h.seed = 43;
  CHECK(generate(g, t) != generate(h, t));
}

TEST_CASE("bilinear discretization") {
  CHECK(discretize(RationalTF::gain(3.0), 0.01).at(0.3) == Complex(3.0, 0.0));
  const RationalTF d = discretize(kLag, 0.01);
  CHECK(d.is_discrete());
  CHECK(std::abs(d.at(1.0) - 1.0) < 1e-12);

  const RationalTF integ = discretize(RationalTF(Polynomial{1.0}, Polynomial{0.0, 1.0}), 0.01);
  const auto p = integ.den().roots();
  REQUIRE(p.size() == 1);
  CHECK(std::abs(p[0] - 1.0) < 1e-14);

  // scipy.signal.bilinear([1, 2], [1, 3, 5], fs=100)
  const RationalTF g = discretize(RationalTF(Polynomial{2.0, 1.0}, Polynomial{5.0, 3.0, 1.0}), 0.01);
  const double a0 = g.den().leading();
  const auto b = in_delay(g.num() * Polynomial{1.0 / a0}, 2);
  const auto a = in_delay(g.den() * Polynomial{1.0 / a0}, 2);
  const std::vector<double> want_b{0.0049747568033493414, 9.8510035709887945e-05, -0.0048762467676394536};
  const std::vector<double> want_a{1.0, -1.9699544391084842, 0.97044698928703366};
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(b[k] == doctest::Approx(want_b[k]).epsilon(1e-12));
    CHECK(a[k] == doctest::Approx(want_a[k]).epsilon(1e-12));
  }

  CHECK(code_of([] { discretize(RationalTF(Polynomial{0.0, 1.0}, Polynomial{1.0}), 0.01); }) ==
        ErrorCode::ImproperTransferFunction);
  CHECK(code_of([] { discretize(RationalTF(Polynomial{1.0}, Polynomial{-200.0, 1.0}), 0.01); }) ==
        ErrorCode::BilinearSingularity);
}

TEST_CASE("difference equation") {
  DifferenceEquation de(RationalTF::discrete(Polynomial{1.0}, Polynomial{-0.5, 1.0}, 1.0));
  CHECK(de.step(1.0) == 0.0);
  CHECK(de.step(0.0) == 1.0);
  CHECK(de.step(0.0) == 0.5);
  de.reset();
  CHECK(de.step(0.0) == 0.0);
}

TEST_CASE("section cascade") {
  const RationalTF c = filters::assemble_controller(fixtures::ioc()).tf;
  const RationalTF t = feedback(series(c, fixtures::stage_plant()));
  const double T = 1e-5;
  SectionCascade sc(t, T);
  CHECK(sc.size() >= 3);
  // Integral action: the step response settles at T(0) = 1.
  double y = 0.0;
  for (int k = 0; k < 200000; ++k) y = sc.step(1.0);
  CHECK(y == doctest::Approx(1.0).epsilon(1e-9));
  sc.reset();
  CHECK(sc.step(0.0) == 0.0);

  const RationalTF g(Polynomial{2.0, 1.0}, Polynomial{5.0, 3.0, 1.0});
  CHECK(equivalent(SectionCascade(g, 0.01).combined(), discretize(g, 0.01), 1e-12));
  SectionCascade a(kLag, 0.01);
  DifferenceEquation b(discretize(kLag, 0.01));
  for (int k = 0; k < 50; ++k) CHECK(std::abs(a.step(1.0) - b.step(1.0)) < 1e-12);
}

TEST_CASE("unity loop step") {
  // P = 1/s, C = 1: y = 1 - exp(-t).
  SimConfig cfg;
  cfg.duration_s = 1.0;
  cfg.sample_period_s = 1e-3;
  const auto r = simulate(RationalTF(Polynomial{1.0}, Polynomial{0.0, 1.0}), RationalTF::gain(1.0), std::nullopt, cfg);
  REQUIRE(r.output.size() == 1001);
  CHECK(r.time_s.back() == doctest::Approx(1.0));
  CHECK(r.output.back() == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-3));
  CHECK(r.control_effort.back() == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));
  CHECK(!r.diverged);
  CHECK(!r.output_no_prefilter);
}

TEST_CASE("disturbance and noise paths") {
  SimConfig cfg;
  cfg.duration_s = 20.0;
  cfg.sample_period_s = 1e-2;
  cfg.reference = SignalSpec{Shape::Step, 0.0};
  cfg.disturbance = SignalSpec{Shape::Step, 1.0};
  // P = 1/(s+1), C = 10/s: integral action rejects a step disturbance.
  const RationalTF c(Polynomial{10.0}, Polynomial{0.0, 1.0});
  const auto r = simulate(kLag, c, std::nullopt, cfg);
  CHECK(std::abs(r.output.back()) < 1e-3);
  CHECK(r.control_effort.back() == doctest::Approx(-1.0).epsilon(1e-3));

  cfg.disturbance.reset();
  cfg.noise = SignalSpec{Shape::Gaussian, 1.0, 1.0, 0.1, 9, 0.0};
  const auto n1 = simulate(kLag, c, std::nullopt, cfg);
  const auto n2 = simulate(kLag, c, std::nullopt, cfg);
  CHECK(n1 == n2);
  CHECK(n1.noise_seed == 9u);
}

TEST_CASE("prefilter") {
  SimConfig cfg;
  cfg.duration_s = 5.0;
  cfg.sample_period_s = 1e-3;
  cfg.use_prefilter = true;
  const RationalTF c(Polynomial{10.0}, Polynomial{0.0, 1.0});
  const auto r = simulate(kLag, c, RationalTF(Polynomial{1.0}, Polynomial{1.0, 0.5}), cfg);
  REQUIRE(r.output_no_prefilter);
  CHECK(r.output_no_prefilter->size() == r.output.size());
  double over_f = 0.0, over_raw = 0.0;
  for (std::size_t k = 0; k < r.output.size(); ++k) {
    over_f = std::max(over_f, r.output[k]);
    over_raw = std::max(over_raw, (*r.output_no_prefilter)[k]);
  }
  CHECK(over_f < over_raw);
  CHECK(to_csv(r).rfind("t,r,y,u,y_nopf\n", 0) == 0);
}

TEST_CASE("divergence truncates the run") {
  SimConfig cfg;
  cfg.duration_s = 100.0;
  cfg.sample_period_s = 1e-2;
  const RationalTF unstable(Polynomial{1.0}, Polynomial{-1.0, 1.0});
  const auto r = simulate(unstable, RationalTF::gain(0.5), std::nullopt, cfg);
  CHECK(r.diverged);
  REQUIRE(r.truncation_index);
  CHECK(r.output.size() == *r.truncation_index);
  CHECK(r.time_s.size() == r.output.size());
}

TEST_CASE("simulation errors") {
  SimConfig cfg;
  const FrdData frd({1.0, 10.0}, {{1.0, 0.0}, {0.5, 0.0}});
  CHECK(code_of([&] { simulate(frd, RationalTF::gain(1.0), std::nullopt, cfg); }) ==
        ErrorCode::FrdPlantUnsupported);
  CHECK(code_of([&] { simulate(kLag, RationalTF(Polynomial{0.0, 1.0}, Polynomial{1.0}), std::nullopt, cfg); }) ==
        ErrorCode::ImproperTransferFunction);
  cfg.sample_period_s = 1e-8;
  cfg.duration_s = 1.0;
  CHECK(code_of([&] { simulate(kLag, RationalTF::gain(1.0), std::nullopt, cfg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("csv") {
  SimConfig cfg;
  cfg.duration_s = 0.002;
  cfg.sample_period_s = 1e-3;
  const auto r = simulate(kLag, RationalTF::gain(1.0), std::nullopt, cfg);
  const std::string csv = to_csv(r);
  CHECK(csv.rfind("t,r,y,u\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
