#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "loopshape/error.hpp"
#include "loopshape/filters.hpp"

using namespace loopshape;
using namespace loopshape::filters;
using fixtures::spec;

namespace {

double db(Complex z) { return 20.0 * std::log10(std::abs(z)); }
double deg(Complex z) { return std::arg(z) * 180.0 / M_PI; }

bool invalid(const FilterSpec& f) {
  try {
    realize_filter(f);
  } catch (const Error& e) {
    return e.code() == ErrorCode::InvalidSpec;
  }
  return false;
}

// Worst dB and degree gap between two filters over [lo, hi] Hz.
std::pair<double, double> gap(const RationalTF& a, const RationalTF& b, double lo, double hi) {
  double mag = 0.0, ph = 0.0;
  for (int i = 0; i <= 300; ++i) {
    const double f = lo * std::pow(hi / lo, i / 300.0);
    const Complex va = a.response(f);
    const Complex vb = b.response(f);
    mag = std::max(mag, std::abs(db(va) - db(vb)));
    ph = std::max(ph, std::abs(deg(vb / va)));
  }
  return {mag, ph};
}

}  // namespace

TEST_CASE("kind names round trip") {
  for (auto k : {FilterKind::Gain, FilterKind::PI, FilterKind::PD, FilterKind::LeadLag, FilterKind::Notch,
                 FilterKind::LowPass, FilterKind::FracPI, FilterKind::FracPD, FilterKind::FracLeadLag,
                 FilterKind::FracOperator}) {
    CHECK(parse_kind(kind_name(k)) == k);
  }
  CHECK(kind_name(FilterKind::FracLeadLag) == "frac_lead_lag");
  CHECK(is_fractional(FilterKind::FracPD));
  CHECK(!is_fractional(FilterKind::Notch));
  CHECK_THROWS_AS(parse_kind("frac_notch"), Error);
}

TEST_CASE("integer kinds") {
  CHECK(realize_filter(spec(FilterKind::Gain, {{"Kp", 0.163}})) == RationalTF::gain(0.163));

  const RationalTF pi = realize_filter(spec(FilterKind::PI, {{"f_i", 10.0}}));
  CHECK(std::abs(db(pi.response(1e5))) < 1e-3);
  CHECK(db(pi.response(0.01)) - db(pi.response(0.1)) == doctest::Approx(20.0).epsilon(1e-4));

  const RationalTF pd = realize_filter(spec(FilterKind::PD, {{"f_d", 33.33}, {"f_t", 300.0}}));
  CHECK(pd.response(0.0) == Complex(1.0, 0.0));
  CHECK(std::abs(pd.response(1e6)) == doctest::Approx(300.0 / 33.33).epsilon(1e-4));

  const RationalTF n = realize_filter(
      spec(FilterKind::Notch, {{"f_notch", 50.0}, {"damping_num", 0.01}, {"damping_den", 0.5}}));
  CHECK(std::abs(n.response(50.0)) == doctest::Approx(0.02));
  CHECK(std::abs(n.response(0.0)) == doctest::Approx(1.0));

  const RationalTF lp = realize_filter(spec(FilterKind::LowPass, {{"f_cutoff", 100.0}, {"order", 3.0}}));
  CHECK(lp.pole_count() == 3);
  CHECK(db(lp.response(100.0)) == doctest::Approx(-3.0 * 3.0103).epsilon(1e-4));
}

TEST_CASE("spec validation") {
  CHECK(invalid(spec(FilterKind::PI, {})));
  CHECK(invalid(spec(FilterKind::PI, {{"f_i", -1.0}})));
  CHECK(invalid(spec(FilterKind::PI, {{"f_i", 10.0}, {"Kp", 1.0}})));
  CHECK(invalid(spec(FilterKind::PD, {{"f_d", 300.0}, {"f_t", 33.0}})));
  CHECK(invalid(spec(FilterKind::LowPass, {{"f_cutoff", 100.0}, {"order", 9.0}})));
  CHECK(invalid(spec(FilterKind::LowPass, {{"f_cutoff", 100.0}, {"order", 1.5}})));
  CHECK(invalid(spec(FilterKind::FracPD, {{"f_d", 10.0}, {"f_t", 100.0}, {"alpha", 2.5}})));
  CHECK(invalid(spec(FilterKind::FracPD, {{"f_d", 10.0}, {"f_t", 100.0}, {"alpha", 0.5}, {"n_pairs", 0.0}})));
  auto discrete = spec(FilterKind::FracPD, {{"f_d", 10.0}, {"f_t", 100.0}, {"alpha", 0.5}});
  discrete.approx_method = frac::Method::Tustin;
  CHECK(invalid(discrete));
  auto band = spec(FilterKind::FracPD, {{"f_d", 10.0}, {"f_t", 100.0}, {"alpha", 0.5}});
  band.approx_band_hz = std::array<double, 2>{100.0, 10.0};
  CHECK(invalid(band));
  CHECK(std::find(required_params(FilterKind::FracPI).begin(), required_params(FilterKind::FracPI).end(),
                  "lambda") != required_params(FilterKind::FracPI).end());
}

TEST_CASE("fractional kinds degenerate to integer kinds at order 1") {
  const auto pd = realize_filter(spec(FilterKind::PD, {{"f_d", 33.33}, {"f_t", 300.0}}));
  for (auto m : {frac::Method::Crone, frac::Method::Matsuda}) {
    auto f = spec(FilterKind::FracPD, {{"f_d", 33.33}, {"f_t", 300.0}, {"alpha", 1.0}});
    f.approx_method = m;
    const auto [mag, ph] = gap(pd, realize_filter(f), 3.333, 3000.0);
    CHECK(mag <= 0.5);
    CHECK(ph <= 3.0);
  }

  const auto ll = realize_filter(spec(FilterKind::LeadLag, {{"f_z", 1000.0}, {"f_p", 100.0}}));
  const auto fll = realize_filter(spec(FilterKind::FracLeadLag, {{"f_z", 1000.0}, {"f_p", 100.0}, {"alpha", 1.0}}));
  const auto [mag2, ph2] = gap(ll, fll, 10.0, 10000.0);
  CHECK(mag2 <= 0.5);
  CHECK(ph2 <= 3.0);

  const auto pi = realize_filter(spec(FilterKind::PI, {{"f_i", 10.0}}));
  const auto fpi = realize_filter(spec(FilterKind::FracPI, {{"f_i", 10.0}, {"lambda", 1.0}}));
  const auto [mag3, ph3] = gap(pi, fpi, 0.1, 100.0);
  CHECK(mag3 <= 0.5);
  CHECK(ph3 <= 3.0);

  // A fractional remainder is held flat below f_lo = f_i/1000.
  const auto half = realize_filter(spec(FilterKind::FracPI, {{"f_i", 10.0}, {"lambda", 0.5}}));
  CHECK(std::isfinite(std::abs(half.response(0.0))));
  CHECK(std::abs(db(half.response(1e-4)) - db(half.response(1e-5))) < 0.1);
}

TEST_CASE("fractional slopes") {
  const auto fpd = realize_filter(
      spec(FilterKind::FracPD, {{"f_d", 1.0}, {"f_t", 10000.0}, {"alpha", 0.5}, {"n_pairs", 8.0}}));
  const double slope = db(fpd.response(1000.0)) - db(fpd.response(100.0));
  CHECK(slope == doctest::Approx(10.0).epsilon(0.05));
  CHECK(deg(fpd.response(316.0)) == doctest::Approx(45.0).epsilon(0.05));

  const auto fpi = realize_filter(spec(FilterKind::FracPI, {{"f_i", 100.0}, {"lambda", 0.5}, {"n_pairs", 8.0}}));
  CHECK(db(fpi.response(1.0)) - db(fpi.response(10.0)) == doctest::Approx(10.0).epsilon(0.05));

  auto m = spec(FilterKind::FracPD, {{"f_d", 1.0}, {"f_t", 10000.0}, {"alpha", 0.5}});
  m.approx_method = frac::Method::Matsuda;
  CHECK(deg(realize_filter(m).response(100.0)) == doctest::Approx(45.0).epsilon(0.1));

  // Carlson has no band; it is accurate where the shape stays near unity.
  auto c = spec(FilterKind::FracPD, {{"f_d", 30.0}, {"f_t", 300.0}, {"alpha", 0.5}});
  c.approx_method = frac::Method::Carlson;
  const auto exact = realize_filter(spec(FilterKind::PD, {{"f_d", 30.0}, {"f_t", 300.0}}));
  const Complex want = std::pow(exact.response(95.0), 0.5);
  CHECK(std::abs(deg(realize_filter(c).response(95.0)) - deg(want)) < 1.0);
}

TEST_CASE("integer split for orders above one") {
  const auto f = realize_filter(fixtures::foc().filters[3]);
  CHECK(f.pole_count() == 4);
  CHECK(f.is_proper());
  const double lag = db(f.response(1e6)) - db(f.response(1.0));
  CHECK(lag == doctest::Approx(-36.0).epsilon(0.05));
  const auto pd = realize_filter(fixtures::foc().filters[2]);
  CHECK(pd.pole_count() == 4);
}

TEST_CASE("fractional operator") {
  const auto c = realize_filter(spec(FilterKind::FracOperator, {{"nu", 0.5}}));
  CHECK(!c.is_discrete());
  auto d = spec(FilterKind::FracOperator, {{"nu", 0.5}, {"sample_period_s", 1e-4}, {"n_pairs", 3.0}});
  d.approx_method = frac::Method::Tobfd;
  const auto tf = realize_filter(d);
  CHECK(tf.is_discrete());
  CHECK(tf.pole_count() == 3);
  d.params.erase("sample_period_s");
  CHECK(invalid(d));
}

TEST_CASE("assembly") {
  const auto empty = assemble_controller({"c", {}, std::nullopt});
  CHECK(empty.tf == RationalTF::gain(1.0));
  CHECK(empty.order == 0);

  const auto ioc = assemble_controller(fixtures::ioc());
  CHECK(ioc.tf.den().degree() == 3);
  CHECK(ioc.order == 3);

  const auto foc = assemble_controller(fixtures::foc());
  for (double c : foc.tf.num().vec()) CHECK(std::isfinite(c));
  for (double c : foc.tf.den().vec()) CHECK(std::isfinite(c));
  CHECK(foc.order > ioc.order);

  // Series product is order independent in response.
  auto perm = fixtures::foc();
  std::reverse(perm.filters.begin(), perm.filters.end());
  const auto rev = assemble_controller(perm);
  for (double f : {0.1, 10.0, 300.0, 5000.0}) {
    CHECK(std::abs(rev.tf.response(f) / foc.tf.response(f) - 1.0) < 1e-10);
  }

  // Adding filters never lowers the order.
  ControllerDef grow{"g", {}, std::nullopt};
  std::size_t last = 0;
  for (const auto& f : fixtures::foc().filters) {
    grow.filters.push_back(f);
    const auto a = assemble_controller(grow);
    CHECK(a.order >= last);
    last = a.order;
  }

  ControllerDef big{"big", std::vector<FilterSpec>(33, spec(FilterKind::Gain, {{"Kp", 1.0}})), std::nullopt};
  CHECK_THROWS_AS(assemble_controller(big), Error);
}

TEST_CASE("constants adopt the discrete domain") {
  auto d = spec(FilterKind::FracOperator, {{"nu", 0.5}, {"sample_period_s", 1e-3}});
  d.approx_method = frac::Method::Tustin;
  const auto c = assemble_controller({"d", {spec(FilterKind::Gain, {{"Kp", 2.0}}), d}, std::nullopt});
  CHECK(c.tf.is_discrete());
  CHECK_THROWS_AS(assemble_controller({"mix", {d, spec(FilterKind::PI, {{"f_i", 1.0}})}, std::nullopt}), Error);
}
