#include "loopshape/filters.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "loopshape/error.hpp"

namespace loopshape::filters {

namespace {

constexpr int kDefaultPairs = 5;
constexpr int kDefaultCarlsonIterations = 2;
constexpr int kMaxLowPassOrder = 8;
constexpr double kMaxFracOrder = 2.0;

struct KindInfo {
  FilterKind kind;
  std::string_view name;
  std::vector<std::string_view> required;
  std::vector<std::string_view> optional;
};

const std::vector<KindInfo>& kind_table() {
  static const std::vector<KindInfo> table = {
      {FilterKind::Gain, "gain", {"Kp"}, {}},
      {FilterKind::PI, "pi", {"f_i"}, {}},
      {FilterKind::PD, "pd", {"f_d", "f_t"}, {}},
      {FilterKind::LeadLag, "lead_lag", {"f_z", "f_p"}, {}},
      {FilterKind::Notch, "notch", {"f_notch", "damping_num", "damping_den"}, {}},
      {FilterKind::LowPass, "low_pass", {"f_cutoff", "order"}, {}},
      {FilterKind::FracPI, "frac_pi", {"f_i", "lambda"}, {"n_pairs", "iterations"}},
      {FilterKind::FracPD, "frac_pd", {"f_d", "f_t", "alpha"}, {"n_pairs", "iterations"}},
      {FilterKind::FracLeadLag, "frac_lead_lag", {"f_z", "f_p", "alpha"}, {"n_pairs", "iterations"}},
      {FilterKind::FracOperator, "frac_operator", {"nu"},
       {"n_pairs", "iterations", "sample_period_s"}},
  };
  return table;
}

const KindInfo& info(FilterKind kind) {
  for (const auto& k : kind_table()) {
    if (k.kind == kind) return k;
  }
  return kind_table().front();
}

[[noreturn]] void invalid(const FilterSpec& spec, const std::string& detail) {
  throw Error(ErrorCode::InvalidSpec, std::string(kind_name(spec.kind)) + ": " + detail);
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

void require_positive(const FilterSpec& spec, std::string_view key) {
  const double v = spec.get(std::string(key));
  if (!(v > 0.0)) invalid(spec, std::string(key) + " must be positive");
}

void require_int_range(const FilterSpec& spec, const std::string& key, int lo, int hi) {
  if (!spec.params.count(key)) return;
  const double v = spec.params.at(key);
  if (!is_integer(v) || v < lo || v > hi) {
    invalid(spec, key + " must be an integer in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
}

RationalTF lead_lag_tf(double zero_w, double pole_w) {
  return RationalTF({1.0, 1.0 / zero_w}, {1.0, 1.0 / pole_w});
}

RationalTF pi_tf(double wi) { return RationalTF({wi, 1.0}, {0.0, 1.0}); }

RationalTF power(const RationalTF& g, int n) {
  RationalTF out = RationalTF::gain(1.0);
  for (int i = 0; i < n; ++i) out = series(out, g);
  return out;
}

// a in (0, 2] split into an exact integer power and a remainder in (0, 1].
std::pair<int, double> split_order(double a) {
  if (a >= 1.0) {
    const int n = static_cast<int>(std::trunc(a));
    return {n, a - n};
  }
  return {0, a};
}

// Recursive placement between the two corners of (1+s/zero_w)/(1+s/pole_w),
// raised to r, with unit DC gain.
RationalTF crone_shape(double zero_w, double pole_w, double r, int n_pairs) {
  if (zero_w == pole_w) return RationalTF::gain(1.0);
  if (zero_w < pole_w) return frac::pairs_to_tf(frac::crone_placement(r, zero_w, pole_w, n_pairs));
  return frac::pairs_to_tf(frac::crone_placement(-r, pole_w, zero_w, n_pairs));
}

struct FracShape {
  RationalTF exact;       // integer shape g(s)
  double zero_w = 0.0;    // corners of the band-limited form used by the recursion
  double pole_w = 0.0;
  double gain = 1.0;      // band-limited form is gain * (1+s/zero_w)/(1+s/pole_w)
  double band_lo_w = 0.0; // sample band for interpolation
  double band_hi_w = 0.0;
};

RationalTF realize_fraction(const FilterSpec& spec, const FracShape& shape, double order) {
  if (frac::is_discrete_method(spec.approx_method)) {
    invalid(spec, "discrete approximation methods apply only to frac_operator");
  }
  const auto [n, r] = split_order(order);
  const RationalTF integer_part = power(shape.exact, n);
  if (r == 0.0) return integer_part;
  const int n_pairs = static_cast<int>(spec.get_or("n_pairs", kDefaultPairs));
  RationalTF fraction;
  switch (spec.approx_method) {
    case frac::Method::Crone:
      fraction = crone_shape(shape.zero_w, shape.pole_w, r, n_pairs)
                     .scaled(std::pow(shape.gain, r));
      break;
    case frac::Method::Matsuda: {
      const auto pts = frac::log_points(shape.band_lo_w, shape.band_hi_w,
                                        2 * static_cast<std::size_t>(n_pairs) + 1);
      std::vector<double> vals(pts.size());
      for (std::size_t k = 0; k < pts.size(); ++k) {
        vals[k] = std::pow(shape.exact.at({pts[k], 0.0}).real(), r);
      }
      fraction = frac::matsuda_fit(pts, vals);
      break;
    }
    case frac::Method::Carlson: {
      const double q = 1.0 / r;
      if (std::abs(q - std::round(q)) > 1e-9 * q) {
        throw Error(ErrorCode::UnsupportedOrder,
                    "Carlson needs 1/r to be an integer for fractional remainder r = " +
                        std::to_string(r));
      }
      fraction = frac::carlson_root(shape.exact, static_cast<int>(std::round(q)),
                                    static_cast<int>(spec.get_or("iterations",
                                                                 kDefaultCarlsonIterations)));
      break;
    }
    default:
      break;
  }
  return series(integer_part, fraction);
}

RationalTF realize_operator(const FilterSpec& spec) {
  const double nu = spec.get("nu");
  const int n_pairs = static_cast<int>(spec.get_or("n_pairs", kDefaultPairs));
  if (frac::is_discrete_method(spec.approx_method)) {
    if (!spec.params.count("sample_period_s")) {
      invalid(spec, "discrete methods need sample_period_s");
    }
    return frac::cfe_discretize(nu, {spec.get("sample_period_s"), n_pairs},
                                frac::to_cfe(spec.approx_method));
  }
  const std::array<double, 2> band = spec.approx_band_hz.value_or(std::array{0.01, 1000.0});
  const frac::CroneConfig cfg{hz_to_rad(band[0]), hz_to_rad(band[1]), n_pairs};
  switch (spec.approx_method) {
    case frac::Method::Crone: return frac::crone(nu, cfg);
    case frac::Method::Matsuda: return frac::matsuda(nu, cfg);
    case frac::Method::Carlson:
      return frac::carlson(nu, static_cast<int>(spec.get_or("iterations",
                                                            kDefaultCarlsonIterations)));
    default: break;
  }
  return RationalTF::gain(1.0);
}

}  // namespace

std::string_view kind_name(FilterKind kind) { return info(kind).name; }

FilterKind parse_kind(std::string_view name) {
  for (const auto& k : kind_table()) {
    if (k.name == name) return k.kind;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown filter kind '" + std::string(name) + "'");
}

bool is_fractional(FilterKind kind) {
  return kind == FilterKind::FracPI || kind == FilterKind::FracPD ||
         kind == FilterKind::FracLeadLag || kind == FilterKind::FracOperator;
}

double FilterSpec::get(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) {
    throw Error(ErrorCode::InvalidSpec,
                std::string(kind_name(kind)) + ": missing parameter " + key);
  }
  return it->second;
}

double FilterSpec::get_or(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::vector<std::string_view> required_params(FilterKind kind) { return info(kind).required; }
std::vector<std::string_view> optional_params(FilterKind kind) { return info(kind).optional; }

void validate(const FilterSpec& spec) {
  const KindInfo& k = info(spec.kind);
  for (const auto& [key, value] : spec.params) {
    const bool known = std::find(k.required.begin(), k.required.end(), key) != k.required.end() ||
                       std::find(k.optional.begin(), k.optional.end(), key) != k.optional.end();
    if (!known) invalid(spec, "unknown parameter " + key);
    if (!std::isfinite(value)) invalid(spec, key + " must be finite");
  }
  for (auto key : k.required) {
    if (!spec.params.count(std::string(key))) {
      invalid(spec, "missing parameter " + std::string(key));
    }
  }
  for (auto key : {"f_i", "f_d", "f_t", "f_z", "f_p", "f_notch", "f_cutoff", "damping_den",
                   "sample_period_s"}) {
    if (spec.params.count(key)) require_positive(spec, key);
  }
  if (spec.params.count("damping_num") && spec.get("damping_num") < 0.0) {
    invalid(spec, "damping_num must be non-negative");
  }
  require_int_range(spec, "order", 1, kMaxLowPassOrder);
  require_int_range(spec, "n_pairs", 1, 50);
  require_int_range(spec, "iterations", 1, 4);
  for (auto key : {"alpha", "lambda"}) {
    if (!spec.params.count(key)) continue;
    const double v = spec.get(key);
    if (!(v > 0.0 && v <= kMaxFracOrder)) invalid(spec, std::string(key) + " must lie in (0, 2]");
  }
  if ((spec.kind == FilterKind::PD || spec.kind == FilterKind::FracPD) &&
      !(spec.get("f_d") < spec.get("f_t"))) {
    invalid(spec, "f_d must be below f_t");
  }
  if (spec.approx_band_hz) {
    const auto& b = *spec.approx_band_hz;
    if (!(b[0] > 0.0) || !(b[1] > b[0]) || !std::isfinite(b[1])) {
      invalid(spec, "approx_band_hz must satisfy 0 < low < high");
    }
  }
  if (spec.kind == FilterKind::FracOperator && spec.params.count("n_pairs") &&
      frac::is_discrete_method(spec.approx_method)) {
    require_int_range(spec, "n_pairs", 1, 20);
  }
}

RationalTF realize_filter(const FilterSpec& spec) {
  validate(spec);
  const auto band = spec.approx_band_hz;
  switch (spec.kind) {
    case FilterKind::Gain: return RationalTF::gain(spec.get("Kp"));
    case FilterKind::PI: return pi_tf(hz_to_rad(spec.get("f_i")));
    case FilterKind::PD:
      return lead_lag_tf(hz_to_rad(spec.get("f_d")), hz_to_rad(spec.get("f_t")));
    case FilterKind::LeadLag:
      return lead_lag_tf(hz_to_rad(spec.get("f_z")), hz_to_rad(spec.get("f_p")));
    case FilterKind::Notch: {
      const double wn = hz_to_rad(spec.get("f_notch"));
      const double zn = spec.get("damping_num");
      const double zd = spec.get("damping_den");
      return RationalTF({wn * wn, 2.0 * zn * wn, 1.0}, {wn * wn, 2.0 * zd * wn, 1.0});
    }
    case FilterKind::LowPass: {
      const RationalTF pole({1.0}, {1.0, 1.0 / hz_to_rad(spec.get("f_cutoff"))});
      return power(pole, static_cast<int>(spec.get("order")));
    }
    case FilterKind::FracPI: {
      const double f_i = spec.get("f_i");
      const double f_lo = band ? (*band)[0] : f_i / 1000.0;
      const double f_hi = band ? (*band)[1] : f_i * 10.0;
      if (!(f_lo < f_i)) invalid(spec, "approximation band must start below f_i");
      const double wi = hz_to_rad(f_i);
      const double wlo = hz_to_rad(f_lo);
      FracShape shape{pi_tf(wi), wi, wlo, wi / wlo, wlo, hz_to_rad(f_hi)};
      return realize_fraction(spec, shape, spec.get("lambda"));
    }
    case FilterKind::FracPD: {
      const double f_d = spec.get("f_d");
      const double f_t = spec.get("f_t");
      const double wd = hz_to_rad(f_d);
      const double wt = hz_to_rad(f_t);
      FracShape shape{lead_lag_tf(wd, wt), wd, wt, 1.0,
                      hz_to_rad(band ? (*band)[0] : f_d / 10.0),
                      hz_to_rad(band ? (*band)[1] : f_t * 10.0)};
      return realize_fraction(spec, shape, spec.get("alpha"));
    }
    case FilterKind::FracLeadLag: {
      const double f_z = spec.get("f_z");
      const double f_p = spec.get("f_p");
      const double lo = std::min(f_z, f_p);
      const double hi = std::max(f_z, f_p);
      FracShape shape{lead_lag_tf(hz_to_rad(f_z), hz_to_rad(f_p)), hz_to_rad(f_z),
                      hz_to_rad(f_p), 1.0, hz_to_rad(band ? (*band)[0] : lo / 10.0),
                      hz_to_rad(band ? (*band)[1] : hi * 10.0)};
      return realize_fraction(spec, shape, spec.get("alpha"));
    }
    case FilterKind::FracOperator: return realize_operator(spec);
  }
  return RationalTF::gain(1.0);
}

AssembledController assemble_controller(const ControllerDef& def) {
  if (def.filters.size() > kMaxFilters) {
    throw Error(ErrorCode::InvalidSpec, "controller '" + def.name + "' has more than 32 filters");
  }
  std::vector<RationalTF> parts;
  parts.reserve(def.filters.size());
  for (const auto& f : def.filters) parts.push_back(realize_filter(f));

  Domain domain = Domain::ContinuousS;
  std::optional<double> period;
  for (const auto& p : parts) {
    if (!p.is_constant()) {
      domain = p.domain();
      period = p.sample_period();
      break;
    }
  }
  RationalTF acc = RationalTF::gain(1.0).constant_in(domain, period);
  for (const auto& p : parts) {
    acc = series(acc, p.is_constant() ? p.constant_in(domain, period) : p);
  }
  return {acc, acc.order()};
}

}  // namespace loopshape::filters
