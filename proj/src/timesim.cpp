#include "loopshape/timesim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "loopshape/analysis.hpp"
#include "loopshape/error.hpp"

namespace loopshape::sim {

namespace {

constexpr double kSingularRel = 1e-12;

void require_causal(const RationalTF& tf, const char* what) {
  if (!tf.is_proper()) {
    throw Error(ErrorCode::ImproperTransferFunction,
                std::string(what) + " is improper (numerator degree " +
                    std::to_string(tf.num().degree()) + " > denominator degree " +
                    std::to_string(tf.den().degree()) + ")");
  }
}

// Binomial expansion of (z-1)^k (z+1)^(n-k), ascending in z.
Polynomial bilinear_basis(std::size_t k, std::size_t n) {
  return Polynomial{-1.0, 1.0}.pow(static_cast<unsigned>(k)) *
         Polynomial{1.0, 1.0}.pow(static_cast<unsigned>(n - k));
}

void append_row(std::string& out, std::initializer_list<double> values) {
  char buf[32];
  bool first = true;
  for (double v : values) {
    if (!first) out.push_back(',');
    first = false;
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  }
  out.push_back('\n');
}

}  // namespace

std::string_view shape_name(Shape s) {
  switch (s) {
    case Shape::Step: return "step";
    case Shape::Sine: return "sine";
    case Shape::Sawtooth: return "sawtooth";
    case Shape::Gaussian: return "gaussian";
  }
  return "step";
}

Shape parse_shape(std::string_view name) {
  for (auto s : {Shape::Step, Shape::Sine, Shape::Sawtooth, Shape::Gaussian}) {
    if (shape_name(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown signal shape '" + std::string(name) + "'");
}

void validate(const SignalSpec& spec, SignalRole role) {
  const bool allowed = [&] {
    switch (role) {
      case SignalRole::Reference: return spec.shape != Shape::Gaussian;
      case SignalRole::Disturbance: return spec.shape != Shape::Sawtooth;
      case SignalRole::Noise: return spec.shape == Shape::Sine || spec.shape == Shape::Gaussian;
    }
    return false;
  }();
  static constexpr const char* kRole[] = {"reference", "disturbance", "noise"};
  const std::string role_name = kRole[static_cast<int>(role)];
  if (!allowed) {
    throw Error(ErrorCode::InvalidArgument, std::string(shape_name(spec.shape)) +
                                                " is not a valid " + role_name + " signal");
  }
  if (!std::isfinite(spec.amplitude) || !(spec.start_time_s >= 0.0) ||
      !std::isfinite(spec.start_time_s)) {
    throw Error(ErrorCode::InvalidArgument, role_name + ": amplitude and start time must be finite");
  }
  if ((spec.shape == Shape::Sine || spec.shape == Shape::Sawtooth) &&
      !(spec.frequency_hz > 0.0 && std::isfinite(spec.frequency_hz))) {
    throw Error(ErrorCode::InvalidArgument, role_name + ": frequency_hz must be positive");
  }
  if (spec.shape == Shape::Gaussian) {
    if (!(spec.std_dev > 0.0 && std::isfinite(spec.std_dev))) {
      throw Error(ErrorCode::InvalidArgument, role_name + ": std_dev must be positive");
    }
    if (!spec.seed) throw Error(ErrorCode::InvalidArgument, role_name + ": gaussian needs a seed");
  }
}

std::vector<double> generate(const SignalSpec& spec, const std::vector<double>& time_s) {
  std::vector<double> out(time_s.size(), 0.0);
  std::mt19937_64 rng(spec.seed.value_or(0));
  std::normal_distribution<double> normal(0.0, spec.std_dev);
  for (std::size_t k = 0; k < time_s.size(); ++k) {
    const double t = time_s[k] - spec.start_time_s;
    if (t < 0.0) continue;
    switch (spec.shape) {
      case Shape::Step: out[k] = spec.amplitude; break;
      case Shape::Sine:
        out[k] = spec.amplitude * std::sin(2.0 * std::numbers::pi * spec.frequency_hz * t);
        break;
      case Shape::Sawtooth: {
        const double phase = t * spec.frequency_hz;
        out[k] = spec.amplitude * (phase - std::floor(phase));
        break;
      }
      case Shape::Gaussian: out[k] = normal(rng); break;
    }
  }
  return out;
}

RationalTF discretize(const RationalTF& tf, double T) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw Error(ErrorCode::InvalidArgument, "sample period must be positive");
  }
  if (tf.is_discrete()) {
    if (*tf.sample_period() != T) {
      throw Error(ErrorCode::DomainMismatch, "discrete system has a different sample period");
    }
    require_causal(tf, "transfer function");
    return tf;
  }
  require_causal(tf, "transfer function");
  const std::size_t n = tf.den().degree();
  const double c = 2.0 / T;
  // Dividing through by c^n keeps every coefficient in range.
  Polynomial num{0.0};
  Polynomial den{0.0};
  double den_scale = 0.0;
  double den_lead = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double w = std::pow(c, static_cast<double>(k) - static_cast<double>(n));
    const Polynomial basis = bilinear_basis(k, n);
    if (tf.num()[k] != 0.0) num = num + basis * (tf.num()[k] * w);
    if (tf.den()[k] != 0.0) den = den + basis * (tf.den()[k] * w);
    den_scale += std::abs(tf.den()[k] * w);
    den_lead += tf.den()[k] * w;
  }
  if (std::abs(den_lead) <= kSingularRel * den_scale) {
    throw Error(ErrorCode::BilinearSingularity,
                "pole at s = 2/T = " + std::to_string(c) + " maps to z = infinity");
  }
  // Rebuild den with its exact leading term so the degree is kept.
  std::vector<double> dc = den.vec();
  dc.resize(n + 1, 0.0);
  dc[n] = den_lead;
  std::vector<double> nc = num.vec();
  nc.resize(n + 1, 0.0);
  const double norm = 1.0 / den_lead;
  for (double& v : dc) v *= norm;
  for (double& v : nc) v *= norm;
  return RationalTF::discrete(Polynomial(std::move(nc)), Polynomial(std::move(dc)), T);
}

DifferenceEquation::DifferenceEquation(const RationalTF& tf) {
  if (!tf.is_discrete()) {
    throw Error(ErrorCode::DomainMismatch, "difference equations need a discrete system");
  }
  require_causal(tf, "transfer function");
  const std::size_t n = tf.den().degree();
  b_.resize(n + 1);
  a_.resize(n + 1);
  const double a0 = tf.den()[n];
  for (std::size_t i = 0; i <= n; ++i) {
    b_[i] = tf.num()[n - i] / a0;
    a_[i] = tf.den()[n - i] / a0;
  }
  state_.assign(n + 1, 0.0);
}

double DifferenceEquation::step(double x) {
  const std::size_t n = a_.size() - 1;
  const double y = b_[0] * x + state_[0];
  for (std::size_t i = 0; i + 1 < n + 1; ++i) {
    state_[i] = b_[i + 1] * x - a_[i + 1] * y + (i + 1 < n ? state_[i + 1] : 0.0);
  }
  return y;
}

void DifferenceEquation::reset() { std::fill(state_.begin(), state_.end(), 0.0); }

namespace {

using Roots = std::vector<Complex>;
using Group = std::vector<Complex>;

constexpr double kConjTol = 1e-9;

// Conjugate pairs (upper member first) and reals paired in ascending order;
// at most one group holds a single root.
std::vector<Group> group_roots(const Roots& roots) {
  std::vector<double> reals;
  std::vector<Group> groups;
  std::vector<Complex> upper;
  for (const auto& r : roots) {
    if (std::abs(r.imag()) <= kConjTol * std::max(1.0, std::abs(r))) {
      reals.push_back(r.real());
    } else if (r.imag() > 0.0) {
      upper.push_back(r);
    }
  }
  for (const auto& r : upper) groups.push_back({r, std::conj(r)});
  std::sort(reals.begin(), reals.end());
  for (std::size_t k = 0; k < reals.size(); k += 2) {
    Group g{Complex(reals[k], 0.0)};
    if (k + 1 < reals.size()) g.push_back(Complex(reals[k + 1], 0.0));
    groups.push_back(g);
  }
  return groups;
}

Polynomial monic_from(const Group& g) {
  Polynomial p{1.0};
  if (g.size() == 2 && g[0].imag() != 0.0) {
    return Polynomial{std::norm(g[0]), -2.0 * g[0].real(), 1.0};
  }
  for (const auto& r : g) p = p * Polynomial{-r.real(), 1.0};
  return p;
}

double nearest(const Group& a, const Group& b) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& x : a) {
    for (const auto& y : b) d = std::min(d, std::abs(x - y));
  }
  return d;
}

}  // namespace

SectionCascade::SectionCascade(const RationalTF& tf, double T) : sample_period_(T) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw Error(ErrorCode::InvalidArgument, "sample period must be positive");
  }
  require_causal(tf, "transfer function");
  Roots zeros;
  Roots poles;
  std::complex<double> k = tf.num().leading() / tf.den().leading();
  if (tf.is_discrete()) {
    if (*tf.sample_period() != T) {
      throw Error(ErrorCode::DomainMismatch, "discrete system has a different sample period");
    }
    zeros = tf.num().roots();
    poles = tf.den().roots();
  } else {
    const double c = 2.0 / T;
    auto map = [&](const Complex& s, bool zero) {
      const Complex denom = c - s;
      if (std::abs(denom) <= kSingularRel * std::max(c, std::abs(s))) {
        throw Error(ErrorCode::BilinearSingularity,
                    "pole at s = 2/T = " + std::to_string(c) + " maps to z = infinity");
      }
      if (zero) {
        k *= denom;
      } else {
        k /= denom;
      }
      return (c + s) / denom;
    };
    if (!tf.num().is_zero()) {
      for (const auto& z : tf.num().roots()) zeros.push_back(map(z, true));
    }
    for (const auto& p : tf.den().roots()) poles.push_back(map(p, false));
    while (zeros.size() < poles.size()) zeros.push_back(Complex(-1.0, 0.0));
  }
  gain_ = tf.num().is_zero() ? 0.0 : k.real();

  auto pole_groups = group_roots(poles);
  auto zero_groups = tf.num().is_zero() ? std::vector<Group>{} : group_roots(zeros);
  // Sections nearest the unit circle take the zeros closest to them.
  std::stable_sort(pole_groups.begin(), pole_groups.end(), [](const Group& a, const Group& b) {
    return (a.size() < b.size()) || (a.size() == b.size() && std::abs(a[0]) > std::abs(b[0]));
  });
  std::vector<bool> used(zero_groups.size(), false);
  for (const auto& pg : pole_groups) {
    std::size_t best = zero_groups.size();
    for (std::size_t j = 0; j < zero_groups.size(); ++j) {
      if (used[j] || zero_groups[j].size() > pg.size()) continue;
      if (best == zero_groups.size() || nearest(pg, zero_groups[j]) < nearest(pg, zero_groups[best])) best = j;
    }
    Polynomial num{1.0};
    if (best < zero_groups.size()) {
      used[best] = true;
      num = monic_from(zero_groups[best]);
    }
    tfs_.push_back(RationalTF::discrete(num, monic_from(pg), T));
  }
  for (std::size_t j = 0; j < zero_groups.size(); ++j) {
    if (!used[j]) tfs_.push_back(RationalTF::discrete(monic_from(zero_groups[j]), Polynomial{1.0}, T));
  }
  for (const auto& t : tfs_) sections_.emplace_back(t);
}

double SectionCascade::step(double x) {
  double v = gain_ * x;
  for (auto& s : sections_) v = s.step(v);
  return v;
}

void SectionCascade::reset() {
  for (auto& s : sections_) s.reset();
}

RationalTF SectionCascade::combined() const {
  RationalTF out = RationalTF::discrete(Polynomial{gain_}, Polynomial{1.0}, sample_period_);
  for (const auto& t : tfs_) out = series(out, t);
  return out;
}

SimResult simulate(const PlantModel& plant, const RationalTF& controller,
                   const std::optional<RationalTF>& prefilter, const SimConfig& cfg) {
  if (is_frd(plant)) {
    throw Error(ErrorCode::FrdPlantUnsupported,
                "time simulation needs a transfer-function plant");
  }
  const RationalTF& p = std::get<RationalTF>(plant);
  const double T = cfg.sample_period_s;
  if (!(T > 0.0) || !(cfg.duration_s > 0.0) || !std::isfinite(cfg.duration_s)) {
    throw Error(ErrorCode::InvalidArgument, "duration and sample period must be positive");
  }
  const double samples = std::floor(cfg.duration_s / T + 1e-9) + 1.0;
  if (samples > kMaxSamples) {
    throw Error(ErrorCode::InvalidArgument, "simulation exceeds 1e7 samples");
  }
  validate(cfg.reference, SignalRole::Reference);
  if (cfg.disturbance) validate(*cfg.disturbance, SignalRole::Disturbance);
  if (cfg.noise) validate(*cfg.noise, SignalRole::Noise);
  if (p.is_discrete()) {
    throw Error(ErrorCode::DomainMismatch, "the plant must be continuous");
  }

  // Closed-loop paths, composed in the controller's domain.
  RationalTF tp = p;
  if (controller.is_discrete()) tp = discretize(p, T);
  const RationalTF c = controller.is_constant() ? controller.constant_in(tp.domain(), tp.sample_period())
                                                : controller;
  const RationalTF loop = series(c, tp);
  const RationalTF t_path = feedback(loop);
  const RationalTF ps_path = feedback(tp, c);
  const RationalTF cs_path = feedback(c, tp);
  const bool with_prefilter = cfg.use_prefilter && prefilter.has_value();
  std::optional<SectionCascade> f_de;
  if (with_prefilter) f_de.emplace(*prefilter, T);

  SimResult out;
  const auto count = static_cast<std::size_t>(samples);
  out.time_s.resize(count);
  for (std::size_t k = 0; k < count; ++k) out.time_s[k] = static_cast<double>(k) * T;
  out.reference = generate(cfg.reference, out.time_s);
  const std::vector<double> zeros(count, 0.0);
  const std::vector<double> d = cfg.disturbance ? generate(*cfg.disturbance, out.time_s) : zeros;
  const std::vector<double> n = cfg.noise ? generate(*cfg.noise, out.time_s) : zeros;
  if (cfg.disturbance && cfg.disturbance->shape == Shape::Gaussian) {
    out.disturbance_seed = cfg.disturbance->seed;
  }
  if (cfg.noise && cfg.noise->shape == Shape::Gaussian) out.noise_seed = cfg.noise->seed;

  SectionCascade y_cmd(t_path, T), y_dist(ps_path, T), u_cmd(cs_path, T), u_dist(t_path, T);
  std::optional<SectionCascade> y_raw;
  if (with_prefilter) {
    y_raw.emplace(t_path, T);
    out.output_no_prefilter.emplace();
    out.output_no_prefilter->reserve(count);
  }
  out.output.reserve(count);
  out.control_effort.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double rf = f_de ? f_de->step(out.reference[k]) : out.reference[k];
    const double yd = y_dist.step(d[k]);
    const double y = y_cmd.step(rf - n[k]) + yd;
    const double u = u_cmd.step(rf - n[k]) - u_dist.step(d[k]);
    const double y_nopf = y_raw ? y_raw->step(out.reference[k] - n[k]) + yd : 0.0;
    if (!std::isfinite(y) || std::abs(y) > kDivergenceLimit) {
      out.diverged = true;
      out.truncation_index = k;
      break;
    }
    out.output.push_back(y);
    out.control_effort.push_back(u);
    if (y_raw) out.output_no_prefilter->push_back(y_nopf);
  }
  if (out.diverged) {
    const std::size_t m = out.output.size();
    out.time_s.resize(m);
    out.reference.resize(m);
  }

  // Advisory only: sample period against the loop crossover.
  try {
    analysis::FreqGrid grid{1e-3, 0.45 / T, 20};
    const auto report = analysis::loop_margins(PlantModel{tp}, c, grid, {});
    if (report.bandwidth_hz && T > 1.0 / (20.0 * *report.bandwidth_hz)) {
      out.warnings.push_back("sample period " + std::to_string(T) +
                             " s exceeds 1/(20*bandwidth) for bandwidth " +
                             std::to_string(*report.bandwidth_hz) + " Hz");
    }
  } catch (const Error&) {
  }
  return out;
}

std::string to_csv(const SimResult& r) {
  std::string out = r.output_no_prefilter ? "t,r,y,u,y_nopf\n" : "t,r,y,u\n";
  for (std::size_t k = 0; k < r.output.size(); ++k) {
    if (r.output_no_prefilter) {
      append_row(out, {r.time_s[k], r.reference[k], r.output[k], r.control_effort[k],
                       (*r.output_no_prefilter)[k]});
    } else {
      append_row(out, {r.time_s[k], r.reference[k], r.output[k], r.control_effort[k]});
    }
  }
  return out;
}

}  // namespace loopshape::sim
