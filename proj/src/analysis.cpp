#include "loopshape/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "loopshape/error.hpp"

namespace loopshape::analysis {

namespace {

constexpr double kRad2Deg = 180.0 / std::numbers::pi;
constexpr double kBisectRelTol = 1e-6;
constexpr int kMaxBisect = 200;

double db(Complex v) { return 20.0 * std::log10(std::abs(v)); }

// Bisection in log-frequency for a root of h bracketed by [lo, hi].
template <typename F>
double bisect(F&& h, double lo, double hi) {
  double h_lo = h(lo);
  for (int it = 0; it < kMaxBisect && hi / lo - 1.0 > 0.1 * kBisectRelTol; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double h_mid = h(mid);
    if (h_mid == 0.0) return mid;
    if ((h_mid > 0.0) == (h_lo > 0.0)) {
      lo = mid;
      h_lo = h_mid;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo * hi);
}

// Shift `deg` by a multiple of 360 to land nearest to `ref`.
double nearest_branch(double deg, double ref) {
  return deg - 360.0 * std::round((deg - ref) / 360.0);
}

struct Sampled {
  const std::vector<double>& f;
  std::vector<double> log_f;
  std::vector<double> log_mag;
  std::vector<double> phase;

  explicit Sampled(const FreqResponse& loop)
      : f(loop.freqs_hz), phase(unwrap_phase_deg(loop.values)) {
    for (std::size_t k = 0; k < f.size(); ++k) {
      log_f.push_back(std::log(f[k]));
      log_mag.push_back(std::log(std::abs(loop.values[k])));
    }
  }

  double lerp(const std::vector<double>& y, std::size_t k, double freq) const {
    const double t = (std::log(freq) - log_f[k]) / (log_f[k + 1] - log_f[k]);
    return y[k] + t * (y[k + 1] - y[k]);
  }
};

}  // namespace

void validate(const FreqGrid& grid) {
  if (!(grid.f_min_hz > 0.0) || !(grid.f_max_hz > grid.f_min_hz) || !std::isfinite(grid.f_max_hz)) {
    throw Error(ErrorCode::InvalidArgument, "frequency grid must satisfy 0 < f_min < f_max");
  }
  if (grid.points_per_decade < 10 || grid.points_per_decade > 1000) {
    throw Error(ErrorCode::InvalidArgument, "points_per_decade must be in [10, 1000]");
  }
}

std::vector<double> grid_points(const FreqGrid& grid) {
  validate(grid);
  const double decades = std::log10(grid.f_max_hz / grid.f_min_hz);
  const auto count = static_cast<std::size_t>(std::ceil(decades * grid.points_per_decade - 1e-9)) + 1;
  std::vector<double> f(std::max<std::size_t>(count, 2));
  const double step = decades / static_cast<double>(f.size() - 1);
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = grid.f_min_hz * std::pow(10.0, step * static_cast<double>(k));
  }
  f.front() = grid.f_min_hz;
  f.back() = grid.f_max_hz;
  return f;
}

FreqGrid clamp_to_plant(const FreqGrid& grid, const PlantModel& plant) {
  const auto* frd = std::get_if<FrdData>(&plant);
  if (!frd) return grid;
  FreqGrid out = grid;
  out.f_min_hz = std::max(grid.f_min_hz, frd->f_min());
  out.f_max_hz = std::min(grid.f_max_hz, frd->f_max());
  if (!(out.f_min_hz < out.f_max_hz)) {
    out.f_min_hz = frd->f_min();
    out.f_max_hz = frd->f_max();
  }
  return out;
}

void validate(const Requirements& reqs) {
  auto positive = [](const std::optional<double>& v, const char* name) {
    if (v && !(*v > 0.0 && std::isfinite(*v))) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
    }
  };
  positive(reqs.min_gm_db, "min_gm_db");
  positive(reqs.min_pm_deg, "min_pm_deg");
  positive(reqs.min_mm, "min_mm");
  if (reqs.bw_range_hz) {
    const auto& b = *reqs.bw_range_hz;
    if (!(b[0] > 0.0) || !(b[1] > b[0])) {
      throw Error(ErrorCode::InvalidArgument, "bw_range_hz must be positive and increasing");
    }
  }
}

FreqResponse open_loop(const PlantModel& plant, const RationalTF& controller,
                       const FreqGrid& grid) {
  const auto f = grid_points(clamp_to_plant(grid, plant));
  return multiply(eval_response(controller, f), eval_response(plant, f));
}

double wrap_deg(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

std::vector<double> unwrap_phase_deg(const std::vector<Complex>& values) {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double raw = std::arg(values[k]) * kRad2Deg;
    out[k] = k == 0 ? raw : nearest_branch(raw, out[k - 1]);
  }
  return out;
}

MarginFlags evaluate_requirements(const MarginReport& r, const Requirements& reqs) {
  MarginFlags flags;
  if (reqs.min_gm_db) flags.gain_margin = r.gain_margin_db >= *reqs.min_gm_db;
  if (reqs.min_pm_deg) {
    flags.phase_margin = r.phase_margin_deg && *r.phase_margin_deg >= *reqs.min_pm_deg;
  }
  if (reqs.min_mm) flags.modulus_margin = r.modulus_margin >= *reqs.min_mm;
  if (reqs.bw_range_hz) {
    flags.bandwidth = r.bandwidth_hz && *r.bandwidth_hz >= (*reqs.bw_range_hz)[0] &&
                      *r.bandwidth_hz <= (*reqs.bw_range_hz)[1];
  }
  return flags;
}

MarginReport margins(const FreqResponse& loop, const Requirements& reqs,
                     const LoopEvaluator& exact) {
  const std::size_t n = loop.size();
  if (n < 10 || loop.freqs_hz.back() / loop.freqs_hz.front() < 10.0 * (1.0 - 1e-12)) {
    throw Error(ErrorCode::InsufficientGrid,
                "margins need at least 10 points spanning one decade");
  }
  const Sampled s(loop);
  MarginReport r;

  // Gain crossovers.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double a = s.log_mag[k];
    const double b = s.log_mag[k + 1];
    if (a == 0.0) {
      r.gain_crossovers_hz.push_back(s.f[k]);
      continue;
    }
    if ((a > 0.0) == (b > 0.0) || b == 0.0) continue;
    auto h = [&](double f) {
      return exact ? std::log(std::abs(exact(f))) : s.lerp(s.log_mag, k, f);
    };
    r.gain_crossovers_hz.push_back(bisect(h, s.f[k], s.f[k + 1]));
  }
  if (n > 0 && s.log_mag[n - 1] == 0.0) r.gain_crossovers_hz.push_back(s.f[n - 1]);

  auto phase_at = [&](std::size_t k, double f) {
    const double ref = s.lerp(s.phase, k, f);
    return exact ? nearest_branch(std::arg(exact(f)) * kRad2Deg, ref) : ref;
  };
  auto bracket_of = [&](double f) {
    auto it = std::upper_bound(s.f.begin(), s.f.end(), f);
    auto k = static_cast<std::size_t>(it - s.f.begin());
    return std::min(k == 0 ? 0 : k - 1, n - 2);
  };

  if (!r.gain_crossovers_hz.empty()) {
    const double fc = r.gain_crossovers_hz.front();
    r.pm_freq_hz = fc;
    r.phase_margin_deg = wrap_deg(phase_at(bracket_of(fc), fc) + 180.0);
    r.bandwidth_hz = fc;
  }

  // Phase crossovers at every odd multiple of 180 degrees.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double a = s.phase[k];
    const double b = s.phase[k + 1];
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    // Odd multiples of 180 met in [a, b); the last sample also closes its segment.
    for (double m = std::ceil((lo - 180.0) / 360.0); 360.0 * m + 180.0 <= hi; m += 1.0) {
      const double target = 360.0 * m + 180.0;
      const bool last = k + 2 == n;
      if (b == target && !last) continue;
      double fp;
      if (a == target) {
        fp = s.f[k];
      } else if (b == target) {
        fp = s.f[k + 1];
      } else {
        auto h = [&](double f) { return phase_at(k, f) - target; };
        fp = bisect(h, s.f[k], s.f[k + 1]);
      }
      const double mag = exact ? std::abs(exact(fp)) : std::exp(s.lerp(s.log_mag, k, fp));
      r.phase_crossovers.push_back({fp, -20.0 * std::log10(mag)});
    }
  }
  r.gain_margin_db = std::numeric_limits<double>::infinity();
  for (const auto& pc : r.phase_crossovers) {
    if (!r.gm_freq_hz || std::abs(pc.gain_margin_db) < std::abs(r.gain_margin_db)) {
      r.gain_margin_db = pc.gain_margin_db;
      r.gm_freq_hz = pc.freq_hz;
    }
  }

  // Modulus margin: grid minimum of |1+L|, refined locally.
  std::size_t kmin = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs(1.0 + loop.values[k]) < std::abs(1.0 + loop.values[kmin])) kmin = k;
  }
  r.modulus_margin = std::abs(1.0 + loop.values[kmin]);
  r.mm_freq_hz = s.f[kmin];
  if (exact) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = s.log_f[kmin == 0 ? 0 : kmin - 1];
    double b = s.log_f[std::min(kmin + 1, n - 1)];
    auto dist = [&](double lf) { return std::abs(1.0 + exact(std::exp(lf))); };
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = dist(c);
    double fd = dist(d);
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = dist(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = dist(d);
      }
    }
    const double lf = 0.5 * (a + b);
    const double refined = dist(lf);
    if (refined < r.modulus_margin) {
      r.modulus_margin = refined;
      r.mm_freq_hz = std::exp(lf);
    }
  }

  // Closed-loop -3 dB point: first downward crossing of |L/(1+L)| = 1/sqrt(2).
  const double half_power_db = -10.0 * std::log10(2.0);
  std::vector<double> t_db(n);
  for (std::size_t k = 0; k < n; ++k) t_db[k] = db(loop.values[k] / (1.0 + loop.values[k]));
  if (t_db[0] >= half_power_db) {
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (t_db[k] >= half_power_db && t_db[k + 1] < half_power_db) {
        const double t = (half_power_db - t_db[k]) / (t_db[k + 1] - t_db[k]);
        r.closed_loop_bandwidth_hz = std::exp(s.log_f[k] + t * (s.log_f[k + 1] - s.log_f[k]));
        break;
      }
    }
  }

  r.flags = evaluate_requirements(r, reqs);
  return r;
}

MarginReport loop_margins(const PlantModel& plant, const RationalTF& controller,
                          const FreqGrid& grid, const Requirements& reqs) {
  const FreqResponse loop = open_loop(plant, controller, grid);
  // Refinement stays inside grid brackets; the clamp only absorbs rounding at the FRD ends.
  LoopEvaluator exact = [&](double f) {
    if (const auto* frd = std::get_if<FrdData>(&plant)) {
      f = std::clamp(f, frd->f_min(), frd->f_max());
      return controller.response(f) * frd->interpolate(f);
    }
    return controller.response(f) * std::get<RationalTF>(plant).response(f);
  };
  return margins(loop, reqs, exact);
}

std::string_view subsystem_name(Subsystem s) {
  switch (s) {
    case Subsystem::Plant: return "plant";
    case Subsystem::Controller: return "controller";
    case Subsystem::OpenLoop: return "open_loop";
    case Subsystem::ClosedLoop: return "closed_loop";
    case Subsystem::Sensitivity: return "sensitivity";
    case Subsystem::ProcessSensitivity: return "process_sensitivity";
    case Subsystem::ControlSensitivity: return "control_sensitivity";
  }
  return "open_loop";
}

Subsystem parse_subsystem(std::string_view name) {
  for (auto s : {Subsystem::Plant, Subsystem::Controller, Subsystem::OpenLoop,
                 Subsystem::ClosedLoop, Subsystem::Sensitivity, Subsystem::ProcessSensitivity,
                 Subsystem::ControlSensitivity}) {
    if (subsystem_name(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown subsystem '" + std::string(name) + "'");
}

std::string_view view_name(View v) {
  switch (v) {
    case View::Bode: return "bode";
    case View::Nyquist: return "nyquist";
    case View::Nichols: return "nichols";
  }
  return "bode";
}

View parse_view(std::string_view name) {
  for (auto v : {View::Bode, View::Nyquist, View::Nichols}) {
    if (view_name(v) == name) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown view '" + std::string(name) + "'");
}

FreqResponse subsystem_response(const PlantModel& plant, const RationalTF& controller,
                                Subsystem which, const std::vector<double>& f) {
  switch (which) {
    case Subsystem::Plant: return eval_response(plant, f);
    case Subsystem::Controller: return eval_response(controller, f);
    case Subsystem::OpenLoop: return multiply(eval_response(controller, f), eval_response(plant, f));
    case Subsystem::ClosedLoop:
      return sensitivity(plant, controller, SensitivityKind::Complementary, f);
    case Subsystem::Sensitivity:
      return sensitivity(plant, controller, SensitivityKind::Sensitivity, f);
    case Subsystem::ProcessSensitivity:
      return sensitivity(plant, controller, SensitivityKind::Process, f);
    case Subsystem::ControlSensitivity:
      return sensitivity(plant, controller, SensitivityKind::Control, f);
  }
  return eval_response(plant, f);
}

PlotSeries plot_data(const PlantModel& plant, const RationalTF& controller, Subsystem which,
                     View view, const FreqGrid& grid, bool wrap_phase) {
  const auto f = grid_points(clamp_to_plant(grid, plant));
  const FreqResponse resp = subsystem_response(plant, controller, which, f);
  PlotSeries out;
  out.subsystem = which;
  out.view = view;
  out.wrap_phase = wrap_phase;
  out.freqs_hz = resp.freqs_hz;
  if (view == View::Nyquist) {
    for (const auto& v : resp.values) {
      out.re.push_back(v.real());
      out.im.push_back(v.imag());
    }
    return out;
  }
  out.phase_deg = unwrap_phase_deg(resp.values);
  if (wrap_phase) {
    for (double& p : out.phase_deg) p = wrap_deg(p);
  }
  for (const auto& v : resp.values) out.mag_db.push_back(db(v));
  return out;
}

}  // namespace loopshape::analysis
