#include "loopshape/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "loopshape/analysis.hpp"
#include "loopshape/error.hpp"
#include "loopshape/fracapprox.hpp"
#include "loopshape/service.hpp"
#include "loopshape/session.hpp"
#include "loopshape/timesim.hpp"

namespace loopshape::cli {

namespace {

using session::Json;

constexpr double kRad2Deg = 180.0 / std::numbers::pi;

/// Domain failure tagged with the flag that fed the offending value.
struct FlagError {
  Error error;
  std::string flag;
};

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path, const std::string& flag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FlagError{Error(ErrorCode::InvalidArgument, "cannot read " + path), flag};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FlagError{Error(ErrorCode::InvalidArgument, "cannot write " + path), "--out"};
  f << content;
}

// "lo:hi" with positive increasing ends.
std::array<double, 2> parse_range(const std::string& s, const std::string& flag) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
    std::size_t used = 0;
    const double lo = std::stod(s.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("trailing text");
    const std::string rest = s.substr(colon + 1);
    const double hi = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("trailing text");
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) throw std::invalid_argument("order");
    return {lo, hi};
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "expected lo:hi with 0 < lo < hi, got '" + s + "'");
  }
}

std::vector<double> parse_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected comma-separated numbers, got '" + s + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError(flag, "expected at least one number");
  return out;
}

analysis::FreqGrid parse_grid(const std::string& s, analysis::FreqGrid base) {
  if (s.empty()) return base;
  std::string range = s;
  const auto second = s.find(':', s.find(':') + 1);
  if (second != std::string::npos) {
    range = s.substr(0, second);
    try {
      base.points_per_decade = std::stoi(s.substr(second + 1));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--grid", "expected fmin:fmax[:points_per_decade]");
    }
  }
  const auto r = parse_range(range, "--grid");
  base.f_min_hz = r[0];
  base.f_max_hz = r[1];
  try {
    analysis::validate(base);
  } catch (const Error& e) {
    throw CLI::ValidationError("--grid", e.what());
  }
  return base;
}

struct LoopInputs {
  PlantModel plant;
  RationalTF controller;
  std::optional<RationalTF> prefilter;
  analysis::Requirements reqs;
  analysis::FreqGrid grid;
  std::string controller_name;
};

struct LoopFlags {
  std::string session_file;
  std::string controller;
  std::string plant_file;
  std::string controller_file;
  std::string grid;
};

void add_loop_flags(CLI::App* cmd, LoopFlags& f) {
  cmd->add_option("--session", f.session_file, "Session document (JSON)");
  cmd->add_option("--controller", f.controller, "Controller name within the session");
  cmd->add_option("--plant", f.plant_file, "Plant file: JSON transfer function/example or FRD CSV");
  cmd->add_option("--controller-file", f.controller_file,
                  "Controller file: JSON controller definition or transfer function");
  cmd->add_option("--grid", f.grid, "Frequency grid fmin:fmax[:points_per_decade] in Hz");
}

LoopInputs load_loop(const LoopFlags& f) {
  LoopInputs in;
  if (!f.session_file.empty()) {
    if (!f.plant_file.empty() || !f.controller_file.empty()) {
      throw CLI::ValidationError("--session", "cannot be combined with --plant/--controller-file");
    }
    session::Session s;
    try {
      s = session::load_session(read_file(f.session_file, "--session"));
    } catch (const Error& e) {
      throw FlagError{e, "--session"};
    }
    const filters::ControllerDef* c = nullptr;
    if (!f.controller.empty()) {
      c = s.find_controller(f.controller);
      if (!c) throw FlagError{Error(ErrorCode::InvalidArgument, "no controller named '" + f.controller + "'"), "--controller"};
    } else if (!s.active_controller.empty()) {
      c = s.find_controller(s.active_controller);
    } else if (!s.controllers.empty()) {
      c = &s.controllers.front();
    }
    try {
      in.plant = session::resolve_plant(s.plant);
    } catch (const Error& e) {
      throw FlagError{e, "--session"};
    }
    if (c) {
      try {
        in.controller = filters::assemble_controller(*c).tf;
      } catch (const Error& e) {
        throw FlagError{e, "--session"};
      }
      in.prefilter = c->prefilter;
      in.controller_name = c->name;
    }
    in.reqs = s.requirements;
    in.grid = parse_grid(f.grid, s.grid);
    return in;
  }
  if (f.plant_file.empty()) throw CLI::RequiredError("--session or --plant");
  const std::string ptext = read_file(f.plant_file, "--plant");
  try {
    if (f.plant_file.size() > 4 && f.plant_file.substr(f.plant_file.size() - 4) == ".csv") {
      in.plant = session::import_frd(ptext).data;
    } else {
      auto j = Json::parse(ptext);
      if (!j.contains("type")) j["type"] = "tf";
      in.plant = session::resolve_plant(session::plant_from_json(j, ""));
    }
  } catch (const Error& e) {
    throw FlagError{e, "--plant"};
  } catch (const Json::exception& e) {
    throw FlagError{SchemaError("/", e.what()), "--plant"};
  }
  if (!f.controller_file.empty()) {
    try {
      const auto j = Json::parse(read_file(f.controller_file, "--controller-file"));
      if (j.contains("filters") || j.contains("name")) {
        auto def = session::controller_from_json(j, "");
        in.controller = filters::assemble_controller(def).tf;
        in.prefilter = def.prefilter;
        in.controller_name = def.name;
      } else {
        in.controller = session::tf_from_json(j, "");
      }
    } catch (const Error& e) {
      throw FlagError{e, "--controller-file"};
    } catch (const Json::exception& e) {
      throw FlagError{SchemaError("/", e.what()), "--controller-file"};
    }
  }
  in.grid = parse_grid(f.grid, analysis::FreqGrid{});
  return in;
}

std::string margins_text(const analysis::MarginReport& r) {
  std::ostringstream os;
  auto flag = [](const std::optional<bool>& f) {
    return !f ? std::string() : (*f ? "  [pass]" : "  [FAIL]");
  };
  os << "gain margin:    ";
  if (std::isfinite(r.gain_margin_db)) {
    os << fmt17(r.gain_margin_db) << " dB at " << fmt17(*r.gm_freq_hz) << " Hz";
  } else {
    os << "inf dB";
  }
  os << flag(r.flags.gain_margin) << "\n";
  os << "phase margin:   ";
  if (r.phase_margin_deg) {
    os << fmt17(*r.phase_margin_deg) << " deg at " << fmt17(*r.pm_freq_hz) << " Hz";
  } else {
    os << "undefined (no gain crossover)";
  }
  os << flag(r.flags.phase_margin) << "\n";
  os << "modulus margin: " << fmt17(r.modulus_margin) << " at " << fmt17(r.mm_freq_hz) << " Hz"
     << flag(r.flags.modulus_margin) << "\n";
  os << "bandwidth:      ";
  if (r.bandwidth_hz) {
    os << fmt17(*r.bandwidth_hz) << " Hz";
  } else {
    os << "none";
  }
  os << flag(r.flags.bandwidth) << "\n";
  return os.str();
}

std::string plot_csv(const analysis::PlotSeries& p) {
  std::string out;
  switch (p.view) {
    case analysis::View::Bode: out = "freq_hz,mag_db,phase_deg\n"; break;
    case analysis::View::Nyquist: out = "freq_hz,re,im\n"; break;
    case analysis::View::Nichols: out = "freq_hz,phase_deg,mag_db\n"; break;
  }
  for (std::size_t k = 0; k < p.freqs_hz.size(); ++k) {
    double a = 0.0;
    double b = 0.0;
    switch (p.view) {
      case analysis::View::Bode: a = p.mag_db[k]; b = p.phase_deg[k]; break;
      case analysis::View::Nyquist: a = p.re[k]; b = p.im[k]; break;
      case analysis::View::Nichols: a = p.phase_deg[k]; b = p.mag_db[k]; break;
    }
    out += fmt17(p.freqs_hz[k]) + "," + fmt17(a) + "," + fmt17(b) + "\n";
  }
  return out;
}

// ---- approx ----

struct ApproxFlags {
  std::string method = "crone";
  double nu = 0.5;
  std::string band = "1e-2:1e2";
  int n = 5;
  double T = 1e-3;
  std::string omega;
  int ppd = 50;
  std::string out;
};

int run_approx(const ApproxFlags& f, std::ostream& out) {
  frac::Method method;
  try {
    method = frac::parse_method(f.method);
  } catch (const Error& e) {
    throw CLI::ValidationError("--method", e.what());
  }
  const auto band = parse_range(f.band, "--band");
  RationalTF tf;
  // Flag blamed for a construction failure.
  auto culprit = [&](const Error& e) -> std::string {
    const std::string what = e.what();
    if (what.find("pairs") != std::string::npos || what.find("truncation") != std::string::npos) {
      return "--n";
    }
    switch (e.code()) {
      case ErrorCode::OrderOutOfRange:
      case ErrorCode::UnsupportedOrder:
      case ErrorCode::ComplexResidue: return "--nu";
      case ErrorCode::IterationBudget: return "--n";
      default: break;
    }
    if (method == frac::Method::Carlson) return "--n";
    return frac::is_discrete_method(method) ? "--T" : "--band";
  };
  try {
    switch (method) {
      case frac::Method::Crone: tf = frac::crone(f.nu, {band[0], band[1], f.n}); break;
      case frac::Method::Matsuda: tf = frac::matsuda(f.nu, {band[0], band[1], f.n}); break;
      case frac::Method::Carlson: tf = frac::carlson(f.nu, f.n); break;
      default: tf = frac::cfe_discretize(f.nu, {f.T, f.n}, frac::to_cfe(method)); break;
    }
  } catch (const Error& e) {
    throw FlagError{e, culprit(e)};
  }

  std::array<double, 2> w_range;
  if (!f.omega.empty()) {
    w_range = parse_range(f.omega, "--omega");
  } else if (tf.is_discrete()) {
    const double nyq = std::numbers::pi / f.T;
    w_range = {nyq * 1e-3, nyq * 0.9};
  } else {
    w_range = band;
  }
  if (tf.is_discrete() && !(w_range[1] < std::numbers::pi / f.T)) {
    throw FlagError{Error(ErrorCode::AboveNyquist, "--omega upper end must lie below pi/T"), "--omega"};
  }
  const double decades = std::log10(w_range[1] / w_range[0]);
  const auto count = static_cast<std::size_t>(std::ceil(decades * f.ppd - 1e-9)) + 1;
  std::vector<double> freqs(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double w = k + 1 == count ? w_range[1]
                                    : w_range[0] * std::pow(10.0, decades * static_cast<double>(k) /
                                                                      static_cast<double>(count - 1));
    freqs[k] = rad_to_hz(w);
  }
  const FreqResponse resp = eval_response(tf, freqs);
  const auto phase = analysis::unwrap_phase_deg(resp.values);
  if (!f.out.empty()) {
    std::string csv = "omega_rad_s,freq_hz,mag_db,phase_deg\n";
    for (std::size_t k = 0; k < count; ++k) {
      csv += fmt17(hz_to_rad(freqs[k])) + "," + fmt17(freqs[k]) + "," +
             fmt17(20.0 * std::log10(std::abs(resp.values[k]))) + "," + fmt17(phase[k]) + "\n";
    }
    write_output(f.out, csv, out);
  }
  Json j{{"method", frac::method_name(method)},
         {"nu", f.nu},
         {"domain", tf.is_discrete() ? "discrete" : "continuous"},
         {"variable", tf.is_discrete() ? "z" : "s"},
         {"num", tf.num().vec()},
         {"den", tf.den().vec()},
         {"poles", tf.pole_count()},
         {"zeros", tf.num().degree()},
         {"order", tf.order()}};
  if (tf.is_discrete()) {
    j["sample_period_s"] = f.T;
  } else if (method != frac::Method::Carlson) {
    j["band_rad_s"] = {band[0], band[1]};
  }
  out << j.dump(2) << "\n";
  return 0;
}

// ---- session subcommands ----

session::Session load_for_edit(const std::string& path) {
  try {
    return session::load_session(read_file(path, "FILE"));
  } catch (const Error& e) {
    throw FlagError{e, "FILE"};
  }
}

void save_edit(const session::Session& s, const std::string& path) {
  try {
    session::save_session_file(s, path);
  } catch (const Error& e) {
    throw FlagError{e, "FILE"};
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loop-shaping toolkit for integer and fractional-order controllers", "loopshape"};
  app.require_subcommand(1);

  ApproxFlags af;
  auto* approx = app.add_subcommand("approx", "Rational approximation of s^nu: coefficients and Bode CSV");
  approx->add_option("--method", af.method, "crone|carlson|matsuda|tustin|sobfd|tobfd")->capture_default_str();
  approx->add_option("--nu", af.nu, "Fractional order")->capture_default_str();
  approx->add_option("--band", af.band, "Approximation band lo:hi in rad/s")->capture_default_str();
  approx->add_option("--n", af.n, "Pole/zero pairs, CFE order, or Carlson iterations")->capture_default_str();
  approx->add_option("--T", af.T, "Sample period in s (discrete methods)")->capture_default_str();
  approx->add_option("--omega", af.omega, "Bode range lo:hi in rad/s (default: band, or up to 0.9 pi/T)");
  approx->add_option("--points-per-decade", af.ppd, "Bode resolution")->check(CLI::Range(2, 1000))->capture_default_str();
  approx->add_option("--out", af.out, "Bode CSV output file");

  LoopFlags mf;
  std::string margins_format = "json";
  auto* margins_cmd = app.add_subcommand("margins", "Gain, phase and modulus margins of the loop");
  add_loop_flags(margins_cmd, mf);
  margins_cmd->add_option("--format", margins_format, "json|text")->check(CLI::IsMember({"json", "text"}))->capture_default_str();

  struct PlotCmd {
    analysis::View view;
    LoopFlags flags;
    std::string subsystem = "open_loop";
    bool wrap = false;
    std::string out;
    CLI::App* cmd = nullptr;
  };
  std::vector<PlotCmd> plots(3);
  const analysis::View views[] = {analysis::View::Bode, analysis::View::Nyquist, analysis::View::Nichols};
  for (int i = 0; i < 3; ++i) {
    auto& p = plots[static_cast<std::size_t>(i)];
    p.view = views[i];
    p.cmd = app.add_subcommand(std::string(analysis::view_name(p.view)), "Plot data as CSV");
    add_loop_flags(p.cmd, p.flags);
    p.cmd->add_option("--subsystem", p.subsystem,
                      "plant|controller|open_loop|closed_loop|sensitivity|process_sensitivity|control_sensitivity")
        ->capture_default_str();
    p.cmd->add_flag("--wrap-phase", p.wrap, "Wrap phase into (-180, 180]");
    p.cmd->add_option("--out", p.out, "CSV output file (default stdout)");
  }

  LoopFlags sf;
  std::string sim_config;
  std::string sim_out;
  auto* sim_cmd = app.add_subcommand("sim", "Closed-loop time response as CSV");
  add_loop_flags(sim_cmd, sf);
  sim_cmd->add_option("--config", sim_config, "Simulation config JSON")->required();
  sim_cmd->add_option("--out", sim_out, "CSV output file (default stdout)");

  auto* sess = app.add_subcommand("session", "Create and edit session documents");
  sess->require_subcommand(1);
  std::string new_out;
  auto* s_new = sess->add_subcommand("new", "Write an empty session");
  s_new->add_option("FILE", new_out, "Output session file")->required();
  std::string val_file;
  auto* s_val = sess->add_subcommand("validate", "Check a session document");
  s_val->add_option("FILE", val_file, "Session file")->required();

  struct PlantEdit {
    std::string file, num, den, frd, example, masses, stiffness, damping;
    double T = 0.0;
    double gain = 1.0;
  } pe;
  auto* s_plant = sess->add_subcommand("set-plant", "Replace the session plant");
  s_plant->add_option("FILE", pe.file, "Session file")->required();
  auto* o_num = s_plant->add_option("--num", pe.num, "Numerator coefficients, ascending, comma-separated");
  s_plant->add_option("--den", pe.den, "Denominator coefficients, ascending, comma-separated")->needs(o_num);
  o_num->needs("--den");
  s_plant->add_option("--T", pe.T, "Sample period for a discrete plant");
  auto* o_frd = s_plant->add_option("--frd", pe.frd, "FRD CSV file")->excludes(o_num);
  auto* o_ex = s_plant->add_option("--example", pe.example,
                                   "mass_spring_damper|double_mass_spring|double_mass_spring_collocated")
                   ->excludes(o_num)->excludes(o_frd);
  s_plant->add_option("--masses", pe.masses, "Masses in kg")->needs(o_ex);
  s_plant->add_option("--stiffness", pe.stiffness, "Stiffnesses in N/m")->needs(o_ex);
  s_plant->add_option("--damping", pe.damping, "Dampings in Ns/m")->needs(o_ex);
  s_plant->add_option("--gain", pe.gain, "Input gain of the example plant")->needs(o_ex);

  struct FilterEdit {
    std::string file, controller, kind, method, band;
    std::vector<std::string> params;
  } fe;
  auto* s_filter = sess->add_subcommand("add-filter", "Append a filter to a controller (created if missing)");
  s_filter->add_option("FILE", fe.file, "Session file")->required();
  s_filter->add_option("--controller", fe.controller, "Controller name")->required();
  s_filter->add_option("--kind", fe.kind, "Filter kind")->required();
  s_filter->add_option("--param", fe.params, "Parameter key=value (repeatable)");
  s_filter->add_option("--method", fe.method, "Approximation method for fractional kinds");
  s_filter->add_option("--band", fe.band, "Approximation band lo:hi in Hz");

  std::string bind;
  auto* serve = app.add_subcommand("serve", "Serve the /api/v1 JSON API");
  serve->add_option("--bind", bind, "host[:port]; overrides LOOPSHAPE_BIND (default 127.0.0.1:8731)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*approx) return run_approx(af, out);
    if (*margins_cmd) {
      const auto in = load_loop(mf);
      analysis::MarginReport r;
      try {
        r = analysis::loop_margins(in.plant, in.controller, in.grid, in.reqs);
      } catch (const Error& e) {
        throw FlagError{e, "--grid"};
      }
      if (margins_format == "text") {
        out << margins_text(r);
      } else {
        out << session::to_json(r).dump(2) << "\n";
      }
      return 0;
    }
    for (auto& p : plots) {
      if (!*p.cmd) continue;
      analysis::Subsystem sub;
      try {
        sub = analysis::parse_subsystem(p.subsystem);
      } catch (const Error& e) {
        throw CLI::ValidationError("--subsystem", e.what());
      }
      const auto in = load_loop(p.flags);
      analysis::PlotSeries series;
      try {
        series = analysis::plot_data(in.plant, in.controller, sub, p.view, in.grid, p.wrap);
      } catch (const Error& e) {
        throw FlagError{e, "--grid"};
      }
      write_output(p.out, plot_csv(series), out);
      return 0;
    }
    if (*sim_cmd) {
      const auto in = load_loop(sf);
      sim::SimConfig cfg;
      try {
        cfg = session::sim_config_from_json(Json::parse(read_file(sim_config, "--config")), "");
      } catch (const Error& e) {
        throw FlagError{e, "--config"};
      } catch (const Json::exception& e) {
        throw FlagError{SchemaError("/", e.what()), "--config"};
      }
      sim::SimResult r;
      try {
        r = sim::simulate(in.plant, in.controller, in.prefilter, cfg);
      } catch (const Error& e) {
        throw FlagError{e, e.code() == ErrorCode::FrdPlantUnsupported ? "--plant" : "--config"};
      }
      for (const auto& w : r.warnings) err << "warning: " << w << "\n";
      if (r.diverged) err << "warning: output diverged at sample " << *r.truncation_index << "\n";
      write_output(sim_out, sim::to_csv(r), out);
      return 0;
    }
    if (*s_new) {
      save_edit(session::Session{}, new_out);
      return 0;
    }
    if (*s_val) {
      const auto s = load_for_edit(val_file);
      for (const auto& c : s.controllers) {
        try {
          filters::assemble_controller(c);
        } catch (const Error& e) {
          throw FlagError{e, "FILE"};
        }
      }
      if (session::has_plant(s.plant)) {
        try {
          session::resolve_plant(s.plant);
        } catch (const Error& e) {
          throw FlagError{e, "FILE"};
        }
      }
      out << "ok: " << s.controllers.size() << " controller(s)\n";
      return 0;
    }
    if (*s_plant) {
      auto s = load_for_edit(pe.file);
      if (!pe.num.empty()) {
        const auto num = parse_list(pe.num, "--num");
        const auto den = parse_list(pe.den, "--den");
        try {
          s.plant = pe.T > 0.0 ? RationalTF::discrete(Polynomial(num), Polynomial(den), pe.T)
                               : RationalTF(Polynomial(num), Polynomial(den));
        } catch (const Error& e) {
          throw FlagError{e, "--den"};
        }
      } else if (!pe.frd.empty()) {
        try {
          auto imp = session::import_frd(read_file(pe.frd, "--frd"));
          s.plant = session::FrdSource{std::move(imp.data), imp.schema, pe.frd};
        } catch (const Error& e) {
          throw FlagError{e, "--frd"};
        }
      } else if (!pe.example.empty()) {
        Json j{{"type", "example"}, {"kind", pe.example}, {"gain", pe.gain},
               {"masses_kg", pe.masses.empty() ? std::vector<double>{} : parse_list(pe.masses, "--masses")},
               {"stiffnesses_N_per_m", pe.stiffness.empty() ? std::vector<double>{} : parse_list(pe.stiffness, "--stiffness")},
               {"dampings_Ns_per_m", pe.damping.empty() ? std::vector<double>{} : parse_list(pe.damping, "--damping")}};
        try {
          s.plant = session::plant_from_json(j, "/plant");
        } catch (const Error& e) {
          throw FlagError{e, "--example"};
        }
      } else {
        throw CLI::RequiredError("--num/--den, --frd or --example");
      }
      save_edit(s, pe.file);
      return 0;
    }
    if (*s_filter) {
      auto s = load_for_edit(fe.file);
      Json j{{"kind", fe.kind}};
      for (const auto& p : fe.params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--param", "expected key=value, got '" + p + "'");
        const auto vals = parse_list(p.substr(eq + 1), "--param");
        if (vals.size() != 1) throw CLI::ValidationError("--param", "expected one value in '" + p + "'");
        j[p.substr(0, eq)] = vals[0];
      }
      if (!fe.method.empty()) j["approx_method"] = fe.method;
      if (!fe.band.empty()) {
        const auto b = parse_range(fe.band, "--band");
        j["approx_band_hz"] = {b[0], b[1]};
      }
      filters::FilterSpec spec;
      try {
        spec = session::filter_from_json(j, "");
        filters::realize_filter(spec);
      } catch (const Error& e) {
        throw FlagError{e, "--param"};
      }
      auto* c = s.find_controller(fe.controller);
      if (!c) {
        s.controllers.push_back({fe.controller, {}, std::nullopt});
        c = &s.controllers.back();
        if (s.active_controller.empty()) s.active_controller = fe.controller;
      }
      if (c->filters.size() >= filters::kMaxFilters) {
        throw FlagError{Error(ErrorCode::InvalidSpec, "controller already has 32 filters"), "--controller"};
      }
      c->filters.push_back(spec);
      std::size_t order = 0;
      try {
        order = filters::assemble_controller(*c).order;
      } catch (const Error& e) {
        throw FlagError{e, "--kind"};
      }
      save_edit(s, fe.file);
      out << "controller '" << fe.controller << "': " << c->filters.size()
          << " filter(s), order " << order << "\n";
      return 0;
    }
    if (*serve) {
      service::BindAddress addr;
      try {
        addr = service::parse_bind(bind, service::default_bind());
      } catch (const Error& e) {
        throw CLI::ValidationError("--bind", e.what());
      }
      service::Api api;
      service::Server server(api);
      out << "listening on http://" << addr.host << ":" << addr.port << "/api/v1/\n" << std::flush;
      if (!server.listen(addr.host, addr.port)) {
        throw FlagError{Error(ErrorCode::InvalidArgument, "cannot bind " + addr.host + ":" + std::to_string(addr.port)), "--bind"};
      }
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const FlagError& fe_) {
    err << "error: " << fe_.error.name() << " (" << error_module(fe_.error.code()) << ") ["
        << fe_.flag << "]: " << fe_.error.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.name() << " (" << error_module(e.code()) << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace loopshape::cli
