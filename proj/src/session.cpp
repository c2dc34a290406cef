#include "loopshape/session.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "loopshape/error.hpp"

namespace loopshape::session {

namespace {

constexpr double kDeg2Rad = std::numbers::pi / 180.0;

[[noreturn]] void schema(const std::string& path, const std::string& detail) {
  throw SchemaError(path.empty() ? "/" : path, detail);
}

const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) schema(path, "expected an object");
  return j;
}

void reject_unknown(const Json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) schema(path + "/" + key, "unknown field");
  }
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) schema(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema(path, "expected a finite number");
  return v;
}

double positive(const Json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) schema(path, "must be positive");
  return v;
}

const Json& field(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schema(path + "/" + key, "missing required field");
  return *it;
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) schema(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) schema(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], path + "/" + std::to_string(k)));
  return out;
}

std::optional<double> opt_number(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return number(*it, path + "/" + key);
}

std::array<double, 2> pair(const Json& j, const std::string& path) {
  const auto v = numbers(j, path);
  if (v.size() != 2) schema(path, "expected two numbers");
  return {v[0], v[1]};
}

long long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    if (j.is_number_float()) {
      const double v = j.get<double>();
      if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15) {
        return static_cast<long long>(v);
      }
    }
    schema(path, "expected an integer");
  }
  return j.get<long long>();
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string_view schema_name(FrdSchema s) { return s == FrdSchema::ReIm ? "re_im" : "mag_phase"; }

ExampleKind parse_example_kind(const std::string& name, const std::string& path) {
  for (auto k : {ExampleKind::MassSpringDamper, ExampleKind::DoubleMassSpring,
                 ExampleKind::DoubleMassSpringCollocated}) {
    if (example_kind_name(k) == name) return k;
  }
  schema(path, "unknown example plant '" + name + "'");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view example_kind_name(ExampleKind kind) {
  switch (kind) {
    case ExampleKind::MassSpringDamper: return "mass_spring_damper";
    case ExampleKind::DoubleMassSpring: return "double_mass_spring";
    case ExampleKind::DoubleMassSpringCollocated: return "double_mass_spring_collocated";
  }
  return "mass_spring_damper";
}

void validate(const ExamplePlantSpec& spec) {
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "example plant: " + what);
  };
  for (double m : spec.masses_kg) {
    if (!(m > 0.0) || !std::isfinite(m)) bad("masses must be positive");
  }
  for (double k : spec.stiffnesses_N_per_m) {
    if (!(k >= 0.0) || !std::isfinite(k)) bad("stiffnesses must be non-negative");
  }
  for (double c : spec.dampings_Ns_per_m) {
    if (!(c >= 0.0) || !std::isfinite(c)) bad("dampings must be non-negative");
  }
  if (!(spec.gain > 0.0) || !std::isfinite(spec.gain)) bad("gain must be positive");
  if (spec.kind == ExampleKind::MassSpringDamper) {
    if (spec.masses_kg.size() != 1 || spec.stiffnesses_N_per_m.size() != 1 ||
        spec.dampings_Ns_per_m.size() != 1) {
      bad("mass_spring_damper takes one mass, one stiffness and one damping");
    }
    return;
  }
  if (spec.masses_kg.size() != 2) bad("double mass-spring plants take two masses");
  const auto ns = spec.stiffnesses_N_per_m.size();
  const auto nc = spec.dampings_Ns_per_m.size();
  if (ns < 1 || ns > 2 || nc < 1 || nc > 2) {
    bad("stiffness and damping lists hold the coupling element, optionally preceded by ground");
  }
  if (!(spec.stiffnesses_N_per_m.back() > 0.0)) bad("coupling stiffness must be positive");
}

RationalTF make_example_plant(const ExamplePlantSpec& spec) {
  validate(spec);
  if (spec.kind == ExampleKind::MassSpringDamper) {
    return RationalTF({spec.gain}, {spec.stiffnesses_N_per_m[0], spec.dampings_Ns_per_m[0],
                                    spec.masses_kg[0]});
  }
  const double m1 = spec.masses_kg[0];
  const double m2 = spec.masses_kg[1];
  const double k1 = spec.stiffnesses_N_per_m.size() == 2 ? spec.stiffnesses_N_per_m[0] : 0.0;
  const double k2 = spec.stiffnesses_N_per_m.back();
  const double c1 = spec.dampings_Ns_per_m.size() == 2 ? spec.dampings_Ns_per_m[0] : 0.0;
  const double c2 = spec.dampings_Ns_per_m.back();
  const Polynomial a1{k1 + k2, c1 + c2, m1};
  const Polynomial a2{k2, c2, m2};
  const Polynomial b{k2, c2};
  const Polynomial delta = a1 * a2 - b * b;
  const Polynomial num = spec.kind == ExampleKind::DoubleMassSpringCollocated ? a2 : b;
  return RationalTF(num * spec.gain, delta);
}

bool has_plant(const PlantSource& src) { return !std::holds_alternative<std::monostate>(src); }

PlantModel resolve_plant(const PlantSource& src) {
  if (const auto* tf = std::get_if<RationalTF>(&src)) return *tf;
  if (const auto* frd = std::get_if<FrdSource>(&src)) return frd->data;
  if (const auto* ex = std::get_if<ExamplePlantSpec>(&src)) return make_example_plant(*ex);
  throw Error(ErrorCode::InvalidArgument, "session has no plant");
}

const filters::ControllerDef* Session::find_controller(std::string_view name) const {
  for (const auto& c : controllers) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

filters::ControllerDef* Session::find_controller(std::string_view name) {
  for (auto& c : controllers) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void validate(const Session& s) {
  if (s.format_version != kFormatVersion) {
    throw Error(ErrorCode::VersionUnsupported,
                "format_version " + std::to_string(s.format_version) + " is not supported");
  }
  std::set<std::string> names;
  for (std::size_t k = 0; k < s.controllers.size(); ++k) {
    const auto& c = s.controllers[k];
    const std::string path = "/controllers/" + std::to_string(k);
    if (c.name.empty()) schema(path + "/name", "must not be empty");
    if (!names.insert(c.name).second) schema(path + "/name", "duplicate controller name '" + c.name + "'");
    if (c.filters.size() > filters::kMaxFilters) schema(path + "/filters", "more than 32 filters");
  }
  if (!s.active_controller.empty() && !names.count(s.active_controller)) {
    schema("/active_controller", "no controller named '" + s.active_controller + "'");
  }
  try {
    analysis::validate(s.grid);
  } catch (const Error& e) {
    schema("/grid", e.what());
  }
  try {
    analysis::validate(s.requirements);
  } catch (const Error& e) {
    schema("/requirements", e.what());
  }
}

// ---- JSON mapping ----

Json to_json(const RationalTF& tf) {
  Json j{{"num", tf.num().vec()}, {"den", tf.den().vec()}};
  if (tf.is_discrete()) j["sample_period_s"] = *tf.sample_period();
  return j;
}

RationalTF tf_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, {"type", "num", "den", "sample_period_s"}, path);
  auto num = numbers(field(j, "num", path), path + "/num");
  auto den = numbers(field(j, "den", path), path + "/den");
  if (num.empty()) schema(path + "/num", "must not be empty");
  if (den.empty()) schema(path + "/den", "must not be empty");
  const auto T = opt_number(j, "sample_period_s", path);
  if (T && !(*T > 0.0)) schema(path + "/sample_period_s", "must be positive");
  Polynomial d(std::move(den));
  if (d.is_zero()) schema(path + "/den", "denominator is the zero polynomial");
  Polynomial n(std::move(num));
  return T ? RationalTF::discrete(std::move(n), std::move(d), *T)
           : RationalTF(std::move(n), std::move(d));
}

Json to_json(const filters::FilterSpec& f) {
  Json j{{"kind", filters::kind_name(f.kind)}};
  for (const auto& [key, value] : f.params) j[key] = value;
  if (filters::is_fractional(f.kind)) j["approx_method"] = frac::method_name(f.approx_method);
  if (f.approx_band_hz) j["approx_band_hz"] = {(*f.approx_band_hz)[0], (*f.approx_band_hz)[1]};
  return j;
}

filters::FilterSpec filter_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  filters::FilterSpec f;
  const std::string kind = text(field(j, "kind", path), path + "/kind");
  try {
    f.kind = filters::parse_kind(kind);
  } catch (const Error&) {
    schema(path + "/kind", "unknown filter kind '" + kind + "'");
  }
  const auto required = filters::required_params(f.kind);
  const auto optional = filters::optional_params(f.kind);
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "/" + key;
    if (key == "kind") continue;
    if (key == "approx_method") {
      if (!filters::is_fractional(f.kind)) schema(p, "only fractional filters take an approximation");
      try {
        f.approx_method = frac::parse_method(text(value, p));
      } catch (const Error&) {
        schema(p, "unknown approximation method");
      }
      continue;
    }
    if (key == "approx_band_hz") {
      if (!filters::is_fractional(f.kind)) schema(p, "only fractional filters take a band");
      f.approx_band_hz = pair(value, p);
      continue;
    }
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) schema(p, "unknown parameter for " + kind);
    f.params[key] = number(value, p);
  }
  for (auto key : required) {
    if (!f.params.count(std::string(key))) schema(path + "/" + std::string(key), "missing required field");
  }
  return f;
}

Json to_json(const filters::ControllerDef& c) {
  Json fl = Json::array();
  for (const auto& f : c.filters) fl.push_back(to_json(f));
  Json j{{"name", c.name}, {"filters", fl}};
  if (c.prefilter) j["prefilter"] = to_json(*c.prefilter);
  return j;
}

filters::ControllerDef controller_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, {"name", "filters", "prefilter"}, path);
  filters::ControllerDef c;
  c.name = text(field(j, "name", path), path + "/name");
  if (c.name.empty()) schema(path + "/name", "must not be empty");
  if (auto it = j.find("filters"); it != j.end()) {
    if (!it->is_array()) schema(path + "/filters", "expected an array");
    if (it->size() > filters::kMaxFilters) schema(path + "/filters", "more than 32 filters");
    for (std::size_t k = 0; k < it->size(); ++k) {
      c.filters.push_back(filter_from_json((*it)[k], path + "/filters/" + std::to_string(k)));
    }
  }
  if (auto it = j.find("prefilter"); it != j.end() && !it->is_null()) {
    c.prefilter = tf_from_json(*it, path + "/prefilter");
  }
  return c;
}

Json to_json(const analysis::Requirements& r) {
  Json j = Json::object();
  if (r.min_gm_db) j["min_gm_db"] = *r.min_gm_db;
  if (r.min_pm_deg) j["min_pm_deg"] = *r.min_pm_deg;
  if (r.min_mm) j["min_mm"] = *r.min_mm;
  if (r.bw_range_hz) j["bw_range_hz"] = {(*r.bw_range_hz)[0], (*r.bw_range_hz)[1]};
  return j;
}

analysis::Requirements requirements_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, {"min_gm_db", "min_pm_deg", "min_mm", "bw_range_hz"}, path);
  analysis::Requirements r;
  r.min_gm_db = opt_number(j, "min_gm_db", path);
  r.min_pm_deg = opt_number(j, "min_pm_deg", path);
  r.min_mm = opt_number(j, "min_mm", path);
  if (auto it = j.find("bw_range_hz"); it != j.end() && !it->is_null()) {
    r.bw_range_hz = pair(*it, path + "/bw_range_hz");
  }
  for (auto [key, v] : {std::pair{"min_gm_db", r.min_gm_db}, std::pair{"min_pm_deg", r.min_pm_deg},
                        std::pair{"min_mm", r.min_mm}}) {
    if (v && !(*v > 0.0)) schema(path + "/" + key, "must be positive");
  }
  if (r.bw_range_hz && !((*r.bw_range_hz)[0] > 0.0 && (*r.bw_range_hz)[1] > (*r.bw_range_hz)[0])) {
    schema(path + "/bw_range_hz", "must be positive and increasing");
  }
  return r;
}

Json to_json(const analysis::FreqGrid& g) {
  return {{"f_min_hz", g.f_min_hz}, {"f_max_hz", g.f_max_hz},
          {"points_per_decade", g.points_per_decade}};
}

analysis::FreqGrid grid_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, {"f_min_hz", "f_max_hz", "points_per_decade"}, path);
  analysis::FreqGrid g;
  if (auto v = opt_number(j, "f_min_hz", path)) g.f_min_hz = *v;
  if (auto v = opt_number(j, "f_max_hz", path)) g.f_max_hz = *v;
  if (auto it = j.find("points_per_decade"); it != j.end()) {
    const auto ppd = integer(*it, path + "/points_per_decade");
    if (ppd < 10 || ppd > 1000) schema(path + "/points_per_decade", "must be in [10, 1000]");
    g.points_per_decade = static_cast<int>(ppd);
  }
  if (!(g.f_min_hz > 0.0)) schema(path + "/f_min_hz", "must be positive");
  if (!(g.f_max_hz > g.f_min_hz)) schema(path + "/f_max_hz", "must exceed f_min_hz");
  return g;
}

Json to_json(const PlantSource& p) {
  if (const auto* tf = std::get_if<RationalTF>(&p)) {
    Json j = to_json(*tf);
    j["type"] = "tf";
    return j;
  }
  if (const auto* frd = std::get_if<FrdSource>(&p)) {
    std::vector<double> re, im;
    for (const auto& v : frd->data.values()) {
      re.push_back(v.real());
      im.push_back(v.imag());
    }
    return {{"type", "frd"}, {"file", frd->file}, {"schema", schema_name(frd->schema)},
            {"freq_hz", frd->data.freqs_hz()}, {"re", re}, {"im", im}};
  }
  if (const auto* ex = std::get_if<ExamplePlantSpec>(&p)) {
    return {{"type", "example"}, {"kind", example_kind_name(ex->kind)},
            {"masses_kg", ex->masses_kg}, {"stiffnesses_N_per_m", ex->stiffnesses_N_per_m},
            {"dampings_Ns_per_m", ex->dampings_Ns_per_m}, {"gain", ex->gain}};
  }
  return nullptr;
}

PlantSource plant_from_json(const Json& j, const std::string& path) {
  if (j.is_null()) return std::monostate{};
  require_object(j, path);
  const std::string type = text(field(j, "type", path), path + "/type");
  if (type == "tf") return tf_from_json(j, path);
  if (type == "frd") {
    reject_unknown(j, {"type", "file", "schema", "freq_hz", "re", "im"}, path);
    std::string file;
    FrdSchema frd_schema = FrdSchema::ReIm;
    if (auto it = j.find("file"); it != j.end()) file = text(*it, path + "/file");
    if (auto it = j.find("schema"); it != j.end()) {
      const auto s = text(*it, path + "/schema");
      if (s == "re_im") {
        frd_schema = FrdSchema::ReIm;
      } else if (s == "mag_phase") {
        frd_schema = FrdSchema::MagPhase;
      } else {
        schema(path + "/schema", "expected re_im or mag_phase");
      }
    }
    const auto f = numbers(field(j, "freq_hz", path), path + "/freq_hz");
    const auto re = numbers(field(j, "re", path), path + "/re");
    const auto im = numbers(field(j, "im", path), path + "/im");
    if (re.size() != f.size() || im.size() != f.size()) {
      schema(path, "freq_hz, re and im must have equal length");
    }
    std::vector<Complex> v(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) v[k] = {re[k], im[k]};
    try {
      return FrdSource{FrdData(f, std::move(v)), frd_schema, file};
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonMonotoneFrequencies) throw;
      schema(path + "/freq_hz", e.what());
    }
    return std::monostate{};
  }
  if (type == "example") {
    reject_unknown(j, {"type", "kind", "masses_kg", "stiffnesses_N_per_m", "dampings_Ns_per_m",
                       "gain"}, path);
    ExamplePlantSpec ex;
    ex.kind = parse_example_kind(text(field(j, "kind", path), path + "/kind"), path + "/kind");
    ex.masses_kg = numbers(field(j, "masses_kg", path), path + "/masses_kg");
    ex.stiffnesses_N_per_m = numbers(field(j, "stiffnesses_N_per_m", path), path + "/stiffnesses_N_per_m");
    ex.dampings_Ns_per_m = numbers(field(j, "dampings_Ns_per_m", path), path + "/dampings_Ns_per_m");
    if (auto g = opt_number(j, "gain", path)) ex.gain = *g;
    try {
      validate(ex);
    } catch (const Error& e) {
      schema(path, e.what());
    }
    return ex;
  }
  schema(path + "/type", "expected tf, frd or example");
}

namespace {

Json signal_json(const sim::SignalSpec& s) {
  Json j{{"shape", sim::shape_name(s.shape)}, {"amplitude", s.amplitude},
         {"start_time_s", s.start_time_s}};
  if (s.shape == sim::Shape::Sine || s.shape == sim::Shape::Sawtooth) j["frequency_hz"] = s.frequency_hz;
  if (s.shape == sim::Shape::Gaussian) j["std_dev"] = s.std_dev;
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

sim::SignalSpec signal_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, {"shape", "amplitude", "frequency_hz", "std_dev", "seed", "start_time_s"}, path);
  sim::SignalSpec s;
  const auto shape = text(field(j, "shape", path), path + "/shape");
  try {
    s.shape = sim::parse_shape(shape);
  } catch (const Error&) {
    schema(path + "/shape", "unknown shape '" + shape + "'");
  }
  if (auto v = opt_number(j, "amplitude", path)) s.amplitude = *v;
  if (auto it = j.find("frequency_hz"); it != j.end()) {
    s.frequency_hz = positive(*it, path + "/frequency_hz");
  }
  if (auto it = j.find("std_dev"); it != j.end()) s.std_dev = positive(*it, path + "/std_dev");
  if (auto v = opt_number(j, "start_time_s", path)) {
    if (*v < 0.0) schema(path + "/start_time_s", "must be non-negative");
    s.start_time_s = *v;
  }
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      schema(path + "/seed", "expected a non-negative integer");
    }
    s.seed = it->get<std::uint64_t>();
  }
  return s;
}

}  // namespace

Json to_json(const sim::SimConfig& c) {
  Json j{{"duration_s", c.duration_s}, {"sample_period_s", c.sample_period_s},
         {"reference", signal_json(c.reference)}, {"use_prefilter", c.use_prefilter}};
  if (c.disturbance) j["disturbance"] = signal_json(*c.disturbance);
  if (c.noise) j["noise"] = signal_json(*c.noise);
  return j;
}

sim::SimConfig sim_config_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, {"duration_s", "sample_period_s", "reference", "disturbance", "noise",
                     "use_prefilter", "controller"}, path);
  sim::SimConfig c;
  c.duration_s = positive(field(j, "duration_s", path), path + "/duration_s");
  c.sample_period_s = positive(field(j, "sample_period_s", path), path + "/sample_period_s");
  c.reference = signal_from_json(field(j, "reference", path), path + "/reference");
  if (auto it = j.find("disturbance"); it != j.end() && !it->is_null()) {
    c.disturbance = signal_from_json(*it, path + "/disturbance");
  }
  if (auto it = j.find("noise"); it != j.end() && !it->is_null()) {
    c.noise = signal_from_json(*it, path + "/noise");
  }
  if (auto it = j.find("use_prefilter"); it != j.end()) {
    if (!it->is_boolean()) schema(path + "/use_prefilter", "expected a boolean");
    c.use_prefilter = it->get<bool>();
  }
  return c;
}

Json to_json(const Session& s) {
  Json controllers = Json::array();
  for (const auto& c : s.controllers) controllers.push_back(to_json(c));
  return {{"format_version", s.format_version},
          {"plant", to_json(s.plant)},
          {"controllers", controllers},
          {"requirements", to_json(s.requirements)},
          {"grid", to_json(s.grid)},
          {"active_controller", s.active_controller}};
}

Session session_from_json(const Json& j) {
  require_object(j, "");
  const long long version = integer(field(j, "format_version", ""), "/format_version");
  if (version != kFormatVersion) {
    throw Error(ErrorCode::VersionUnsupported,
                "format_version " + std::to_string(version) + " is not supported");
  }
  reject_unknown(j, {"format_version", "plant", "controllers", "requirements", "grid",
                     "active_controller"}, "");
  Session s;
  if (auto it = j.find("plant"); it != j.end()) s.plant = plant_from_json(*it, "/plant");
  if (auto it = j.find("controllers"); it != j.end()) {
    if (!it->is_array()) schema("/controllers", "expected an array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      s.controllers.push_back(controller_from_json((*it)[k], "/controllers/" + std::to_string(k)));
    }
  }
  if (auto it = j.find("requirements"); it != j.end()) {
    s.requirements = requirements_from_json(*it, "/requirements");
  }
  if (auto it = j.find("grid"); it != j.end()) s.grid = grid_from_json(*it, "/grid");
  if (auto it = j.find("active_controller"); it != j.end() && !it->is_null()) {
    s.active_controller = text(*it, "/active_controller");
  }
  validate(s);
  return s;
}

std::string save_session(const Session& s) {
  validate(s);
  return to_json(s).dump(2) + "\n";
}

Session load_session(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    schema("", std::string("malformed JSON: ") + e.what());
  }
  return session_from_json(j);
}

void save_session_file(const Session& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << save_session(s);
}

Session load_session_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_session(ss.str());
}

// ---- FRD CSV ----

FrdImport import_frd(std::string_view textv) {
  std::optional<FrdSchema> schema_kind;
  std::vector<double> freqs;
  std::vector<Complex> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= textv.size()) {
    const auto nl = textv.find('\n', pos);
    const std::string_view raw =
        textv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? textv.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split_csv(line);
    if (!schema_kind) {
      const bool re_im_cols = std::find(cols.begin(), cols.end(), "re") != cols.end() ||
                              std::find(cols.begin(), cols.end(), "im") != cols.end();
      const bool polar_cols = std::find(cols.begin(), cols.end(), "mag_db") != cols.end() ||
                              std::find(cols.begin(), cols.end(), "phase_deg") != cols.end();
      if (re_im_cols && polar_cols) {
        throw RowError(ErrorCode::MixedColumnSchemas, line_no,
                       "header mixes re/im and mag_db/phase_deg columns");
      }
      if (cols == std::vector<std::string>{"freq_hz", "re", "im"}) {
        schema_kind = FrdSchema::ReIm;
      } else if (cols == std::vector<std::string>{"freq_hz", "mag_db", "phase_deg"}) {
        schema_kind = FrdSchema::MagPhase;
      } else {
        throw RowError(ErrorCode::MalformedRow, line_no,
                       "header must be freq_hz,re,im or freq_hz,mag_db,phase_deg");
      }
      continue;
    }
    if (cols.size() >= 1 && !cols[0].empty() && std::isalpha(static_cast<unsigned char>(cols[0][0]))) {
      const bool other = (*schema_kind == FrdSchema::ReIm)
                             ? cols == std::vector<std::string>{"freq_hz", "mag_db", "phase_deg"}
                             : cols == std::vector<std::string>{"freq_hz", "re", "im"};
      if (other) {
        throw RowError(ErrorCode::MixedColumnSchemas, line_no, "second header switches column schema");
      }
    }
    if (cols.size() != 3) {
      throw RowError(ErrorCode::MalformedRow, line_no,
                     "expected 3 columns, found " + std::to_string(cols.size()));
    }
    double v[3];
    for (int c = 0; c < 3; ++c) {
      const std::string& s = cols[static_cast<std::size_t>(c)];
      const char* first = s.data();
      const char* last = s.data() + s.size();
      if (!s.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v[c]);
      if (ec != std::errc() || ptr != last || s.empty() || !std::isfinite(v[c])) {
        throw RowError(ErrorCode::MalformedRow, line_no, "column " + std::to_string(c + 1) +
                                                             " is not a finite number: '" + s + "'");
      }
    }
    if (!(v[0] > 0.0)) throw RowError(ErrorCode::MalformedRow, line_no, "frequency must be positive");
    if (!freqs.empty() && !(v[0] > freqs.back())) {
      throw RowError(ErrorCode::NonMonotoneFrequencies, line_no,
                     "frequency " + fmt17(v[0]) + " does not increase");
    }
    freqs.push_back(v[0]);
    if (*schema_kind == FrdSchema::ReIm) {
      values.emplace_back(v[1], v[2]);
    } else {
      values.push_back(std::polar(std::pow(10.0, v[1] / 20.0), v[2] * kDeg2Rad));
    }
  }
  if (!schema_kind) throw RowError(ErrorCode::MalformedRow, line_no, "missing header line");
  if (freqs.size() < 2) throw RowError(ErrorCode::MalformedRow, line_no, "FRD needs at least two rows");
  return {FrdData(std::move(freqs), std::move(values)), *schema_kind};
}

std::string export_frd(const FrdData& frd, FrdSchema schema_kind) {
  std::string out = schema_kind == FrdSchema::ReIm ? "freq_hz,re,im\n" : "freq_hz,mag_db,phase_deg\n";
  for (std::size_t k = 0; k < frd.size(); ++k) {
    const Complex v = frd.values()[k];
    double a = v.real();
    double b = v.imag();
    if (schema_kind == FrdSchema::MagPhase) {
      a = 20.0 * std::log10(std::abs(v));
      b = std::arg(v) / kDeg2Rad;
    }
    out += fmt17(frd.freqs_hz()[k]) + "," + fmt17(a) + "," + fmt17(b) + "\n";
  }
  return out;
}

// ---- controller export ----

Json export_controller(const RationalTF& c, ExportTarget target,
                       std::optional<double> sample_period_s,
                       const std::vector<filters::FilterSpec>& filter_list) {
  Json fl = Json::array();
  for (const auto& f : filter_list) fl.push_back(to_json(f));
  if (target == ExportTarget::ContinuousCoefficients) {
    if (c.is_discrete()) {
      throw Error(ErrorCode::DomainMismatch, "a discrete controller cannot be exported as continuous");
    }
    return {{"domain", "continuous"}, {"variable", "s"}, {"num", c.num().vec()},
            {"den", c.den().vec()}, {"order", c.order()}, {"filters", fl}};
  }
  if (!sample_period_s) {
    if (!c.is_discrete()) throw Error(ErrorCode::InvalidArgument, "discrete export needs a sample period");
    sample_period_s = c.sample_period();
  }
  const RationalTF d = sim::discretize(c, *sample_period_s);
  const std::size_t n = d.den().degree();
  std::vector<double> num(n + 1), den(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    num[i] = d.num()[n - i];
    den[i] = d.den()[n - i];
  }
  return {{"domain", "discrete"}, {"variable", "z^-1"}, {"num", num}, {"den", den},
          {"sample_period_s", *sample_period_s}, {"order", d.order()}, {"filters", fl}};
}

// ---- analysis documents ----

Json to_json(const analysis::MarginReport& r) {
  Json pcs = Json::array();
  for (const auto& pc : r.phase_crossovers) {
    pcs.push_back({{"freq_hz", pc.freq_hz}, {"gain_margin_db", pc.gain_margin_db}});
  }
  auto flag = [](const std::optional<bool>& f) { return f ? Json(*f) : Json(nullptr); };
  return {
      // null gain margin means +infinity (no phase crossover).
      {"gain_margin_db", std::isfinite(r.gain_margin_db) ? Json(r.gain_margin_db) : Json(nullptr)},
      {"gain_margin_infinite", !std::isfinite(r.gain_margin_db)},
      {"gm_freq_hz", optional_json(r.gm_freq_hz)},
      {"phase_margin_deg", optional_json(r.phase_margin_deg)},
      {"pm_freq_hz", optional_json(r.pm_freq_hz)},
      {"modulus_margin", r.modulus_margin},
      {"mm_freq_hz", r.mm_freq_hz},
      {"bandwidth_hz", optional_json(r.bandwidth_hz)},
      {"closed_loop_bandwidth_hz", optional_json(r.closed_loop_bandwidth_hz)},
      {"gain_crossovers_hz", r.gain_crossovers_hz},
      {"phase_crossovers", pcs},
      {"flags",
       {{"gain_margin", flag(r.flags.gain_margin)},
        {"phase_margin", flag(r.flags.phase_margin)},
        {"modulus_margin", flag(r.flags.modulus_margin)},
        {"bandwidth", flag(r.flags.bandwidth)}}},
  };
}

Json to_json(const analysis::PlotSeries& p) {
  Json j{{"subsystem", analysis::subsystem_name(p.subsystem)},
         {"view", analysis::view_name(p.view)},
         {"wrap_phase", p.wrap_phase},
         {"freq_hz", p.freqs_hz}};
  if (p.view == analysis::View::Nyquist) {
    j["re"] = p.re;
    j["im"] = p.im;
  } else {
    j["mag_db"] = p.mag_db;
    j["phase_deg"] = p.phase_deg;
  }
  return j;
}

}  // namespace loopshape::session
