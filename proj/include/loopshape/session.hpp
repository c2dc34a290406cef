#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "loopshape/analysis.hpp"
#include "loopshape/filters.hpp"
#include "loopshape/timesim.hpp"
#include "loopshape/transfer_function.hpp"

namespace loopshape::session {

using Json = nlohmann::json;

constexpr int kFormatVersion = 1;

enum class ExampleKind { MassSpringDamper, DoubleMassSpring, DoubleMassSpringCollocated };

std::string_view example_kind_name(ExampleKind kind);

/// Two-mass chain: stiffness and damping lists hold either the coupling
/// element only (free-free) or [ground, coupling].
struct ExamplePlantSpec {
  ExampleKind kind = ExampleKind::MassSpringDamper;
  std::vector<double> masses_kg;
  std::vector<double> stiffnesses_N_per_m;
  std::vector<double> dampings_Ns_per_m;
  double gain = 1.0;

  friend bool operator==(const ExamplePlantSpec&, const ExamplePlantSpec&) = default;
};

void validate(const ExamplePlantSpec& spec);
/// Force-to-position transfer function; the collocated variant measures the
/// driven mass.
RationalTF make_example_plant(const ExamplePlantSpec& spec);

enum class FrdSchema { ReIm, MagPhase };

struct FrdSource {
  FrdData data;
  FrdSchema schema = FrdSchema::ReIm;
  std::string file;

  friend bool operator==(const FrdSource&, const FrdSource&) = default;
};

using PlantSource = std::variant<std::monostate, RationalTF, FrdSource, ExamplePlantSpec>;

bool has_plant(const PlantSource& src);
/// Throws InvalidArgument for an empty source.
PlantModel resolve_plant(const PlantSource& src);

struct Session {
  int format_version = kFormatVersion;
  PlantSource plant;
  std::vector<filters::ControllerDef> controllers;
  analysis::Requirements requirements;
  analysis::FreqGrid grid;
  std::string active_controller;

  const filters::ControllerDef* find_controller(std::string_view name) const;
  filters::ControllerDef* find_controller(std::string_view name);

  friend bool operator==(const Session&, const Session&) = default;
};

/// Structural checks: unique names, active controller exists, grid and
/// requirements valid. Throws SchemaError with a field path.
void validate(const Session& s);

std::string save_session(const Session& s);
Session load_session(std::string_view text);
void save_session_file(const Session& s, const std::string& path);
Session load_session_file(const std::string& path);

struct FrdImport {
  FrdData data;
  FrdSchema schema;
};

/// CSV with a header line `freq_hz,re,im` or `freq_hz,mag_db,phase_deg`;
/// lines starting with '#' are comments.
FrdImport import_frd(std::string_view text);
std::string export_frd(const FrdData& frd, FrdSchema schema);

enum class ExportTarget { ContinuousCoefficients, DiscreteCoefficients };

/// Coefficient document. Continuous num/den ascend in s; discrete ones
/// ascend in z^-1 and are padded to the same length.
Json export_controller(const RationalTF& c, ExportTarget target,
                       std::optional<double> sample_period_s,
                       const std::vector<filters::FilterSpec>& filters = {});

// JSON mapping shared by the service and the CLI. Parsers throw SchemaError
// with `path` prefixed to the offending field.
Json to_json(const RationalTF& tf);
RationalTF tf_from_json(const Json& j, const std::string& path);
Json to_json(const filters::FilterSpec& f);
filters::FilterSpec filter_from_json(const Json& j, const std::string& path);
Json to_json(const filters::ControllerDef& c);
filters::ControllerDef controller_from_json(const Json& j, const std::string& path);
Json to_json(const analysis::Requirements& r);
analysis::Requirements requirements_from_json(const Json& j, const std::string& path);
Json to_json(const analysis::FreqGrid& g);
analysis::FreqGrid grid_from_json(const Json& j, const std::string& path);
Json to_json(const PlantSource& p);
PlantSource plant_from_json(const Json& j, const std::string& path);
Json to_json(const sim::SimConfig& c);
sim::SimConfig sim_config_from_json(const Json& j, const std::string& path);
Json to_json(const Session& s);
Session session_from_json(const Json& j);

Json to_json(const analysis::MarginReport& r);
Json to_json(const analysis::PlotSeries& p);

}  // namespace loopshape::session
