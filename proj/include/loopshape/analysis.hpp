#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "loopshape/transfer_function.hpp"

namespace loopshape::analysis {

struct FreqGrid {
  double f_min_hz = 0.01;
  double f_max_hz = 1000.0;
  int points_per_decade = 100;

  friend bool operator==(const FreqGrid&, const FreqGrid&) = default;
};

void validate(const FreqGrid& grid);

/// Log-spaced frequencies, endpoints included exactly.
std::vector<double> grid_points(const FreqGrid& grid);

/// For FRD plants the grid is narrowed to the tabulated range.
FreqGrid clamp_to_plant(const FreqGrid& grid, const PlantModel& plant);

struct Requirements {
  std::optional<double> min_gm_db;
  std::optional<double> min_pm_deg;
  std::optional<double> min_mm;
  std::optional<std::array<double, 2>> bw_range_hz;

  friend bool operator==(const Requirements&, const Requirements&) = default;
};

void validate(const Requirements& reqs);

struct PhaseCrossing {
  double freq_hz = 0.0;
  double gain_margin_db = 0.0;
};

/// Pass/fail per metric; empty when no requirement is set.
struct MarginFlags {
  std::optional<bool> gain_margin;
  std::optional<bool> phase_margin;
  std::optional<bool> modulus_margin;
  std::optional<bool> bandwidth;
};

struct MarginReport {
  double gain_margin_db = 0.0;  // +infinity without a phase crossover
  std::optional<double> gm_freq_hz;
  std::optional<double> phase_margin_deg;
  std::optional<double> pm_freq_hz;
  double modulus_margin = 0.0;
  double mm_freq_hz = 0.0;
  std::optional<double> bandwidth_hz;
  /// Closed-loop -3 dB frequency, informational.
  std::optional<double> closed_loop_bandwidth_hz;
  std::vector<double> gain_crossovers_hz;
  std::vector<PhaseCrossing> phase_crossovers;
  MarginFlags flags;
};

FreqResponse open_loop(const PlantModel& plant, const RationalTF& controller,
                       const FreqGrid& grid);

/// Loop response at any frequency inside the sampled range.
using LoopEvaluator = std::function<Complex(double f_hz)>;

/// Crossings are bracketed on the samples and refined by bisection to 1e-6
/// relative frequency, on `exact` when given and otherwise on the
/// log-frequency interpolant of the samples.
MarginReport margins(const FreqResponse& loop, const Requirements& reqs,
                     const LoopEvaluator& exact = {});

/// margins() of C*P with the exact (or FRD-interpolated) loop as refiner.
MarginReport loop_margins(const PlantModel& plant, const RationalTF& controller,
                          const FreqGrid& grid, const Requirements& reqs);

MarginFlags evaluate_requirements(const MarginReport& report, const Requirements& reqs);

/// Degrees, continuous across samples (no jump above 180 between neighbours).
std::vector<double> unwrap_phase_deg(const std::vector<Complex>& values);
/// Wrap into (-180, 180].
double wrap_deg(double deg);

enum class Subsystem {
  Plant,
  Controller,
  OpenLoop,
  ClosedLoop,
  Sensitivity,
  ProcessSensitivity,
  ControlSensitivity,
};
enum class View { Bode, Nyquist, Nichols };

std::string_view subsystem_name(Subsystem s);
Subsystem parse_subsystem(std::string_view name);
std::string_view view_name(View v);
View parse_view(std::string_view name);

FreqResponse subsystem_response(const PlantModel& plant, const RationalTF& controller,
                                Subsystem which, const std::vector<double>& freqs_hz);

/// Plot series: Bode fills mag_db/phase_deg, Nyquist re/im, Nichols
/// phase_deg/mag_db. Frequencies ascending in Hz.
struct PlotSeries {
  Subsystem subsystem = Subsystem::OpenLoop;
  View view = View::Bode;
  bool wrap_phase = false;
  std::vector<double> freqs_hz;
  std::vector<double> mag_db;
  std::vector<double> phase_deg;
  std::vector<double> re;
  std::vector<double> im;
};

PlotSeries plot_data(const PlantModel& plant, const RationalTF& controller, Subsystem which,
                     View view, const FreqGrid& grid, bool wrap_phase);

}  // namespace loopshape::analysis
