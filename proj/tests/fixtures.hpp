#pragma once

#include <filesystem>
#include <string>

#include "loopshape/filters.hpp"
#include "loopshape/session.hpp"

namespace fixtures {

using loopshape::filters::ControllerDef;
using loopshape::filters::FilterKind;
using loopshape::filters::FilterSpec;

inline FilterSpec spec(FilterKind kind, std::map<std::string, double> params) {
  FilterSpec f;
  f.kind = kind;
  f.params = std::move(params);
  return f;
}

/// Integer-order loop-shaping controller of the precision stage.
inline ControllerDef ioc() {
  return {"ioc",
          {spec(FilterKind::Gain, {{"Kp", 0.163}}), spec(FilterKind::PI, {{"f_i", 10.0}}),
           spec(FilterKind::PD, {{"f_d", 33.33}, {"f_t", 300.0}}),
           spec(FilterKind::LowPass, {{"f_cutoff", 1000.0}, {"order", 1.0}})},
          std::nullopt};
}

/// Fractional-order counterpart with CRONE N=3 on both fractional filters.
inline ControllerDef foc() {
  return {"foc",
          {spec(FilterKind::Gain, {{"Kp", 0.0023}}), spec(FilterKind::PI, {{"f_i", 10.0}}),
           spec(FilterKind::FracPD, {{"f_d", 33.33}, {"f_t", 300.0}, {"alpha", 1.1}, {"n_pairs", 3.0}}),
           spec(FilterKind::FracLeadLag,
                {{"f_z", 10000.0}, {"f_p", 1000.0}, {"alpha", 1.8}, {"n_pairs", 3.0}}),
           spec(FilterKind::LowPass, {{"f_cutoff", 10000.0}, {"order", 1.0}})},
          std::nullopt};
}

/// Collocated two-mass stage: a soft suspension near 3 Hz and a stiff
/// internal mode near 1.3 kHz.
inline loopshape::session::ExamplePlantSpec stage_spec() {
  loopshape::session::ExamplePlantSpec s;
  s.kind = loopshape::session::ExampleKind::DoubleMassSpringCollocated;
  s.masses_kg = {0.6, 0.9};
  s.stiffnesses_N_per_m = {533.0, 2.274e7};
  s.dampings_Ns_per_m = {1.13, 286.0};
  s.gain = 1.2e6;
  return s;
}

inline loopshape::RationalTF stage_plant() { return loopshape::session::make_example_plant(stage_spec()); }

inline std::filesystem::path scratch_dir(const std::string& leaf) {
  const char* env = std::getenv("LOOPSHAPE_TEST_TMP");
  auto dir = (env ? std::filesystem::path(env) : std::filesystem::temp_directory_path() / "loopshape_tests") / leaf;
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
