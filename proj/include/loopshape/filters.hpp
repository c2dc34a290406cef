#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loopshape/fracapprox.hpp"
#include "loopshape/transfer_function.hpp"

namespace loopshape::filters {

enum class FilterKind {
  Gain,
  PI,
  PD,
  LeadLag,
  Notch,
  LowPass,
  FracPI,
  FracPD,
  FracLeadLag,
  // s^nu through any approximation method, including the discrete ones.
  FracOperator,
};

std::string_view kind_name(FilterKind kind);
FilterKind parse_kind(std::string_view name);
bool is_fractional(FilterKind kind);

/// One loop-shaping filter. Frequencies in params are in Hz.
struct FilterSpec {
  FilterKind kind = FilterKind::Gain;
  std::map<std::string, double> params;
  frac::Method approx_method = frac::Method::Crone;
  std::optional<std::array<double, 2>> approx_band_hz;

  double get(const std::string& key) const;
  double get_or(const std::string& key, double fallback) const;

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

struct ControllerDef {
  std::string name;
  std::vector<FilterSpec> filters;
  std::optional<RationalTF> prefilter;

  friend bool operator==(const ControllerDef&, const ControllerDef&) = default;
};

constexpr std::size_t kMaxFilters = 32;

/// Parameter names a kind requires, and the optional ones it accepts.
std::vector<std::string_view> required_params(FilterKind kind);
std::vector<std::string_view> optional_params(FilterKind kind);

/// Throws InvalidSpec naming the offending parameter.
void validate(const FilterSpec& spec);

RationalTF realize_filter(const FilterSpec& spec);

struct AssembledController {
  RationalTF tf;
  std::size_t order = 0;
};

/// Series product of the realized filters in list order. Constant factors
/// adopt the domain of the first non-constant one.
AssembledController assemble_controller(const ControllerDef& def);

}  // namespace loopshape::filters
