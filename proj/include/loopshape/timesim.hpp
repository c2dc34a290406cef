#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loopshape/transfer_function.hpp"

namespace loopshape::sim {

enum class Shape { Step, Sine, Sawtooth, Gaussian };
enum class SignalRole { Reference, Disturbance, Noise };

std::string_view shape_name(Shape s);
Shape parse_shape(std::string_view name);

struct SignalSpec {
  Shape shape = Shape::Step;
  double amplitude = 1.0;
  double frequency_hz = 1.0;  // Sine, Sawtooth
  double std_dev = 1.0;       // Gaussian
  std::optional<std::uint64_t> seed;
  double start_time_s = 0.0;

  friend bool operator==(const SignalSpec&, const SignalSpec&) = default;
};

/// Shapes allowed per role: reference step/sine/sawtooth, disturbance
/// step/sine/gaussian, noise sine/gaussian.
void validate(const SignalSpec& spec, SignalRole role);

/// Samples of the signal at the given times. Gaussian draws one normal
/// variate per sample from start_time_s on, seeded by spec.seed.
std::vector<double> generate(const SignalSpec& spec, const std::vector<double>& time_s);

struct SimConfig {
  double duration_s = 1.0;
  double sample_period_s = 1e-3;
  SignalSpec reference;
  std::optional<SignalSpec> disturbance;
  std::optional<SignalSpec> noise;
  bool use_prefilter = false;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

constexpr double kMaxSamples = 1e7;
constexpr double kDivergenceLimit = 1e9;

struct SimResult {
  std::vector<double> time_s;
  std::vector<double> reference;
  std::vector<double> output;
  std::vector<double> control_effort;
  std::optional<std::vector<double>> output_no_prefilter;
  bool diverged = false;
  std::optional<std::size_t> truncation_index;
  std::optional<std::uint64_t> disturbance_seed;
  std::optional<std::uint64_t> noise_seed;
  std::vector<std::string> warnings;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// Bilinear substitution s = (2/T)(z-1)/(z+1). A discrete input with the
/// same period is returned unchanged.
RationalTF discretize(const RationalTF& tf, double sample_period_s);

/// Direct form II transposed realization of a causal discrete TF.
class DifferenceEquation {
 public:
  explicit DifferenceEquation(const RationalTF& discrete_tf);
  double step(double x);
  void reset();

 private:
  std::vector<double> b_;
  std::vector<double> a_;
  std::vector<double> state_;
};

/// Bilinear image of a system as a gain and a cascade of first- and
/// second-order sections built from its poles and zeros. Each complex pair
/// stays in one section, so high-order paths with poles crowding z = 1 keep
/// their accuracy.
class SectionCascade {
 public:
  SectionCascade(const RationalTF& tf, double sample_period_s);
  double step(double x);
  void reset();
  std::size_t size() const noexcept { return sections_.size(); }
  /// Product of the sections as one discrete transfer function.
  RationalTF combined() const;

 private:
  double gain_ = 1.0;
  double sample_period_ = 0.0;
  std::vector<RationalTF> tfs_;
  std::vector<DifferenceEquation> sections_;
};

/// Unity-feedback loop with e = F r - (y + n), u = C e, y = P (u + d).
/// Each closed-loop path is discretized on its own.
SimResult simulate(const PlantModel& plant, const RationalTF& controller,
                   const std::optional<RationalTF>& prefilter, const SimConfig& cfg);

/// Header t,r,y,u[,y_nopf]; every value with 17 significant digits.
std::string to_csv(const SimResult& result);

}  // namespace loopshape::sim
