#pragma once

#include <complex>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "loopshape/polynomial.hpp"

namespace loopshape {

using Complex = std::complex<double>;

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double hz_to_rad(double f_hz) { return kTwoPi * f_hz; }
inline double rad_to_hz(double w) { return w / kTwoPi; }

enum class Domain { ContinuousS, DiscreteZ };

/// Real rational function num/den in s, or in z with a sample period.
/// Discrete transfer functions are stored in positive powers of z.
/// No pole/zero cancellation is ever performed.
class RationalTF {
 public:
  /// Continuous constant 1.
  RationalTF() : num_{1.0}, den_{1.0} {}
  RationalTF(Polynomial num, Polynomial den, Domain domain = Domain::ContinuousS,
             std::optional<double> sample_period_s = std::nullopt);

  static RationalTF continuous(Polynomial num, Polynomial den) {
    return RationalTF(std::move(num), std::move(den));
  }
  static RationalTF discrete(Polynomial num, Polynomial den, double sample_period_s) {
    return RationalTF(std::move(num), std::move(den), Domain::DiscreteZ, sample_period_s);
  }
  static RationalTF gain(double k) { return RationalTF(Polynomial{k}, Polynomial{1.0}); }

  const Polynomial& num() const noexcept { return num_; }
  const Polynomial& den() const noexcept { return den_; }
  Domain domain() const noexcept { return domain_; }
  bool is_discrete() const noexcept { return domain_ == Domain::DiscreteZ; }
  std::optional<double> sample_period() const noexcept { return sample_period_; }

  /// max(deg num, deg den); the figure reported as controller order.
  std::size_t order() const noexcept { return std::max(num_.degree(), den_.degree()); }
  std::size_t pole_count() const noexcept { return den_.degree(); }
  bool is_proper() const noexcept { return num_.degree() <= den_.degree(); }
  bool is_constant() const noexcept { return num_.degree() == 0 && den_.degree() == 0; }

  /// Evaluate at a point of the complex plane of the TF's own variable.
  Complex at(Complex point) const noexcept { return num_(point) / den_(point); }
  /// Evaluate on the frequency axis (s = j2pi f, or z = exp(j2pi f T)).
  Complex response(double f_hz) const;

  /// Same function re-tagged into another domain; only valid for constants.
  RationalTF constant_in(Domain domain, std::optional<double> sample_period_s) const;

  RationalTF scaled(double k) const { return RationalTF(num_ * k, den_, domain_, sample_period_); }

  friend bool operator==(const RationalTF&, const RationalTF&) = default;

 private:
  Polynomial num_;
  Polynomial den_;
  Domain domain_ = Domain::ContinuousS;
  std::optional<double> sample_period_;
};

enum class Interconnect { Series, Parallel, Feedback };

/// Series a*b, parallel a+b, feedback a/(1+a*b), as one rational function.
RationalTF tf_compose(const RationalTF& a, const RationalTF& b, Interconnect op);

inline RationalTF series(const RationalTF& a, const RationalTF& b) {
  return tf_compose(a, b, Interconnect::Series);
}
inline RationalTF parallel(const RationalTF& a, const RationalTF& b) {
  return tf_compose(a, b, Interconnect::Parallel);
}
/// Unity (or b) negative feedback around a. A constant b adopts a's domain.
RationalTF feedback(const RationalTF& a, const RationalTF& b = RationalTF{});
RationalTF reciprocal(const RationalTF& a);

/// True when a.num*b.den == b.num*a.den coefficient-wise within rel_tol.
bool equivalent(const RationalTF& a, const RationalTF& b, double rel_tol = 1e-12);

/// Tabulated frequency response of a measured plant.
class FrdData {
 public:
  FrdData(std::vector<double> freqs_hz, std::vector<Complex> values);

  const std::vector<double>& freqs_hz() const noexcept { return freqs_; }
  const std::vector<Complex>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return freqs_.size(); }
  double f_min() const noexcept { return freqs_.front(); }
  double f_max() const noexcept { return freqs_.back(); }

  /// Exact at tabulated points; linear in (log f, Re) and (log f, Im) between.
  Complex interpolate(double f_hz) const;

  friend bool operator==(const FrdData&, const FrdData&) = default;

 private:
  std::vector<double> freqs_;
  std::vector<Complex> values_;
};

using PlantModel = std::variant<RationalTF, FrdData>;

inline bool is_frd(const PlantModel& p) { return std::holds_alternative<FrdData>(p); }

/// Sampled complex response; produced by evaluation, never imported.
struct FreqResponse {
  std::vector<double> freqs_hz;
  std::vector<Complex> values;

  std::size_t size() const noexcept { return freqs_hz.size(); }
};

FreqResponse eval_response(const RationalTF& sys, std::span<const double> freqs_hz);
FreqResponse eval_response(const PlantModel& sys, std::span<const double> freqs_hz);

enum class SensitivityKind { Complementary, Process, Control, Sensitivity };

/// Closed-loop functions of the unity-feedback loop around plant and
/// controller, computed pointwise: PC/(1+PC), P/(1+PC), C/(1+PC), 1/(1+PC).
FreqResponse sensitivity(const PlantModel& plant, const RationalTF& controller,
                         SensitivityKind which, std::span<const double> freqs_hz);

/// Pointwise product of two responses sampled on the same grid.
FreqResponse multiply(const FreqResponse& a, const FreqResponse& b);

}  // namespace loopshape
