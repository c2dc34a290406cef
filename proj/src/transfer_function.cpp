#include "loopshape/transfer_function.hpp"

#include <algorithm>
#include <cmath>

#include "loopshape/error.hpp"

namespace loopshape {

RationalTF::RationalTF(Polynomial num, Polynomial den, Domain domain,
                       std::optional<double> sample_period_s)
    : num_(std::move(num)), den_(std::move(den)), domain_(domain),
      sample_period_(sample_period_s) {
  if (den_.is_zero()) {
    throw Error(ErrorCode::InvalidArgument, "transfer function denominator is zero");
  }
  if (domain_ == Domain::DiscreteZ) {
    if (!sample_period_ || !(*sample_period_ > 0.0) || !std::isfinite(*sample_period_)) {
      throw Error(ErrorCode::InvalidArgument,
                  "discrete transfer function needs a positive sample period");
    }
  } else if (sample_period_) {
    throw Error(ErrorCode::InvalidArgument,
                "continuous transfer function cannot carry a sample period");
  }
}

Complex RationalTF::response(double f_hz) const {
  if (domain_ == Domain::ContinuousS) return at(Complex(0.0, hz_to_rad(f_hz)));
  const double T = *sample_period_;
  if (!(f_hz < 0.5 / T)) {
    throw Error(ErrorCode::AboveNyquist,
                "frequency " + std::to_string(f_hz) + " Hz is not below the Nyquist frequency " +
                    std::to_string(0.5 / T) + " Hz");
  }
  return at(std::polar(1.0, hz_to_rad(f_hz) * T));
}

RationalTF RationalTF::constant_in(Domain domain, std::optional<double> sample_period_s) const {
  if (domain == domain_ && sample_period_s == sample_period_) return *this;
  if (!is_constant()) {
    throw Error(ErrorCode::DomainMismatch, "only constant transfer functions change domain");
  }
  return RationalTF(num_, den_, domain, domain == Domain::DiscreteZ ? sample_period_s
                                                                     : std::nullopt);
}

namespace {

void require_same_domain(const RationalTF& a, const RationalTF& b) {
  if (a.domain() != b.domain()) {
    throw Error(ErrorCode::DomainMismatch, "cannot combine continuous and discrete systems");
  }
  if (a.is_discrete() && *a.sample_period() != *b.sample_period()) {
    throw Error(ErrorCode::DomainMismatch, "discrete systems have different sample periods");
  }
}

}  // namespace

RationalTF tf_compose(const RationalTF& a, const RationalTF& b, Interconnect op) {
  require_same_domain(a, b);
  switch (op) {
    case Interconnect::Series:
      return RationalTF(a.num() * b.num(), a.den() * b.den(), a.domain(), a.sample_period());
    case Interconnect::Parallel:
      return RationalTF(a.num() * b.den() + b.num() * a.den(), a.den() * b.den(), a.domain(),
                        a.sample_period());
    case Interconnect::Feedback:
      return RationalTF(a.num() * b.den(), a.den() * b.den() + a.num() * b.num(), a.domain(),
                        a.sample_period());
  }
  return a;
}

RationalTF feedback(const RationalTF& a, const RationalTF& b) {
  const RationalTF loop_b = b.is_constant() ? b.constant_in(a.domain(), a.sample_period()) : b;
  return tf_compose(a, loop_b, Interconnect::Feedback);
}

RationalTF reciprocal(const RationalTF& a) {
  if (a.num().is_zero()) {
    throw Error(ErrorCode::InvalidArgument, "reciprocal of the zero transfer function");
  }
  return RationalTF(a.den(), a.num(), a.domain(), a.sample_period());
}

bool equivalent(const RationalTF& a, const RationalTF& b, double rel_tol) {
  if (a.domain() != b.domain() || a.sample_period() != b.sample_period()) return false;
  const Polynomial lhs = a.num() * b.den();
  const Polynomial rhs = b.num() * a.den();
  double scale = 0.0;
  for (double v : lhs.coeffs()) scale = std::max(scale, std::abs(v));
  for (double v : rhs.coeffs()) scale = std::max(scale, std::abs(v));
  const std::size_t n = std::max(lhs.vec().size(), rhs.vec().size());
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(lhs[k] - rhs[k]) > rel_tol * scale) return false;
  }
  return true;
}

FrdData::FrdData(std::vector<double> freqs_hz, std::vector<Complex> values)
    : freqs_(std::move(freqs_hz)), values_(std::move(values)) {
  if (freqs_.size() != values_.size()) {
    throw Error(ErrorCode::InvalidArgument, "FRD frequency and value counts differ");
  }
  if (freqs_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "FRD needs at least two points");
  }
  for (std::size_t k = 0; k < freqs_.size(); ++k) {
    if (!std::isfinite(freqs_[k]) || !(freqs_[k] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "FRD frequencies must be positive and finite");
    }
    if (k > 0 && !(freqs_[k] > freqs_[k - 1])) {
      throw Error(ErrorCode::NonMonotoneFrequencies,
                  "FRD frequencies must be strictly increasing");
    }
    if (!std::isfinite(values_[k].real()) || !std::isfinite(values_[k].imag())) {
      throw Error(ErrorCode::InvalidArgument, "FRD values must be finite");
    }
  }
}

Complex FrdData::interpolate(double f_hz) const {
  if (!(f_hz >= freqs_.front() && f_hz <= freqs_.back())) {
    throw Error(ErrorCode::OutsideFrdRange, "frequency " + std::to_string(f_hz) +
                                                " Hz lies outside the FRD range");
  }
  auto it = std::lower_bound(freqs_.begin(), freqs_.end(), f_hz);
  const auto hi = static_cast<std::size_t>(it - freqs_.begin());
  if (freqs_[hi] == f_hz) return values_[hi];
  const std::size_t lo = hi - 1;
  const double t = std::log(f_hz / freqs_[lo]) / std::log(freqs_[hi] / freqs_[lo]);
  const Complex& a = values_[lo];
  const Complex& b = values_[hi];
  return {a.real() + t * (b.real() - a.real()), a.imag() + t * (b.imag() - a.imag())};
}

FreqResponse eval_response(const RationalTF& sys, std::span<const double> freqs_hz) {
  FreqResponse out;
  out.freqs_hz.assign(freqs_hz.begin(), freqs_hz.end());
  out.values.reserve(freqs_hz.size());
  for (double f : freqs_hz) out.values.push_back(sys.response(f));
  return out;
}

FreqResponse eval_response(const PlantModel& sys, std::span<const double> freqs_hz) {
  if (const auto* tf = std::get_if<RationalTF>(&sys)) return eval_response(*tf, freqs_hz);
  const auto& frd = std::get<FrdData>(sys);
  FreqResponse out;
  out.freqs_hz.assign(freqs_hz.begin(), freqs_hz.end());
  out.values.reserve(freqs_hz.size());
  for (double f : freqs_hz) out.values.push_back(frd.interpolate(f));
  return out;
}

FreqResponse sensitivity(const PlantModel& plant, const RationalTF& controller,
                         SensitivityKind which, std::span<const double> freqs_hz) {
  const FreqResponse p = eval_response(plant, freqs_hz);
  const FreqResponse c = eval_response(controller, freqs_hz);
  FreqResponse out;
  out.freqs_hz = p.freqs_hz;
  out.values.resize(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Complex loop = p.values[k] * c.values[k];
    const Complex one_plus = 1.0 + loop;
    switch (which) {
      case SensitivityKind::Complementary: out.values[k] = loop / one_plus; break;
      case SensitivityKind::Process: out.values[k] = p.values[k] / one_plus; break;
      case SensitivityKind::Control: out.values[k] = c.values[k] / one_plus; break;
      case SensitivityKind::Sensitivity: out.values[k] = 1.0 / one_plus; break;
    }
  }
  return out;
}

FreqResponse multiply(const FreqResponse& a, const FreqResponse& b) {
  if (a.freqs_hz != b.freqs_hz) {
    throw Error(ErrorCode::InvalidArgument, "responses are sampled on different grids");
  }
  FreqResponse out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] *= b.values[k];
  return out;
}

}  // namespace loopshape
