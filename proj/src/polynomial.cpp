#include "loopshape/polynomial.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "loopshape/error.hpp"

namespace loopshape {

namespace {

constexpr double kTrimRelative = 1e-14;

// Sum of two coefficient vectors where sign is +1 or -1 for b. Highest-degree
// coefficients that are pure cancellation noise are dropped.
Polynomial add_signed(const Polynomial& a, const Polynomial& b, double sign) {
  const std::size_t n = std::max(a.vec().size(), b.vec().size());
  std::vector<double> out(n);
  std::vector<double> scale(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = a[k] + sign * b[k];
    scale[k] = std::abs(a[k]) + std::abs(b[k]);
  }
  while (out.size() > 1 &&
         std::abs(out.back()) <= kTrimRelative * scale[out.size() - 1]) {
    out.pop_back();
  }
  if (out.size() == 1 && std::abs(out[0]) <= kTrimRelative * scale[0]) {
    out[0] = 0.0;
  }
  return Polynomial(std::move(out));
}

}  // namespace

Polynomial::Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) {
  if (c_.empty()) c_.push_back(0.0);
  for (double v : c_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "polynomial coefficient is not finite");
    }
  }
  trim_exact_zeros();
}

Polynomial Polynomial::monomial(double coefficient, std::size_t degree) {
  std::vector<double> c(degree + 1, 0.0);
  c[degree] = coefficient;
  return Polynomial(std::move(c));
}

void Polynomial::trim_exact_zeros() {
  while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
  // -0.0 and 0.0 compare equal; normalize so defaulted == is structural.
  if (c_.size() == 1 && c_[0] == 0.0) c_[0] = 0.0;
}

double Polynomial::operator()(double x) const noexcept {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::complex<double> Polynomial::operator()(std::complex<double> x) const noexcept {
  std::complex<double> acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::operator-() const {
  Polynomial p = *this;
  for (double& v : p.c_) v = -v;
  p.trim_exact_zeros();
  return p;
}

Polynomial& Polynomial::operator*=(double k) {
  if (!std::isfinite(k)) {
    throw Error(ErrorCode::InvalidArgument, "polynomial scale factor is not finite");
  }
  for (double& v : c_) v *= k;
  trim_exact_zeros();
  if (k == 0.0) c_.assign(1, 0.0);
  return *this;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  return add_signed(a, b, 1.0);
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
  return add_signed(a, b, -1.0);
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return Polynomial{};
  std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c_.size(); ++i) {
    for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
  }
  return Polynomial(std::move(out));
}

Polynomial Polynomial::pow(unsigned exponent) const {
  Polynomial result{1.0};
  Polynomial base = *this;
  while (exponent > 0) {
    if (exponent & 1u) result = result * base;
    exponent >>= 1u;
    if (exponent > 0) base = base * base;
  }
  return result;
}

Polynomial Polynomial::reversed() const {
  std::vector<double> r(c_.rbegin(), c_.rend());
  return Polynomial(std::move(r));
}

namespace {

// Diagonal similarity scaling by powers of two so that row and column norms
// agree (Parlett-Reinsch); leaves eigenvalues unchanged.
void balance(Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  bool converged = false;
  while (!converged) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(m(j, i));
        r += std::abs(m(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double f = 1.0;
      const double sum = c + r;
      while (c < r / 2.0) {
        c *= 2.0;
        r /= 2.0;
        f *= 2.0;
      }
      while (c >= r * 2.0) {
        c /= 2.0;
        r *= 2.0;
        f /= 2.0;
      }
      if ((c + r) < 0.95 * sum) {
        converged = false;
        m.row(i) /= f;
        m.col(i) *= f;
      }
    }
  }
}

}  // namespace

std::vector<std::complex<double>> Polynomial::roots() const {
  std::vector<std::complex<double>> out;
  if (is_zero()) return out;
  // Zeros at the origin are exact; peel them off before the eigen solve.
  std::size_t lead_zeros = 0;
  while (lead_zeros < c_.size() - 1 && c_[lead_zeros] == 0.0) ++lead_zeros;
  out.assign(lead_zeros, {0.0, 0.0});
  const std::size_t n = c_.size() - 1 - lead_zeros;
  if (n == 0) return out;
  // Substitute x = sigma*y so the end coefficients match in magnitude.
  const double sigma = std::pow(std::abs(c_[lead_zeros] / c_.back()), 1.0 / static_cast<double>(n));
  std::vector<double> a(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    a[k] = c_[lead_zeros + k] * std::pow(sigma, static_cast<double>(k));
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k) companion(0, n - 1 - k) = -a[k] / a[n];
  for (std::size_t k = 1; k < n; ++k) companion(k, k - 1) = 1.0;
  balance(companion);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const auto& ev = solver.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) out.push_back(ev[k] * sigma);
  return out;
}

Polynomial poly_arith(const Polynomial& a, const Polynomial& b, PolyOp op) {
  return op == PolyOp::Add ? a + b : a * b;
}

}  // namespace loopshape
