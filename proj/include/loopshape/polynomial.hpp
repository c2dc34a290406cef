#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <vector>

namespace loopshape {

/// Real polynomial with coefficients stored in ascending degree:
/// coeffs()[k] multiplies x^k. The zero polynomial is stored as [0].
class Polynomial {
 public:
  Polynomial() : c_{0.0} {}
  explicit Polynomial(std::vector<double> ascending);
  Polynomial(std::initializer_list<double> ascending)
      : Polynomial(std::vector<double>(ascending)) {}

  static Polynomial constant(double value) { return Polynomial{value}; }
  /// (x - root) with real root.
  static Polynomial linear_root(double root) { return Polynomial{-root, 1.0}; }
  static Polynomial monomial(double coefficient, std::size_t degree);

  std::size_t degree() const noexcept { return c_.size() - 1; }
  bool is_zero() const noexcept { return c_.size() == 1 && c_[0] == 0.0; }
  std::span<const double> coeffs() const noexcept { return c_; }
  const std::vector<double>& vec() const noexcept { return c_; }
  double operator[](std::size_t k) const noexcept {
    return k < c_.size() ? c_[k] : 0.0;
  }
  double leading() const noexcept { return c_.back(); }

  double operator()(double x) const noexcept;
  std::complex<double> operator()(std::complex<double> x) const noexcept;

  Polynomial operator-() const;
  Polynomial& operator*=(double k);
  friend Polynomial operator*(double k, Polynomial p) { return p *= k; }
  friend Polynomial operator*(Polynomial p, double k) { return p *= k; }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  Polynomial pow(unsigned exponent) const;
  /// Coefficients reversed: x^n p(1/x) with n = degree().
  Polynomial reversed() const;

  /// Roots via the eigenvalues of the companion matrix.
  std::vector<std::complex<double>> roots() const;

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  void trim_exact_zeros();

  std::vector<double> c_;
};

enum class PolyOp { Add, Mul };

/// Add or multiply two polynomials. Additive cancellation in the leading
/// terms is trimmed when a result coefficient falls below 1e-14 of the
/// operand coefficients contributing to it.
Polynomial poly_arith(const Polynomial& a, const Polynomial& b, PolyOp op);

}  // namespace loopshape
