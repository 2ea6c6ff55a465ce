#pragma once

// Polynomials over the prime field F_b and truncated formal Laurent series
// division, the arithmetic underneath polynomial lattice point sets.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdqmc {

using Digit = std::uint32_t;

/// Prime field base b. Primality is checked on construction.
class FieldBase {
 public:
  explicit FieldBase(std::uint32_t b);

  std::uint32_t value() const noexcept { return b_; }
  Digit add(Digit x, Digit y) const noexcept { return (x + y) % b_; }
  Digit sub(Digit x, Digit y) const noexcept { return (x + b_ - y) % b_; }
  Digit mul(Digit x, Digit y) const noexcept {
    return static_cast<Digit>((std::uint64_t{x} * y) % b_);
  }
  Digit inv(Digit x) const;

  friend bool operator==(const FieldBase&, const FieldBase&) = default;

 private:
  std::uint32_t b_;
};

bool is_prime(std::uint32_t n) noexcept;

/// Polynomial over F_b with coefficients stored lowest degree first.
/// The zero polynomial has no coefficients; otherwise the leading
/// coefficient is nonzero.
class PolyGF {
 public:
  explicit PolyGF(FieldBase base) : base_(base) {}
  PolyGF(FieldBase base, std::vector<Digit> coeffs);

  static PolyGF monomial(FieldBase base, int degree, Digit coeff = 1);

  const FieldBase& base() const noexcept { return base_; }
  const std::vector<Digit>& coeffs() const noexcept { return coeffs_; }
  /// -1 for the zero polynomial.
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  Digit coeff(int k) const noexcept {
    return k >= 0 && k <= degree() ? coeffs_[static_cast<std::size_t>(k)] : 0;
  }
  Digit leading() const noexcept { return is_zero() ? 0 : coeffs_.back(); }

  /// Integer encoding sum_k c_k b^k, the inverse of poly_from_int.
  std::uint64_t to_int() const;
  std::string to_string() const;

  friend PolyGF operator+(const PolyGF& a, const PolyGF& c);
  friend PolyGF operator-(const PolyGF& a, const PolyGF& c);
  friend PolyGF operator*(const PolyGF& a, const PolyGF& c);
  friend bool operator==(const PolyGF& a, const PolyGF& c) {
    return a.base_ == c.base_ && a.coeffs_ == c.coeffs_;
  }

  PolyGF scaled(Digit s) const;
  PolyGF shifted(int k) const;  ///< multiply by x^k, k >= 0

 private:
  void normalize();

  FieldBase base_;
  std::vector<Digit> coeffs_;
};

struct PolyDivision {
  PolyGF quotient;
  PolyGF remainder;
};

PolyDivision divmod(const PolyGF& num, const PolyGF& den);
PolyGF poly_mod(const PolyGF& a, const PolyGF& p);

/// Polynomial whose coefficients are the base-b digits of k.
PolyGF poly_from_int(std::uint64_t k, FieldBase base);

/// (a * c) mod p. Throws on base mismatch or zero modulus.
PolyGF poly_mul_mod(const PolyGF& a, const PolyGF& c, const PolyGF& p);

/// Exhaustive trial division by every monic polynomial of degree <= deg(p)/2.
bool is_irreducible(const PolyGF& p);

/// Smallest-encoding monic irreducible polynomial of degree m over F_b.
/// Computed once per (b, m) and cached.
const PolyGF& default_modulus(FieldBase base, int m);

/// Digits t_1..t_m of a truncated Laurent expansion sum_l t_l x^{-l}.
struct DigitString {
  FieldBase base;
  std::vector<Digit> digits;

  int precision() const noexcept { return static_cast<int>(digits.size()); }
};

/// Fixed-point value numerator / b^m, exact.
struct ExactFraction {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;

  double to_double() const noexcept {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  friend bool operator==(const ExactFraction&, const ExactFraction&) = default;
};

/// t_1..t_m of num/den by formal long division. Terms with nonnegative
/// powers of x are discarded.
DigitString laurent_digits(const PolyGF& num, const PolyGF& den, int m);

/// sum_{l=1}^m t_l b^{-l} as numerator over b^m.
ExactFraction v_m(const DigitString& d);

/// b^e as an integer; throws if it does not fit in 64 bits.
std::uint64_t ipow(std::uint64_t b, int e);

}  // namespace cdqmc
