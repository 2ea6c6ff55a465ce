#include "cdqmc/gfpoly.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <utility>

namespace cdqmc {

bool is_prime(std::uint32_t n) noexcept {
  if (n < 2) return false;
  for (std::uint32_t d = 2; static_cast<std::uint64_t>(d) * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

FieldBase::FieldBase(std::uint32_t b) : b_(b) {
  if (!is_prime(b))
    throw std::invalid_argument("field base must be prime, got " + std::to_string(b));
}

Digit FieldBase::inv(Digit x) const {
  if (x % b_ == 0) throw std::domain_error("zero has no inverse in F_b");
  // Fermat: x^{b-2}
  std::uint64_t result = 1, base = x % b_;
  for (std::uint32_t e = b_ - 2; e > 0; e >>= 1) {
    if (e & 1u) result = result * base % b_;
    base = base * base % b_;
  }
  return static_cast<Digit>(result);
}

std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / b)
      throw std::overflow_error("b^e does not fit in 64 bits");
    r *= b;
  }
  return r;
}

PolyGF::PolyGF(FieldBase base, std::vector<Digit> coeffs)
    : base_(base), coeffs_(std::move(coeffs)) {
  for (auto& c : coeffs_) c %= base_.value();
  normalize();
}

PolyGF PolyGF::monomial(FieldBase base, int degree, Digit coeff) {
  std::vector<Digit> c(static_cast<std::size_t>(degree) + 1, 0);
  c.back() = coeff;
  return PolyGF(base, std::move(c));
}

void PolyGF::normalize() {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

std::uint64_t PolyGF::to_int() const {
  std::uint64_t r = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    if (r > (std::numeric_limits<std::uint64_t>::max() - *it) / base_.value())
      throw std::overflow_error("polynomial encoding exceeds 64 bits");
    r = r * base_.value() + *it;
  }
  return r;
}

std::string PolyGF::to_string() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int k = degree(); k >= 0; --k) {
    Digit c = coeff(k);
    if (c == 0) continue;
    if (!first) os << " + ";
    first = false;
    if (c != 1 || k == 0) os << c;
    if (k >= 1) os << "x";
    if (k >= 2) os << "^" << k;
  }
  return os.str();
}

namespace {
void require_same_base(const PolyGF& a, const PolyGF& c) {
  if (!(a.base() == c.base())) throw std::invalid_argument("polynomial base mismatch");
}
}  // namespace

PolyGF operator+(const PolyGF& a, const PolyGF& c) {
  require_same_base(a, c);
  std::vector<Digit> r(std::max(a.coeffs_.size(), c.coeffs_.size()), 0);
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = a.base_.add(a.coeff(static_cast<int>(k)), c.coeff(static_cast<int>(k)));
  return PolyGF(a.base_, std::move(r));
}

PolyGF operator-(const PolyGF& a, const PolyGF& c) {
  require_same_base(a, c);
  std::vector<Digit> r(std::max(a.coeffs_.size(), c.coeffs_.size()), 0);
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = a.base_.sub(a.coeff(static_cast<int>(k)), c.coeff(static_cast<int>(k)));
  return PolyGF(a.base_, std::move(r));
}

PolyGF operator*(const PolyGF& a, const PolyGF& c) {
  require_same_base(a, c);
  if (a.is_zero() || c.is_zero()) return PolyGF(a.base_);
  std::vector<Digit> r(a.coeffs_.size() + c.coeffs_.size() - 1, 0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
    if (a.coeffs_[i] == 0) continue;
    for (std::size_t j = 0; j < c.coeffs_.size(); ++j)
      r[i + j] = a.base_.add(r[i + j], a.base_.mul(a.coeffs_[i], c.coeffs_[j]));
  }
  return PolyGF(a.base_, std::move(r));
}

PolyGF PolyGF::scaled(Digit s) const {
  std::vector<Digit> r(coeffs_);
  for (auto& c : r) c = base_.mul(c, s);
  return PolyGF(base_, std::move(r));
}

PolyGF PolyGF::shifted(int k) const {
  if (is_zero()) return *this;
  std::vector<Digit> r(static_cast<std::size_t>(k), 0);
  r.insert(r.end(), coeffs_.begin(), coeffs_.end());
  return PolyGF(base_, std::move(r));
}

PolyDivision divmod(const PolyGF& num, const PolyGF& den) {
  require_same_base(num, den);
  if (den.is_zero()) throw std::domain_error("polynomial division by zero");
  const FieldBase& f = num.base();
  std::vector<Digit> rem = num.coeffs();
  const int dd = den.degree();
  const Digit lead_inv = f.inv(den.leading());
  std::vector<Digit> quot(rem.size() >= den.coeffs().size()
                              ? rem.size() - den.coeffs().size() + 1
                              : 0,
                          0);
  for (int k = static_cast<int>(rem.size()) - 1; k >= dd; --k) {
    Digit c = rem[static_cast<std::size_t>(k)];
    if (c == 0) continue;
    Digit q = f.mul(c, lead_inv);
    quot[static_cast<std::size_t>(k - dd)] = q;
    for (int i = 0; i <= dd; ++i) {
      auto& slot = rem[static_cast<std::size_t>(k - dd + i)];
      slot = f.sub(slot, f.mul(q, den.coeff(i)));
    }
  }
  return {PolyGF(f, std::move(quot)), PolyGF(f, std::move(rem))};
}

PolyGF poly_mod(const PolyGF& a, const PolyGF& p) { return divmod(a, p).remainder; }

PolyGF poly_from_int(std::uint64_t k, FieldBase base) {
  std::vector<Digit> c;
  while (k > 0) {
    c.push_back(static_cast<Digit>(k % base.value()));
    k /= base.value();
  }
  return PolyGF(base, std::move(c));
}

PolyGF poly_mul_mod(const PolyGF& a, const PolyGF& c, const PolyGF& p) {
  require_same_base(a, c);
  require_same_base(a, p);
  if (p.is_zero()) throw std::domain_error("zero modulus");
  return poly_mod(a * c, p);
}

bool is_irreducible(const PolyGF& p) {
  if (p.degree() < 1) throw std::invalid_argument("irreducibility of a constant polynomial");
  const FieldBase& f = p.base();
  const std::uint64_t b = f.value();
  for (int d = 1; 2 * d <= p.degree(); ++d) {
    // monic polynomials of degree d: encodings in [b^d, 2 b^d)
    const std::uint64_t lo = ipow(b, d);
    for (std::uint64_t e = lo; e < 2 * lo; ++e)
      if (poly_mod(p, poly_from_int(e, f)).is_zero()) return false;
  }
  return true;
}

const PolyGF& default_modulus(FieldBase base, int m) {
  if (m < 1) throw std::invalid_argument("modulus degree must be >= 1");
  static std::mutex mu;
  static std::map<std::pair<std::uint32_t, int>, PolyGF> table;
  std::lock_guard lock(mu);
  auto key = std::make_pair(base.value(), m);
  if (auto it = table.find(key); it != table.end()) return it->second;
  const std::uint64_t lo = ipow(base.value(), m);
  for (std::uint64_t e = lo; e < 2 * lo; ++e) {
    PolyGF p = poly_from_int(e, base);
    if (is_irreducible(p)) return table.emplace(key, std::move(p)).first->second;
  }
  throw std::logic_error("no irreducible polynomial found");  // unreachable over a field
}

DigitString laurent_digits(const PolyGF& num, const PolyGF& den, int m) {
  require_same_base(num, den);
  if (den.is_zero()) throw std::domain_error("Laurent division by zero");
  if (m < 0) throw std::invalid_argument("negative precision");
  const FieldBase& f = num.base();
  const int dd = den.degree();
  const Digit lead_inv = f.inv(den.leading());
  // num/den = polynomial part + r/den with deg r < deg den
  std::vector<Digit> r = poly_mod(num, den).coeffs();
  r.resize(static_cast<std::size_t>(dd) + 1, 0);
  DigitString out{f, std::vector<Digit>(static_cast<std::size_t>(m), 0)};
  for (int l = 0; l < m; ++l) {
    // r <- r * x; the coefficient at degree dd yields the next digit
    std::rotate(r.rbegin(), r.rbegin() + 1, r.rend());
    Digit t = f.mul(r[static_cast<std::size_t>(dd)], lead_inv);
    out.digits[static_cast<std::size_t>(l)] = t;
    if (t != 0)
      for (int i = 0; i <= dd; ++i) {
        auto& slot = r[static_cast<std::size_t>(i)];
        slot = f.sub(slot, f.mul(t, den.coeff(i)));
      }
  }
  return out;
}

ExactFraction v_m(const DigitString& d) {
  const std::uint64_t b = d.base.value();
  ExactFraction r{0, ipow(b, d.precision())};
  for (Digit t : d.digits) r.numerator = r.numerator * b + t;
  return r;
}

}  // namespace cdqmc
