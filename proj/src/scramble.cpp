#include "cdqmc/scramble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cdqmc {

std::uint64_t prf::derive(std::uint64_t parent, std::span<const std::uint32_t> coords) noexcept {
  std::uint64_t h = mix(parent ^ 0xa0761d6478bd642fULL) + coords.size();
  for (auto j : coords) h = mix(h ^ mix(static_cast<std::uint64_t>(j) + kGolden));
  return h;
}

PermutationTree::PermutationTree(std::uint64_t seed, FieldBase base, std::uint32_t coordinate)
    : base_(base), coordinate_(coordinate), seed_(seed),
      tree_key_(prf::mix(seed ^ prf::mix(static_cast<std::uint64_t>(coordinate) + prf::kGolden))) {}

PermutationTree PermutationTree::identity(FieldBase base, std::uint32_t coordinate) {
  PermutationTree t(base, coordinate);
  t.identity_ = true;
  return t;
}

PermutationTree PermutationTree::custom(FieldBase base, std::uint32_t coordinate, Override fn) {
  PermutationTree t(base, coordinate);
  t.override_ = std::move(fn);
  return t;
}

void PermutationTree::prf_permutation(int level, std::uint64_t prefix_code,
                                      std::span<Digit> out) const {
  std::iota(out.begin(), out.end(), Digit{0});
  const std::uint64_t key = node_key(level, prefix_code);
  std::uint64_t counter = 0;
  for (std::size_t i = out.size() - 1; i >= 1; --i) {
    const std::uint64_t z = prf::mix(key + (++counter) * prf::kGolden);
    const auto j = static_cast<std::size_t>((static_cast<unsigned __int128>(z) * (i + 1)) >> 64);
    std::swap(out[i], out[j]);
  }
}

void PermutationTree::permutation(std::span<const Digit> prefix, std::span<Digit> out) const {
  if (out.size() != base_.value()) throw std::invalid_argument("permutation buffer must have b entries");
  const int level = static_cast<int>(prefix.size()) + 1;
  if (identity_) {
    std::iota(out.begin(), out.end(), Digit{0});
  } else if (override_) {
    override_(level, prefix, out);
  } else {
    std::uint64_t code = 0;
    for (Digit d : prefix) code = code * base_.value() + d;
    prf_permutation(level, code, out);
  }
}

std::vector<Digit> PermutationTree::permutation(std::span<const Digit> prefix) const {
  std::vector<Digit> out(base_.value());
  permutation(prefix, out);
  return out;
}

Digit PermutationTree::apply(int level, std::uint64_t prefix_code, Digit x) const {
  if (identity_) return x;
  const std::uint32_t b = base_.value();
  if (override_) {
    std::vector<Digit> prefix(static_cast<std::size_t>(level - 1));
    for (int k = level - 2; k >= 0; --k) {
      prefix[static_cast<std::size_t>(k)] = static_cast<Digit>(prefix_code % b);
      prefix_code /= b;
    }
    std::vector<Digit> perm(b);
    override_(level, prefix, perm);
    return perm[x];
  }
  if (b == 2) {
    const std::uint64_t z = prf::mix(node_key(level, prefix_code) + prf::kGolden);
    return (z >> 63) ? x : x ^ 1u;
  }
  std::vector<Digit> perm(b);
  prf_permutation(level, prefix_code, perm);
  return perm[x];
}

int max_precision(FieldBase base) noexcept {
  // prefix codes at the deepest level stay below 2^63
  int p = 1;
  long double v = 1.0L;
  while (v * base.value() < 9.2e18L && p < 64) {
    v *= base.value();
    ++p;
  }
  return p;
}

DigitString owen_scramble(const PermutationTree& tree, const DigitString& x, int precision) {
  if (!(x.base == tree.base())) throw std::invalid_argument("scramble base mismatch");
  if (precision < x.precision())
    throw std::invalid_argument("scrambling precision shorter than the input digits");
  if (precision > max_precision(x.base)) throw std::invalid_argument("scrambling precision too large");
  const std::uint32_t b = x.base.value();
  DigitString y{x.base, std::vector<Digit>(static_cast<std::size_t>(precision), 0)};
  std::uint64_t code = 0;
  for (int k = 1; k <= precision; ++k) {
    const Digit xk = k <= x.precision() ? x.digits[static_cast<std::size_t>(k - 1)] : 0;
    y.digits[static_cast<std::size_t>(k - 1)] = tree.apply(k, code, xk);
    code = code * b + xk;
  }
  return y;
}

DigitString interlace_D(std::span<const DigitString> block) {
  if (block.empty()) throw std::invalid_argument("interlacing an empty block");
  const auto alpha = block.size();
  std::size_t prec = 0;
  for (const auto& x : block) {
    if (!(x.base == block[0].base)) throw std::invalid_argument("interlacing base mismatch");
    prec = std::max(prec, x.digits.size());
  }
  DigitString out{block[0].base, std::vector<Digit>(alpha * prec, 0)};
  for (std::size_t r = 0; r < alpha; ++r)
    for (std::size_t d = 0; d < block[r].digits.size(); ++d) out.digits[r + d * alpha] = block[r].digits[d];
  return out;
}

double to_double(const DigitString& x) {
  if (x.base.value() == 2) {
    std::uint64_t w = 0;
    for (int k = 0; k < 53; ++k) w = (w << 1) | (k < x.precision() ? x.digits[static_cast<std::size_t>(k)] : 0u);
    return static_cast<double>(w) * 0x1.0p-53;
  }
  long double v = 0.0L;
  const long double b = x.base.value();
  for (auto it = x.digits.rbegin(); it != x.digits.rend(); ++it) v = (v + *it) / b;
  const double r = static_cast<double>(v);
  return r < 1.0 ? r : std::nextafter(1.0, 0.0);
}

DigitString ScrambledPointSet::coordinate(Eigen::Index row, Eigen::Index col) const {
  const auto n = static_cast<std::size_t>(digits_per_coordinate);
  const auto offset = static_cast<std::size_t>(row * cols + col) * n;
  return {base, std::vector<Digit>(digits.begin() + static_cast<std::ptrdiff_t>(offset),
                                   digits.begin() + static_cast<std::ptrdiff_t>(offset + n))};
}

Eigen::MatrixXd ScrambledPointSet::real() const {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = to_double(coordinate(i, j));
  return out;
}

namespace {

void check_config(const PointSet& ps, const ScrambleConfig& cfg) {
  if (cfg.alpha < 1) throw std::invalid_argument("interlacing factor must be >= 1");
  if (ps.dimension() % cfg.alpha != 0)
    throw std::invalid_argument("point set dimension " + std::to_string(ps.dimension()) +
                                " is not divisible by alpha = " + std::to_string(cfg.alpha));
  if (cfg.precision < ps.m) throw std::invalid_argument("scrambling precision below m");
  if (cfg.precision > max_precision(ps.base)) throw std::invalid_argument("scrambling precision too large");
}

PermutationTree tree_for(const PointSet& ps, const ScrambleConfig& cfg, int t) {
  return cfg.scramble ? PermutationTree(cfg.seed, ps.base, static_cast<std::uint32_t>(t))
                      : PermutationTree::identity(ps.base, static_cast<std::uint32_t>(t));
}

}  // namespace

ScrambledPointSet interlaced_scrambled_points(const PointSet& ps, const ScrambleConfig& cfg) {
  check_config(ps, cfg);
  const int d = ps.dimension() / cfg.alpha;
  ScrambledPointSet out{ps.base, ps.numerators.rows(), d, cfg.alpha * cfg.precision, {}};
  out.digits.reserve(static_cast<std::size_t>(out.rows * d * out.digits_per_coordinate));
  std::vector<PermutationTree> trees;
  for (int t = 0; t < ps.dimension(); ++t) trees.push_back(tree_for(ps, cfg, t));
  std::vector<DigitString> block;
  for (Eigen::Index i = 0; i < ps.numerators.rows(); ++i) {
    for (int j = 0; j < d; ++j) {
      block.clear();
      for (int r = 0; r < cfg.alpha; ++r) {
        const int t = j * cfg.alpha + r;
        DigitString x{ps.base, ps.digits(i, t)};
        block.push_back(owen_scramble(trees[static_cast<std::size_t>(t)], x, cfg.precision));
      }
      auto merged = interlace_D(block);
      out.digits.insert(out.digits.end(), merged.digits.begin(), merged.digits.end());
    }
  }
  return out;
}

Eigen::MatrixXd interlaced_scrambled_real(const PointSet& ps, const ScrambleConfig& cfg) {
  check_config(ps, cfg);
  if (ps.base.value() != 2) return interlaced_scrambled_points(ps, cfg).real();

  const int alpha = cfg.alpha;
  const int d = ps.dimension() / alpha;
  const int m = ps.m;
  // only the leading 53 interlaced digits reach the double
  const int levels = std::min(cfg.precision, (53 + alpha - 1) / alpha);
  const Eigen::Index n = ps.numerators.rows();
  Eigen::MatrixXd out(n, d);

  std::vector<PermutationTree> trees;
  for (int t = 0; t < ps.dimension(); ++t) trees.push_back(tree_for(ps, cfg, t));
  std::vector<std::uint64_t> words(static_cast<std::size_t>(alpha));

  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int r = 0; r < alpha; ++r) {
        const auto& tree = trees[static_cast<std::size_t>(j * alpha + r)];
        const std::uint64_t x = ps.numerators(i, j * alpha + r);
        std::uint64_t code = 0, word = 0;
        for (int k = 1; k <= levels; ++k) {
          const Digit xk = k <= m ? static_cast<Digit>((x >> (m - k)) & 1u) : 0u;
          word = (word << 1) | tree.apply(k, code, xk);
          code = (code << 1) | xk;
        }
        words[static_cast<std::size_t>(r)] = word << (64 - levels);  // MSB-aligned
      }
      std::uint64_t bits = 0;
      for (int p = 0; p < 53; ++p) {
        const int r = p % alpha, digit = p / alpha;
        const std::uint64_t bit = digit < levels ? (words[static_cast<std::size_t>(r)] >> (63 - digit)) & 1u : 0u;
        bits = (bits << 1) | bit;
      }
      out(i, j) = static_cast<double>(bits) * 0x1.0p-53;
    }
  }
  return out;
}

}  // namespace cdqmc
