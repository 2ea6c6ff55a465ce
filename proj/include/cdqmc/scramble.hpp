#pragma once

// Owen's nested uniform scrambling realized by seeded lazy permutation
// trees, and the digit interlacing map D_alpha.
//
// PRF construction (stable across versions, dumps depend on it):
//   mix(z)        splitmix64 finalizer (a bijection on 64-bit words)
//   tree_key      = mix(seed ^ mix(coordinate + 0x9e3779b97f4a7c15))
//   node_key      = mix(mix(tree_key + level) ^ prefix_code)
//   prefix_code   = integer with base-b digits x_1..x_{level-1}, x_1 most significant
//   stream        z_i = mix(node_key + i * 0x9e3779b97f4a7c15), i = 1, 2, ...
//   permutation   Fisher-Yates on (0..b-1): for i = b-1 .. 1,
//                 j = (z * (i + 1)) >> 64 with the next stream word z, swap(i, j)

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cdqmc/gfpoly.hpp"
#include "cdqmc/lattice.hpp"

namespace cdqmc {

namespace prf {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for `stream` under `parent`.
constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t stream) noexcept {
  return mix(mix(parent ^ kGolden) + mix(stream + 0x632be59bd9b4e019ULL));
}

/// Child seed keyed by a coordinate set (order-sensitive fold).
std::uint64_t derive(std::uint64_t parent, std::span<const std::uint32_t> coords) noexcept;

/// Uniform double in [0,1) from a 64-bit word.
inline double to_unit(std::uint64_t z) noexcept {
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace prf

/// Nested permutations pi_{j, x_1..x_{k-1}} of one coordinate j. Each
/// permutation is a pure function of (seed, j, prefix).
class PermutationTree {
 public:
  using Override =
      std::function<void(int level, std::span<const Digit> prefix, std::span<Digit> perm)>;

  PermutationTree(std::uint64_t seed, FieldBase base, std::uint32_t coordinate);

  static PermutationTree identity(FieldBase base, std::uint32_t coordinate);
  /// Tree whose permutations are supplied by `fn`; for tests.
  static PermutationTree custom(FieldBase base, std::uint32_t coordinate, Override fn);

  const FieldBase& base() const noexcept { return base_; }
  std::uint32_t coordinate() const noexcept { return coordinate_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Permutation at `level` (= prefix.size() + 1) for the given prefix.
  void permutation(std::span<const Digit> prefix, std::span<Digit> out) const;
  std::vector<Digit> permutation(std::span<const Digit> prefix) const;

  /// pi_{prefix}(x) with the prefix given as its integer code.
  Digit apply(int level, std::uint64_t prefix_code, Digit x) const;

  bool is_prf() const noexcept { return !identity_ && !override_; }

 private:
  PermutationTree(FieldBase base, std::uint32_t coordinate) : base_(base), coordinate_(coordinate) {}

  std::uint64_t node_key(int level, std::uint64_t prefix_code) const noexcept {
    return prf::mix(prf::mix(tree_key_ + static_cast<std::uint64_t>(level)) ^ prefix_code);
  }
  void prf_permutation(int level, std::uint64_t prefix_code, std::span<Digit> out) const;

  FieldBase base_;
  std::uint32_t coordinate_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t tree_key_ = 0;
  bool identity_ = false;
  Override override_;
};

/// Largest scrambling precision whose prefix codes fit in 64 bits.
int max_precision(FieldBase base) noexcept;

struct ScrambleConfig {
  int precision = 32;  ///< digits kept per underlying coordinate, >= m
  int alpha = 1;       ///< interlacing factor
  std::uint64_t seed = 0;
  bool scramble = true;  ///< false: identity permutations
};

/// Digit k of the result is pi_{x_1..x_{k-1}}(x_k) for k = 1..precision;
/// x is zero-padded to `precision` digits.
DigitString owen_scramble(const PermutationTree& tree, const DigitString& x, int precision);

/// Output digit r + (d-1) alpha equals digit d of input r. Inputs shorter
/// than the longest are zero-padded.
DigitString interlace_D(std::span<const DigitString> block);

/// Value of a b-adic digit string. Base 2 truncates to the first 53 digits
/// (exact in a double); other bases use long double Horner.
double to_double(const DigitString& x);

/// Points in dimension d = ps.dimension() / alpha with exact digits.
struct ScrambledPointSet {
  FieldBase base;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  int digits_per_coordinate = 0;
  std::vector<Digit> digits;  ///< row-major, digits_per_coordinate per entry

  DigitString coordinate(Eigen::Index row, Eigen::Index col) const;
  Eigen::MatrixXd real() const;
};

/// Scramble each underlying coordinate t with the tree (cfg.seed, t), then
/// interlace consecutive blocks of alpha coordinates.
ScrambledPointSet interlaced_scrambled_points(const PointSet& ps, const ScrambleConfig& cfg);

/// Same points as interlaced_scrambled_points(...).real(), computed through
/// a word-level fast path in base 2. Rows are points.
Eigen::MatrixXd interlaced_scrambled_real(const PointSet& ps, const ScrambleConfig& cfg);

}  // namespace cdqmc
