#pragma once

// Polynomial lattice point sets and a component-by-component search for
// their generating vectors.

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cdqmc/gfpoly.hpp"

namespace cdqmc {

class WeightModel;

using NumeratorMatrix =
    Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// (b, m, p, q_1..q_s). The modulus is irreducible of degree m and every
/// q_j is nonzero with degree < m.
class GeneratingVector {
 public:
  GeneratingVector(FieldBase base, int m, PolyGF modulus, std::vector<PolyGF> q);

  const FieldBase& base() const noexcept { return base_; }
  int m() const noexcept { return m_; }
  int dimension() const noexcept { return static_cast<int>(q_.size()); }
  std::uint64_t size() const { return ipow(base_.value(), m_); }
  const PolyGF& modulus() const noexcept { return modulus_; }
  const std::vector<PolyGF>& q() const noexcept { return q_; }

  /// First s components.
  GeneratingVector prefix(int s) const;

 private:
  FieldBase base_;
  int m_;
  PolyGF modulus_;
  std::vector<PolyGF> q_;
};

/// b^m points in [0,1)^s stored exactly as numerators over b^m.
struct PointSet {
  FieldBase base;
  int m = 0;
  NumeratorMatrix numerators;  ///< n x s

  std::uint64_t size() const noexcept { return static_cast<std::uint64_t>(numerators.rows()); }
  int dimension() const noexcept { return static_cast<int>(numerators.cols()); }
  std::uint64_t denominator() const { return ipow(base.value(), m); }
  Eigen::MatrixXd real() const;
  /// Base-b digits t_1..t_m of one coordinate.
  std::vector<Digit> digits(Eigen::Index row, Eigen::Index col) const;
};

/// Digitwise sum mod b of two m-digit numerators.
std::uint64_t digitwise_add(std::uint64_t x, std::uint64_t y, std::uint32_t b, int m);

/// Column j of the generating matrix: numerators of v_m(x^i q / p), i = 0..m-1.
std::vector<std::uint64_t> generating_columns(const PolyGF& q, const PolyGF& p, int m);

/// Numerators of v_m(h q / p) for h = 0..b^m-1.
std::vector<std::uint64_t> lattice_column(const PolyGF& q, const PolyGF& p, int m);

/// Row h, column j is v_m(h(x) q_j(x) / p(x)).
PointSet plr_points(const GeneratingVector& gv);

/// Quality criterion minimized by the component-by-component search.
class FigureOfMerit {
 public:
  /// Incremental state over the columns accepted so far.
  class Accumulator {
   public:
    virtual ~Accumulator() = default;
    /// Score of the current prefix extended by `column` (smaller is better).
    virtual double score(std::span<const std::uint64_t> column, int coordinate) = 0;
    virtual void commit(std::span<const std::uint64_t> column, int coordinate) = 0;
  };

  virtual ~FigureOfMerit() = default;
  virtual std::unique_ptr<Accumulator> start(FieldBase base, int m) const = 0;
};

/// Truncated weighted Walsh figure of merit
///   sum over nonzero dual vectors k with every k_t < b^m of
///   prod_{t : k_t != 0} w_t b^{-2 len(k_t)},
/// where len(k) is the number of base-b digits of k. Evaluated in O(n s)
/// through the closed form of the Walsh sums over digit-length shells.
class WalshFigureOfMerit final : public FigureOfMerit {
 public:
  explicit WalshFigureOfMerit(std::vector<double> coordinate_weights)
      : weights_(std::move(coordinate_weights)) {}

  std::unique_ptr<Accumulator> start(FieldBase base, int m) const override;

  /// sum_{k=1}^{b^m-1} b^{-2 len(k)} wal_k(x) for x = numerator / b^m.
  static double kernel(std::uint64_t numerator, std::uint32_t b, int m);

  double weight(int coordinate) const {
    return coordinate < static_cast<int>(weights_.size()) ? weights_[static_cast<std::size_t>(coordinate)]
                                                         : 1.0;
  }

 private:
  std::vector<double> weights_;
};

/// Average variance of the Owen-scrambled rule over the smooth test
/// functions prod_t (1 + B_2(y_t)/2) and sum_t B_2(y_t)/2, estimated from a
/// fixed number of seeded replications.
class EmpiricalFigureOfMerit final : public FigureOfMerit {
 public:
  EmpiricalFigureOfMerit(int replications, std::uint64_t seed)
      : reps_(replications), seed_(seed) {}

  std::unique_ptr<Accumulator> start(FieldBase base, int m) const override;

  int replications() const noexcept { return reps_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  int reps_;
  std::uint64_t seed_;
};

struct SearchOptions {
  /// Candidates examined per component; 0 returns q_j = 1 throughout.
  std::uint64_t budget = 64;
  std::uint64_t seed = 0x5eedULL;
};

/// Component-by-component search for s components with n = b^m points.
/// Ties go to the smallest integer encoding.
GeneratingVector search_generating_vector(int s, int m, FieldBase base,
                                          const FigureOfMerit& fom,
                                          const SearchOptions& opts = {});

/// Convenience overload: Walsh criterion where underlying coordinate t of
/// an interlaced rule (block (t / alpha) + 1) carries the singleton weight
/// gamma_{{t/alpha + 1}}.
GeneratingVector search_generating_vector(int s, int m, FieldBase base,
                                          const WeightModel& weights, int alpha,
                                          const SearchOptions& opts = {});

/// Process-wide cache of searched vectors with unit weights, keyed by
/// (b, m) and extended component-by-component on demand. Thread-safe.
GeneratingVector cached_generating_vector(FieldBase base, int m, int s);

/// Digits concatenated without separators ("0110"); if any digit exceeds 9
/// they are dot-separated instead.
std::string format_digits(std::span<const Digit> digits);

}  // namespace cdqmc
