#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdqmc {

/// Finite set of coordinate indices (1-based), kept sorted and unique.
class CoordSet {
 public:
  using value_type = std::uint32_t;

  CoordSet() = default;
  CoordSet(std::initializer_list<value_type> items) : items_(items) { canonicalize(); }
  explicit CoordSet(std::vector<value_type> items) : items_(std::move(items)) { canonicalize(); }

  /// {1, ..., n}
  static CoordSet range(value_type n) {
    std::vector<value_type> v(n);
    for (value_type j = 0; j < n; ++j) v[j] = j + 1;
    return CoordSet(std::move(v));
  }

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }
  value_type operator[](std::size_t i) const noexcept { return items_[i]; }
  value_type max() const noexcept { return items_.empty() ? 0 : items_.back(); }
  const std::vector<value_type>& items() const noexcept { return items_; }

  bool contains(value_type j) const noexcept {
    return std::binary_search(items_.begin(), items_.end(), j);
  }
  bool is_subset_of(const CoordSet& other) const noexcept {
    return std::includes(other.items_.begin(), other.items_.end(), items_.begin(), items_.end());
  }
  bool intersects(const CoordSet& other) const noexcept {
    auto a = items_.begin(), b = other.items_.begin();
    while (a != items_.end() && b != other.items_.end()) {
      if (*a == *b) return true;
      if (*a < *b) ++a; else ++b;
    }
    return false;
  }

  /// Subset selected by the bits of `mask` (bit i picks the i-th smallest element).
  CoordSet subset(std::uint64_t mask) const {
    CoordSet r;
    for (std::size_t i = 0; i < items_.size(); ++i)
      if (mask >> i & 1u) r.items_.push_back(items_[i]);
    return r;
  }

  CoordSet with(value_type j) const {
    CoordSet r(*this);
    r.items_.insert(std::upper_bound(r.items_.begin(), r.items_.end(), j), j);
    r.canonicalize();
    return r;
  }

  friend CoordSet set_union(const CoordSet& a, const CoordSet& b) {
    CoordSet r;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r.items_));
    return r;
  }
  friend CoordSet set_difference(const CoordSet& a, const CoordSet& b) {
    CoordSet r;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r.items_));
    return r;
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(items_[i]);
    }
    return s + "}";
  }

  /// Ordered by cardinality, then lexicographically.
  friend std::strong_ordering operator<=>(const CoordSet& a, const CoordSet& b) {
    if (auto c = a.size() <=> b.size(); c != 0) return c;
    return a.items_ <=> b.items_;
  }
  friend bool operator==(const CoordSet&, const CoordSet&) = default;

 private:
  void canonicalize() {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
    if (!items_.empty() && items_.front() == 0)
      throw std::invalid_argument("coordinate indices are 1-based");
  }

  std::vector<value_type> items_;
};

}  // namespace cdqmc
