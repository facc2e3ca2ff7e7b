#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "symgain/errors.hpp"

namespace symgain {

using Point = std::vector<double>;
using IndexVec = std::vector<std::int64_t>;

/// Axis-aligned box, per-dimension closed intervals [lo_i, hi_i], lo_i < hi_i.
struct Box {
  std::vector<double> lo, hi;

  Box() = default;
  Box(std::vector<double> l, std::vector<double> h)
      : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size()) throw DimensionMismatch("box bound dims");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw Error("box requires lo < hi per dimension");
  }
  static Box interval(double l, double h) { return Box({l}, {h}); }

  std::size_t dim() const { return lo.size(); }

  bool contains(const Point& x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }

  /// Shortest side length.
  double min_side() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dim(); ++i) m = std::min(m, hi[i] - lo[i]);
    return m;
  }
};

/// Finite union of boxes of a common dimension.
struct BoxUnion {
  std::vector<Box> boxes;

  BoxUnion() = default;
  BoxUnion(std::initializer_list<Box> bs) : boxes(bs) { validate(); }
  explicit BoxUnion(std::vector<Box> bs) : boxes(std::move(bs)) { validate(); }
  explicit BoxUnion(Box b) { boxes.push_back(std::move(b)); }
  static BoxUnion interval(double l, double h) {
    return BoxUnion(Box::interval(l, h));
  }

  std::size_t dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }
  bool empty() const { return boxes.empty(); }

  bool contains(const Point& x, double tol = 0.0) const {
    for (const Box& b : boxes)
      if (b.contains(x, tol)) return true;
    return false;
  }

  /// span(S): minimum over member boxes of their shortest side.
  double span() const {
    if (boxes.empty()) throw Error("span of empty set");
    double m = std::numeric_limits<double>::infinity();
    for (const Box& b : boxes) m = std::min(m, b.min_side());
    return m;
  }

 private:
  void validate() const {
    for (const Box& b : boxes)
      if (b.dim() != dim()) throw DimensionMismatch("mixed box dimensions");
  }
};

namespace detail {
// Integer range of multiples k*eta inside [lo, hi]; a tiny relative slack
// absorbs decimal roundoff in the box bounds (e.g. 19.0/0.01).
inline void multiple_range(double lo, double hi, double eta, std::int64_t& klo,
                           std::int64_t& khi) {
  const double slack = 1e-9;
  klo = static_cast<std::int64_t>(std::ceil(lo / eta - slack));
  khi = static_cast<std::int64_t>(std::floor(hi / eta + slack));
}
}  // namespace detail

/**
 * Finite quantization [S]_eta of a finite union of boxes: the points of S
 * whose coordinates are all integer multiples of eta. Enumeration order is
 * lexicographic by the integer index vector and deterministic.
 */
class Grid {
 public:
  Grid() = default;

  Grid(BoxUnion source, double eta) : source_(std::move(source)), eta_(eta) {
    if (!(eta_ > 0.0)) throw StepTooLarge("quantization step must be > 0");
    if (eta_ > source_.span())
      throw StepTooLarge("quantization step exceeds span of the set");
    build();
    if (points_.empty()) throw EmptyGrid("quantized set has no grid points");
  }

  double eta() const { return eta_; }
  const BoxUnion& source() const { return source_; }
  std::size_t dim() const { return source_.dim(); }
  std::size_t size() const { return points_.size(); }

  const IndexVec& index_at(std::size_t ordinal) const { return points_[ordinal]; }

  Point point_at(std::size_t ordinal) const {
    const IndexVec& k = points_[ordinal];
    Point x(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) x[i] = k[i] * eta_;
    return x;
  }

  Point point_of(const IndexVec& k) const {
    Point x(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) x[i] = k[i] * eta_;
    return x;
  }

  /// Ordinal of an index vector, or npos when not a member.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t ordinal_of(const std::int64_t* k, std::size_t d) const {
    if (single_box_) {
      std::size_t ord = 0;
      for (std::size_t i = 0; i < d; ++i) {
        if (k[i] < klo_[i] || k[i] > khi_[i]) return npos;
        ord = ord * static_cast<std::size_t>(khi_[i] - klo_[i] + 1) +
              static_cast<std::size_t>(k[i] - klo_[i]);
      }
      return ord;
    }
    IndexVec key(k, k + d);
    auto it = std::lower_bound(points_.begin(), points_.end(), key);
    if (it == points_.end() || *it != key) return npos;
    return static_cast<std::size_t>(it - points_.begin());
  }
  std::size_t ordinal_of(const IndexVec& k) const {
    return ordinal_of(k.data(), k.size());
  }

  bool member(const IndexVec& k) const { return ordinal_of(k) != npos; }

  /**
   * Quantizer: nearest grid point in the infinity norm, guaranteed
   * within eta of x. Ties between two equidistant multiples break toward
   * the smaller one; candidates are clamped into the containing box so
   * the result is always a member. Throws OutsideDomain for x outside S.
   */
  std::size_t nearest(const Point& x) const {
    if (x.size() != dim()) throw DimensionMismatch("quantizer point dim");
    const double tol = 1e-9 * eta_;
    for (const Box& b : source_.boxes) {
      if (!b.contains(x, tol)) continue;
      IndexVec k(dim());
      bool ok = true;
      for (std::size_t i = 0; i < dim(); ++i) {
        std::int64_t klo, khi;
        detail::multiple_range(b.lo[i], b.hi[i], eta_, klo, khi);
        if (klo > khi) {
          ok = false;
          break;
        }
        // round half toward the smaller multiple
        std::int64_t ki = static_cast<std::int64_t>(std::ceil(x[i] / eta_ - 0.5));
        k[i] = std::clamp(ki, klo, khi);
      }
      if (!ok) continue;
      std::size_t ord = ordinal_of(k);
      if (ord != npos) return ord;
    }
    throw OutsideDomain("quantizer input lies outside the source set");
  }

  Point nearest_point(const Point& x) const { return point_at(nearest(x)); }

 private:
  void build() {
    single_box_ = source_.boxes.size() == 1;
    if (single_box_) {
      const Box& b = source_.boxes.front();
      klo_.resize(b.dim());
      khi_.resize(b.dim());
      std::size_t total = 1;
      for (std::size_t i = 0; i < b.dim(); ++i) {
        detail::multiple_range(b.lo[i], b.hi[i], eta_, klo_[i], khi_[i]);
        if (klo_[i] > khi_[i]) {
          points_.clear();
          return;
        }
        total *= static_cast<std::size_t>(khi_[i] - klo_[i] + 1);
      }
      points_.reserve(total);
      IndexVec k(klo_.begin(), klo_.end());
      while (true) {
        points_.push_back(k);
        std::size_t d = k.size();
        while (d > 0) {
          if (++k[d - 1] <= khi_[d - 1]) break;
          k[d - 1] = klo_[d - 1];
          --d;
        }
        if (d == 0) break;
      }
      return;
    }
    // general union: collect per box, sort lexicographically, deduplicate
    for (const Box& b : source_.boxes) {
      std::vector<std::int64_t> klo(b.dim()), khi(b.dim());
      bool nonempty = true;
      for (std::size_t i = 0; i < b.dim(); ++i) {
        detail::multiple_range(b.lo[i], b.hi[i], eta_, klo[i], khi[i]);
        if (klo[i] > khi[i]) nonempty = false;
      }
      if (!nonempty) continue;
      IndexVec k(klo.begin(), klo.end());
      while (true) {
        points_.push_back(k);
        std::size_t d = k.size();
        while (d > 0) {
          if (++k[d - 1] <= khi[d - 1]) break;
          k[d - 1] = klo[d - 1];
          --d;
        }
        if (d == 0) break;
      }
    }
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
  }

  BoxUnion source_;
  double eta_ = 0.0;
  bool single_box_ = false;
  std::vector<std::int64_t> klo_, khi_;  // single-box fast path
  std::vector<IndexVec> points_;
};

/// [S]_eta as an operation; [S]_0 is the identity by convention and has no
/// finite representation here, so eta must be positive.
inline Grid quantize_set(const BoxUnion& s, double eta) { return Grid(s, eta); }

inline double inf_norm(const Point& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double inf_dist(const Point& a, const Point& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace symgain
