#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "symgain/errors.hpp"
#include "symgain/geometry.hpp"

namespace symgain {

/// Deterministic transition map x_next = f(x, u, w). The callback must be
/// pure; w is the concatenation of internal blocks in declaration order
/// (empty for decoupled subsystems).
using TransitionFn =
    std::function<void(const double* x, const double* u, const double* w,
                       double* x_next)>;

/// Output-block map y = h_block(x).
using OutputFn = std::function<void(const double* x, double* y)>;

/// State feedback H : X -> U used by the abstraction and the nonlinear
/// refinement rule.
using FeedbackFn = std::function<void(const double* x, double* u)>;

/// Internal-input block w_ij, fed from neighbor `source`'s output toward
/// this subsystem.
struct InternalBlock {
  int source = -1;
  std::size_t dim = 0;
  BoxUnion set;  // declared W_ij
};

/// Output block h_ij; `target == index` is the external output y_ii.
struct OutputBlock {
  int target = -1;
  std::size_t dim = 0;
  BoxUnion range;  // declared Y_ij
  OutputFn h;
};

/// One concrete discrete-time control subsystem with partitioned internal
/// inputs and outputs. Immutable after construction; step() is pure.
struct SubsystemDef {
  int index = 0;
  std::size_t state_dim = 0;
  std::size_t input_dim = 0;
  BoxUnion state_set;  // X_i
  BoxUnion input_set;  // U_i
  std::vector<InternalBlock> internal_blocks;  // ordered by source index
  std::vector<OutputBlock> output_blocks;      // self + one per fed neighbor
  TransitionFn f;

  std::size_t internal_dim() const {
    std::size_t d = 0;
    for (const auto& b : internal_blocks) d += b.dim;
    return d;
  }

  const InternalBlock* internal_from(int j) const {
    for (const auto& b : internal_blocks)
      if (b.source == j) return &b;
    return nullptr;
  }

  const OutputBlock* output_toward(int j) const {
    for (const auto& b : output_blocks)
      if (b.target == j) return &b;
    return nullptr;
  }

  Point step(const Point& x, const Point& u, const Point& w) const {
    Point out(state_dim);
    f(x.data(), u.data(), w.data(), out.data());
    return out;
  }

  Point output_self(const Point& x) const {
    const OutputBlock* b = output_toward(index);
    if (!b) throw Error("subsystem has no external output block");
    Point y(b->dim);
    b->h(x.data(), y.data());
    return y;
  }
};

/// Coupling matrix of internal quantization parameters: {M}_ii = 0,
/// {M}_ij = varpi_ij >= 0 quantizes subsystem j's output on its way into
/// subsystem i's internal input (exact routing when 0).
struct InterconnectionSpec {
  std::size_t n = 0;
  std::vector<std::vector<double>> varpi;

  InterconnectionSpec() = default;
  explicit InterconnectionSpec(std::size_t count)
      : n(count), varpi(count, std::vector<double>(count, 0.0)) {}

  double operator()(std::size_t i, std::size_t j) const { return varpi[i][j]; }
  double& operator()(std::size_t i, std::size_t j) { return varpi[i][j]; }
};

/**
 * Closed network I_M(Sigma_1, ..., Sigma_N): product state and input sets,
 * external output [h_11; ...; h_NN], and the routing constraint
 * w_ij = quantize_{varpi_ij}(y_ji). Construction validates block dimension
 * compatibility and the containment [Y_ji]_{varpi_ij} within W_ij.
 */
class NetworkSystem {
 public:
  NetworkSystem(std::vector<SubsystemDef> subs, InterconnectionSpec m)
      : subs_(std::move(subs)), m_(std::move(m)) {
    const std::size_t n = subs_.size();
    if (m_.n != n)
      throw DimensionMismatch("interconnection matrix size vs subsystem count");
    edge_grids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const SubsystemDef& si = subs_[i];
      for (const InternalBlock& blk : si.internal_blocks) {
        if (blk.source < 0 || static_cast<std::size_t>(blk.source) >= n)
          throw DimensionMismatch("internal block references unknown subsystem");
        const SubsystemDef& sj = subs_[blk.source];
        const OutputBlock* out = sj.output_toward(si.index);
        if (!out)
          throw DimensionMismatch("no output block feeding declared internal block");
        if (out->dim != blk.dim)
          throw DimensionMismatch("internal/output block dimension mismatch");
        double varpi = m_(i, blk.source);
        if (varpi < 0.0) throw ContainmentViolated("negative varpi");
        if (varpi > 0.0) {
          if (varpi > out->range.span())
            throw ContainmentViolated("varpi exceeds span of the output set");
          Grid g(out->range, varpi);
          // [Y_ji]_varpi must lie inside W_ij
          for (std::size_t p = 0; p < g.size(); ++p)
            if (!blk.set.contains(g.point_at(p), 1e-12))
              throw ContainmentViolated("[Y]_varpi not contained in W block");
          edge_grids_[i].emplace_back(blk.source, std::move(g));
        } else {
          // exact routing ([S]_0 := S): every declared output box must sit
          // inside one declared W box (a sufficient containment check)
          for (const Box& yb : out->range.boxes) {
            bool inside = false;
            for (const Box& wb : blk.set.boxes) {
              bool all = yb.dim() == wb.dim();
              for (std::size_t d = 0; all && d < yb.dim(); ++d)
                all = yb.lo[d] >= wb.lo[d] - 1e-12 && yb.hi[d] <= wb.hi[d] + 1e-12;
              if (all) {
                inside = true;
                break;
              }
            }
            if (!inside)
              throw ContainmentViolated("output set not contained in W block");
          }
        }
      }
      check_finite_at_samples(si);
    }
  }

  std::size_t size() const { return subs_.size(); }
  const SubsystemDef& sub(std::size_t i) const { return subs_[i]; }
  const InterconnectionSpec& coupling() const { return m_; }

  std::size_t state_dim() const {
    std::size_t d = 0;
    for (const auto& s : subs_) d += s.state_dim;
    return d;
  }
  std::size_t input_dim() const {
    std::size_t d = 0;
    for (const auto& s : subs_) d += s.input_dim;
    return d;
  }

  /// Internal input for subsystem i given the full network state.
  Point gather_internal(std::size_t i, const Point& x) const {
    const SubsystemDef& si = subs_[i];
    Point w(si.internal_dim());
    std::size_t off = 0;
    for (const InternalBlock& blk : si.internal_blocks) {
      const SubsystemDef& sj = subs_[blk.source];
      const OutputBlock* out = sj.output_toward(si.index);
      Point xj = slice_state(x, blk.source);
      Point y(out->dim);
      out->h(xj.data(), y.data());
      double varpi = m_(i, blk.source);
      if (varpi > 0.0) y = edge_grid(i, blk.source).nearest_point(y);
      for (std::size_t d = 0; d < blk.dim; ++d) w[off + d] = y[d];
      off += blk.dim;
    }
    return w;
  }

  /// One synchronous step of the interconnected system. Inputs must lie in
  /// the product sets; non-finite successors raise OutsideDomain (reported,
  /// never clamped).
  Point step(const Point& x, const Point& u) const {
    if (x.size() != state_dim() || u.size() != input_dim())
      throw DimensionMismatch("network state/input size");
    validate_membership(x, u);
    Point next(state_dim());
    std::size_t xoff = 0, uoff = 0;
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      const SubsystemDef& s = subs_[i];
      Point xi(x.begin() + xoff, x.begin() + xoff + s.state_dim);
      Point ui(u.begin() + uoff, u.begin() + uoff + s.input_dim);
      Point wi = gather_internal(i, x);
      Point xd = s.step(xi, ui, wi);
      for (double v : xd)
        if (!std::isfinite(v))
          throw OutsideDomain("subsystem " + std::to_string(i) +
                              " produced a non-finite successor");
      std::copy(xd.begin(), xd.end(), next.begin() + xoff);
      xoff += s.state_dim;
      uoff += s.input_dim;
    }
    return next;
  }

  /// External output [h_11; ...; h_NN].
  Point output(const Point& x) const {
    Point y;
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      Point yi = subs_[i].output_self(slice_state(x, static_cast<int>(i)));
      y.insert(y.end(), yi.begin(), yi.end());
    }
    return y;
  }

  Point slice_state(const Point& x, int i) const {
    std::size_t off = 0;
    for (int k = 0; k < i; ++k) off += subs_[k].state_dim;
    return Point(x.begin() + off, x.begin() + off + subs_[i].state_dim);
  }

 private:
  /// Transition maps must produce finite values on their declared sets;
  /// probed at a few deterministic points (box corners and midpoints).
  void check_finite_at_samples(const SubsystemDef& s) const {
    auto corner = [](const BoxUnion& set, double t) {
      Point p(set.dim());
      const Box& b = set.boxes.front();
      for (std::size_t d = 0; d < p.size(); ++d)
        p[d] = b.lo[d] + t * (b.hi[d] - b.lo[d]);
      return p;
    };
    Point w(s.internal_dim());
    for (double t : {0.0, 0.5, 1.0}) {
      Point x = corner(s.state_set, t);
      Point u = corner(s.input_set, t);
      std::size_t off = 0;
      for (const InternalBlock& blk : s.internal_blocks) {
        Point wb = corner(blk.set, t);
        std::copy(wb.begin(), wb.end(), w.begin() + off);
        off += blk.dim;
      }
      Point xd = s.step(x, u, w);
      for (double v : xd)
        if (!std::isfinite(v))
          throw OutsideDomain("subsystem " + std::to_string(s.index) +
                              " transition map non-finite at a sampled point");
    }
  }

  const Grid& edge_grid(std::size_t i, int source) const {
    for (const auto& [src, g] : edge_grids_[i])
      if (src == source) return g;
    throw Error("missing edge grid");
  }

  void validate_membership(const Point& x, const Point& u) const {
    std::size_t xoff = 0, uoff = 0;
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      const SubsystemDef& s = subs_[i];
      Point xi(x.begin() + xoff, x.begin() + xoff + s.state_dim);
      Point ui(u.begin() + uoff, u.begin() + uoff + s.input_dim);
      const double tol = 1e-9;
      if (!s.state_set.contains(xi, tol))
        throw OutsideDomain("state of subsystem " + std::to_string(i) +
                            " outside its state set");
      if (!s.input_set.contains(ui, tol))
        throw OutsideDomain("input of subsystem " + std::to_string(i) +
                            " outside its input set");
      xoff += s.state_dim;
      uoff += s.input_dim;
    }
  }

  std::vector<SubsystemDef> subs_;
  InterconnectionSpec m_;
  std::vector<std::vector<std::pair<int, Grid>>> edge_grids_;
};

inline NetworkSystem build_interconnection(std::vector<SubsystemDef> subs,
                                           InterconnectionSpec m) {
  return NetworkSystem(std::move(subs), std::move(m));
}

inline Point network_step(const NetworkSystem& net, const Point& x,
                          const Point& u) {
  return net.step(x, u);
}

}  // namespace symgain
