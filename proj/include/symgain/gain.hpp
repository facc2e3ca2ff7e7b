#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "symgain/errors.hpp"

namespace symgain {

/**
 * Symbolic comparison function (class K / K-infinity) over a closed algebra:
 *
 *   leaves:  Zero, Identity, Power(c, p) = c * s^p   with c > 0, p > 0
 *   nodes:   Compose(f1, ..., fk)  (applied left-to-right: f1 after f2 ...)
 *            Max(f1, ..., fk)
 *            IdPlus(g) = s + g(s)
 *
 * Every non-Zero value is strictly increasing with f(0) = 0. Construction
 * normalizes: compose chains of leaves collapse to a single leaf
 * (Power(c1,p1) after Power(c2,p2) = Power(c1*c2^p1, p1*p2)), Identity is
 * dropped, Zero absorbs, Max deduplicates and collapses same-exponent
 * powers to the larger coefficient. Values are immutable and cheap to copy.
 */
class GainFn {
 public:
  enum class Kind { Zero, Identity, Power, Compose, Max, IdPlus };

  GainFn() : kind_(Kind::Identity) {}

  static GainFn zero() { return GainFn(Kind::Zero); }
  static GainFn identity() { return GainFn(Kind::Identity); }

  /// c * s^p. Requires c > 0 and p > 0 so the leaf is K-infinity.
  static GainFn power(double c, double p) {
    if (!(c > 0.0) || !(p > 0.0))
      throw Error("GainFn::power requires c > 0 and p > 0");
    if (c == 1.0 && p == 1.0) return identity();
    GainFn f(Kind::Power);
    f.c_ = c;
    f.p_ = p;
    return f;
  }

  /// Normalized composition, children applied left-to-right
  /// (compose_of({f, g}) is f after g).
  static GainFn compose_of(std::vector<GainFn> fs) {
    std::vector<GainFn> flat;
    flatten_compose(fs, flat);
    // Zero anywhere annihilates: every member maps 0 to 0.
    for (const GainFn& f : flat)
      if (f.kind_ == Kind::Zero) return zero();
    std::vector<GainFn> out;
    for (GainFn& f : flat) {
      if (f.kind_ == Kind::Identity) continue;
      if (!out.empty() && out.back().kind_ == Kind::Power &&
          f.kind_ == Kind::Power) {
        GainFn& outer = out.back();
        // outer after f:  c1 * (c2 s^p2)^p1
        double c = outer.c_ * std::pow(f.c_, outer.p_);
        double p = outer.p_ * f.p_;
        outer = (c == 1.0 && p == 1.0) ? identity() : power(c, p);
        if (outer.kind_ == Kind::Identity) out.pop_back();
        continue;
      }
      out.push_back(std::move(f));
    }
    if (out.empty()) return identity();
    if (out.size() == 1) return out.front();
    GainFn f(Kind::Compose);
    f.children_ = std::move(out);
    return f;
  }

  /// Normalized pointwise maximum. Requires at least one child.
  static GainFn max_of(std::vector<GainFn> fs) {
    if (fs.empty()) throw Error("GainFn::max_of requires >= 1 child");
    GainFn acc = zero();
    bool first = true;
    for (GainFn& f : fs) {
      if (first) {
        acc = std::move(f);
        first = false;
      } else {
        acc = max_fold(std::move(acc), std::move(f));
      }
    }
    return acc;
  }

  /// Raw IdPlus node, s + inner(s). Prefer id_plus() which normalizes
  /// linear arguments.
  static GainFn id_plus_node(GainFn inner) {
    GainFn f(Kind::IdPlus);
    f.children_.push_back(std::move(inner));
    return f;
  }

  Kind kind() const { return kind_; }
  double coeff() const { return c_; }
  double exponent() const { return p_; }
  const std::vector<GainFn>& children() const { return children_; }

  double eval(double s) const {
    switch (kind_) {
      case Kind::Zero:
        return 0.0;
      case Kind::Identity:
        return s;
      case Kind::Power:
        if (s == 0.0) return 0.0;
        if (p_ == 1.0) return c_ * s;
        if (p_ == 2.0) return c_ * s * s;
        if (p_ == 0.5) return c_ * std::sqrt(s);
        return c_ * std::pow(s, p_);
      case Kind::Compose: {
        double v = s;
        for (auto it = children_.rbegin(); it != children_.rend(); ++it)
          v = it->eval(v);
        return v;
      }
      case Kind::Max: {
        double v = 0.0;
        for (const GainFn& f : children_) v = std::max(v, f.eval(s));
        return v;
      }
      case Kind::IdPlus:
        return s + children_.front().eval(s);
    }
    return 0.0;  // unreachable
  }

  bool is_zero() const { return kind_ == Kind::Zero; }
  bool is_identity() const { return kind_ == Kind::Identity; }

  /// True when the function is Zero, Identity or a slope-c linear power
  /// (these are exactly the additive members of the algebra).
  bool is_linear() const {
    return kind_ == Kind::Zero || kind_ == Kind::Identity ||
           (kind_ == Kind::Power && p_ == 1.0);
  }

  /// Slope of a linear function (Zero -> 0, Identity -> 1, Power(c,1) -> c).
  double linear_slope() const {
    switch (kind_) {
      case Kind::Zero: return 0.0;
      case Kind::Identity: return 1.0;
      case Kind::Power:
        if (p_ == 1.0) return c_;
        break;
      default: break;
    }
    throw Error("GainFn::linear_slope on non-linear function");
  }

  bool structurally_equal(const GainFn& o) const {
    if (kind_ != o.kind_) return false;
    if (kind_ == Kind::Power && (c_ != o.c_ || p_ != o.p_)) return false;
    if (children_.size() != o.children_.size()) return false;
    for (std::size_t i = 0; i < children_.size(); ++i)
      if (!children_[i].structurally_equal(o.children_[i])) return false;
    return true;
  }

 private:
  explicit GainFn(Kind k) : kind_(k) {}

  static void flatten_compose(std::vector<GainFn>& fs,
                              std::vector<GainFn>& out) {
    for (GainFn& f : fs) {
      if (f.kind_ == Kind::Compose)
        flatten_compose(f.children_, out);
      else
        out.push_back(std::move(f));
    }
  }

  static GainFn max_fold(GainFn acc, GainFn f) {
    std::vector<GainFn> items;
    if (acc.kind_ == Kind::Max)
      items = std::move(acc.children_);
    else if (acc.kind_ != Kind::Zero)
      items.push_back(std::move(acc));

    std::vector<GainFn> add;
    if (f.kind_ == Kind::Max)
      add = std::move(f.children_);
    else
      add.push_back(std::move(f));

    for (GainFn& g : add) {
      if (g.kind_ == Kind::Zero) continue;
      bool absorbed = false;
      for (const GainFn& h : items) {
        if (h.structurally_equal(g)) {  // deduplicate identical subtrees
          absorbed = true;
          break;
        }
      }
      if (!absorbed) items.push_back(std::move(g));
    }
    if (items.empty()) return zero();
    if (items.size() == 1) return items.front();
    GainFn m(Kind::Max);
    m.children_ = std::move(items);
    return m;
  }

  Kind kind_;
  double c_ = 1.0;
  double p_ = 1.0;
  std::vector<GainFn> children_;
};

/// f after g, normalized: eval(compose(f,g), s) == eval(f, eval(g, s)).
inline GainFn compose(GainFn f, GainFn g) {
  std::vector<GainFn> fs;
  fs.push_back(std::move(f));
  fs.push_back(std::move(g));
  return GainFn::compose_of(std::move(fs));
}

/// Symbolic inverse on the invertible class (Identity and single powers).
/// Power(c,p) -> Power(c^(-1/p), 1/p). Throws NotInvertible otherwise.
inline GainFn inverse(const GainFn& f) {
  switch (f.kind()) {
    case GainFn::Kind::Identity:
      return GainFn::identity();
    case GainFn::Kind::Power:
      return GainFn::power(std::pow(f.coeff(), -1.0 / f.exponent()),
                           1.0 / f.exponent());
    default:
      throw NotInvertible("GainFn not symbolically invertible");
  }
}

/// Decision for "f < identity on all s > 0".
/// Yes/No are symbolic; NumericYes/NumericNo come from sampling only and
/// are not proofs.
enum class LtId { Yes, No, NumericYes, NumericNo };

inline bool lt_id_holds(LtId r) {
  return r == LtId::Yes || r == LtId::NumericYes;
}
inline bool lt_id_symbolic(LtId r) { return r == LtId::Yes || r == LtId::No; }

namespace detail {
inline int lt_id_symbolic_decide(const GainFn& f) {
  // 1 = Yes, 0 = No, -1 = undecidable symbolically
  switch (f.kind()) {
    case GainFn::Kind::Zero:
      return 1;
    case GainFn::Kind::Identity:
      return 0;
    case GainFn::Kind::Power:
      if (f.exponent() == 1.0) return f.coeff() < 1.0 ? 1 : 0;
      return 0;  // c*s^p < s cannot hold for all s > 0 when p != 1
    case GainFn::Kind::IdPlus:
      return 0;  // s + g(s) >= s, g in K-infinity
    case GainFn::Kind::Max: {
      bool all_yes = true;
      for (const GainFn& g : f.children()) {
        int d = lt_id_symbolic_decide(g);
        if (d == 0) return 0;
        if (d != 1) all_yes = false;
      }
      return all_yes ? 1 : -1;
    }
    default:
      return -1;
  }
}
}  // namespace detail

/// Strict small-gain style order decision f < I_d. Symbolic where the
/// normalized form allows it; otherwise samples `samples` log-spaced
/// points on (0, s_max] (a heuristic, flagged by the Numeric results).
inline LtId less_than_identity(const GainFn& f, double s_max = 1e6,
                               int samples = 1000) {
  int d = detail::lt_id_symbolic_decide(f);
  if (d == 1) return LtId::Yes;
  if (d == 0) return LtId::No;
  const double decades = 12.0;
  for (int j = 0; j < samples; ++j) {
    double t = samples == 1 ? 1.0 : static_cast<double>(j) / (samples - 1);
    double s = s_max * std::pow(10.0, -decades * (1.0 - t));
    if (!(f.eval(s) < s)) return LtId::NumericNo;
  }
  return LtId::NumericYes;
}

/// (I_d + lambda); collapses to Power(1+c, 1) for linear lambda.
inline GainFn id_plus(const GainFn& lambda) {
  if (lambda.is_zero()) return GainFn::identity();
  if (lambda.is_linear())
    return GainFn::power(1.0 + lambda.linear_slope(), 1.0);
  return GainFn::id_plus_node(lambda);
}

/// (chi - I_d)^{-1} for linear chi with slope > 1:
/// (c s - s)^{-1} = s / (c - 1). Throws ChiNotAdmissible otherwise.
inline GainFn minus_id_inverse(const GainFn& chi) {
  if (!chi.is_linear() || chi.is_zero())
    throw ChiNotAdmissible("chi must be linear with slope > 1");
  double c = chi.linear_slope();
  if (!(c > 1.0))
    throw ChiNotAdmissible("chi - I_d is not K-infinity (slope <= 1)");
  if (c == 2.0) return GainFn::identity();
  return GainFn::power(1.0 / (c - 1.0), 1.0);
}

/// Numeric inverse of a (strictly increasing, f(0)=0) gain at y >= 0 by
/// bisection to relative tolerance rel_tol. Used where a Max node blocks
/// the symbolic inverse.
inline double numeric_inverse_eval(const GainFn& f, double y,
                                   double rel_tol = 1e-12) {
  if (y < 0.0) throw Error("numeric_inverse_eval requires y >= 0");
  if (y == 0.0) return 0.0;
  if (f.is_zero()) throw NotInvertible("Zero gain has no inverse");
  double hi = 1.0;
  int guard = 0;
  while (f.eval(hi) < y) {
    hi *= 2.0;
    if (++guard > 4096) throw Error("numeric_inverse_eval: no bracket");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (f.eval(mid) < y)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= rel_tol * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace symgain
