#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "symgain/certificates.hpp"
#include "symgain/errors.hpp"
#include "symgain/gain.hpp"
#include "symgain/system.hpp"

namespace symgain {

struct CapExceeded : Error { using Error::Error; };

/// N x N matrix of gains: gamma_ii = sigma_i, gamma_ij relates subsystem
/// j's simulation error to subsystem i's internal-input mismatch, Zero for
/// absent edges.
struct GainMatrix {
  std::size_t n = 0;
  std::vector<GainFn> entries;  // row-major

  explicit GainMatrix(std::size_t count = 0)
      : n(count), entries(count * count, GainFn::zero()) {}

  GainFn& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }
  const GainFn& at(std::size_t i, std::size_t j) const {
    return entries[i * n + j];
  }

  bool all_linear() const {
    for (const GainFn& f : entries)
      if (!f.is_linear()) return false;
    return true;
  }
};

/// Edge presence: edge[i][j] == true iff subsystem j feeds subsystem i.
using EdgeMatrix = std::vector<std::vector<bool>>;

inline EdgeMatrix edges_from_subsystems(const std::vector<SubsystemDef>& subs) {
  EdgeMatrix e(subs.size(), std::vector<bool>(subs.size(), false));
  for (std::size_t i = 0; i < subs.size(); ++i)
    for (const InternalBlock& b : subs[i].internal_blocks)
      e[i][static_cast<std::size_t>(b.source)] = true;
  return e;
}

/**
 * Gain matrix of the compositional condition:
 *   gamma_ii = sigma_i,
 *   gamma_ij = (I_d + lambda) o rho_iint [o chi] o alpha_j^{-1}
 * with chi dropped when rho_iint is linear, and the (I_d + lambda) factor
 * dropped when every internal quantization varpi_hat is zero.
 */
inline GainMatrix build_gain_matrix(const std::vector<Certificate>& certs,
                                    const GainFn& lambda,
                                    const std::optional<GainFn>& chi,
                                    const InterconnectionSpec& m_hat,
                                    const EdgeMatrix& edges) {
  const std::size_t n = certs.size();
  if (m_hat.n != n || edges.size() != n)
    throw DimensionMismatch("gain matrix operand sizes");
  bool all_varpi_zero = true;
  for (std::size_t i = 0; i < n && all_varpi_zero; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (edges[i][j] && m_hat(i, j) > 0.0) {
        all_varpi_zero = false;
        break;
      }

  GainMatrix g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.at(i, i) = certs[i].sigma;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !edges[i][j]) continue;
      const GainFn& rho = certs[i].rho_int;
      if (rho.is_zero()) {
        g.at(i, j) = GainFn::zero();
        continue;
      }
      GainFn alpha_j_inv = inverse(certs[j].alpha);  // NotInvertible propagates
      std::vector<GainFn> parts;
      if (!all_varpi_zero) parts.push_back(id_plus(lambda));
      parts.push_back(rho);
      if (!rho.is_linear()) parts.push_back(detail::require_chi(chi));
      parts.push_back(std::move(alpha_j_inv));
      g.at(i, j) = GainFn::compose_of(std::move(parts));
    }
  }
  return g;
}

enum class SgcMode { Exhaustive, LinearFast };
enum class SgcStatus { Satisfied, Violated, Undecided };

struct SgcResult {
  SgcStatus status = SgcStatus::Satisfied;
  std::vector<std::size_t> witness;  // violating cycle (vertex sequence)
  bool numeric_only = false;         // some cycles decided only by sampling
};

namespace detail {

/// DFS enumeration of every simple cycle from every start vertex (so all
/// rotations of each cycle are checked, matching the quantified tuples).
/// Non-constant closed walks factor through the simple cycles they contain,
/// so for strictly increasing gains with contractive diagonals this decides
/// the full tuple condition.
struct CycleSearch {
  const GainMatrix& g;
  std::vector<std::vector<std::size_t>> adj;
  std::vector<char> on_path;
  std::vector<std::size_t> path;
  bool numeric_only = false;
  std::vector<std::size_t> violation;

  explicit CycleSearch(const GainMatrix& gm) : g(gm), adj(gm.n), on_path(gm.n, 0) {
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = 0; j < g.n; ++j)
        if (i != j && !g.at(i, j).is_zero()) adj[i].push_back(j);
  }

  bool run() {
    for (std::size_t s = 0; s < g.n; ++s) {
      path.assign(1, s);
      on_path.assign(g.n, 0);
      on_path[s] = 1;
      if (!dfs(s, s, GainFn::identity())) return false;
    }
    return true;
  }

  // prefix composes the gains along the path so far, left-to-right.
  bool dfs(std::size_t start, std::size_t v, const GainFn& prefix) {
    for (std::size_t w : adj[v]) {
      if (w == start) {
        GainFn cycle = compose(prefix, g.at(v, start));
        LtId d = less_than_identity(cycle);
        if (d == LtId::No || d == LtId::NumericNo) {
          violation = path;
          return false;
        }
        if (d == LtId::NumericYes) numeric_only = true;
        continue;
      }
      if (on_path[w]) continue;
      on_path[w] = 1;
      path.push_back(w);
      bool ok = dfs(start, w, compose(prefix, g.at(v, w)));
      path.pop_back();
      on_path[w] = 0;
      if (!ok) return false;
    }
    return true;
  }
};

struct BellmanFord {
  std::size_t n;
  struct E {
    std::size_t u, v;
    double w;
  };
  std::vector<E> edges;
  std::vector<double> dist;
  std::vector<std::size_t> pred;

  explicit BellmanFord(const GainMatrix& g) : n(g.n) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const GainFn& f = g.at(i, j);
        if (f.is_zero()) continue;
        double c = f.linear_slope();
        edges.push_back({i, j, -std::log(c)});
      }
  }

  /// Returns a cycle with total weight <= 0 (coefficient product >= 1) if
  /// one exists, empty otherwise. Negative cycles come from Bellman-Ford
  /// relaxation; zero-weight cycles are cycles of tight edges of the
  /// converged potentials (around a zero cycle every inequality
  /// dist[v] <= dist[u] + w is forced tight, so none is missed).
  std::vector<std::size_t> nonpositive_cycle() {
    dist.assign(n, 0.0);  // virtual source
    pred.assign(n, n);
    std::size_t last_relaxed = n;
    for (std::size_t round = 0; round < n; ++round) {
      last_relaxed = n;
      for (const E& e : edges) {
        if (dist[e.u] + e.w < dist[e.v]) {
          dist[e.v] = dist[e.u] + e.w;
          pred[e.v] = e.u;
          last_relaxed = e.v;
        }
      }
      if (last_relaxed == n) break;
    }
    if (last_relaxed != n) {
      // negative cycle: walk predecessors n times to land on the cycle
      std::size_t x = last_relaxed;
      for (std::size_t i = 0; i < n; ++i) x = pred[x];
      std::vector<std::size_t> cyc;
      std::size_t c = x;
      do {
        cyc.push_back(c);
        c = pred[c];
      } while (c != x);
      std::reverse(cyc.begin(), cyc.end());
      return cyc;
    }
    // zero-weight cycles among tight edges
    double scale = 1.0;
    for (double d : dist) scale = std::max(scale, std::abs(d));
    const double tol = 1e-12 * scale;
    std::vector<std::vector<std::size_t>> tight(n);
    for (const E& e : edges)
      if (std::abs(dist[e.u] + e.w - dist[e.v]) <= tol)
        tight[e.u].push_back(e.v);
    std::vector<int> color(n, 0);
    std::vector<std::size_t> stack, cyc;
    for (std::size_t s = 0; s < n; ++s) {
      if (color[s]) continue;
      if (tight_dfs(s, tight, color, stack, cyc)) return cyc;
    }
    return {};
  }

 private:
  static bool tight_dfs(std::size_t v,
                        const std::vector<std::vector<std::size_t>>& tight,
                        std::vector<int>& color,
                        std::vector<std::size_t>& stack,
                        std::vector<std::size_t>& cyc) {
    color[v] = 1;
    stack.push_back(v);
    for (std::size_t w : tight[v]) {
      if (color[w] == 1) {
        auto it = std::find(stack.begin(), stack.end(), w);
        cyc.assign(it, stack.end());
        return true;
      }
      if (color[w] == 0 && tight_dfs(w, tight, color, stack, cyc)) return true;
    }
    color[v] = 2;
    stack.pop_back();
    return false;
  }
};

}  // namespace detail

/**
 * Small-gain condition: the composition of gains around every cycle of
 * the interconnection digraph must stay strictly below identity (equality
 * anywhere violates).
 *
 * Exhaustive mode walks every simple cycle in every rotation and decides
 * each composite symbolically where possible; it requires n <= cap.
 * LinearFast requires Zero/linear entries, weights each edge -ln(c) and
 * reports Violated iff some cycle has nonpositive total weight
 * (coefficient product >= 1).
 */
inline SgcResult check_small_gain(const GainMatrix& g,
                                  SgcMode mode = SgcMode::Exhaustive,
                                  std::size_t cap = 12) {
  SgcResult r;
  // diagonal entries must be contractive in any valid matrix
  for (std::size_t i = 0; i < g.n; ++i) {
    LtId d = less_than_identity(g.at(i, i));
    if (d == LtId::No || d == LtId::NumericNo) {
      r.status = SgcStatus::Violated;
      r.witness = {i};
      return r;
    }
    if (d == LtId::NumericYes) r.numeric_only = true;
  }
  if (mode == SgcMode::Exhaustive) {
    if (g.n > cap)
      throw CapExceeded("exhaustive small-gain check capped at n = " +
                        std::to_string(cap) + "; use linear_fast");
    detail::CycleSearch cs(g);
    if (!cs.run()) {
      r.status = SgcStatus::Violated;
      r.witness = cs.violation;
      return r;
    }
    r.numeric_only = r.numeric_only || cs.numeric_only;
    r.status = r.numeric_only ? SgcStatus::Undecided : SgcStatus::Satisfied;
    return r;
  }
  for (const GainFn& f : g.entries)
    if (!f.is_linear())
      throw Error("linear_fast requires Zero or linear gain entries");
  detail::BellmanFord bf(g);
  std::vector<std::size_t> cyc = bf.nonpositive_cycle();
  if (!cyc.empty()) {
    r.status = SgcStatus::Violated;
    r.witness = std::move(cyc);
    return r;
  }
  r.status = SgcStatus::Satisfied;
  return r;
}

struct OmegaPathResult {
  bool holds = true;
  std::size_t i = 0, j = 0;  // failing entry when !holds
  bool numeric_only = false;
};

/// Checks max_j { delta_i^{-1} o gamma_ij o delta_j } < I_d entrywise.
/// Identity deltas are always admissible when every gamma_ij < I_d.
inline OmegaPathResult verify_omega_path(const GainMatrix& g,
                                         const std::vector<GainFn>& delta) {
  if (delta.size() != g.n) throw DimensionMismatch("delta count");
  std::vector<GainFn> delta_inv;
  delta_inv.reserve(g.n);
  for (const GainFn& d : delta) delta_inv.push_back(inverse(d));
  OmegaPathResult r;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) {
      const GainFn& gij = g.at(i, j);
      if (gij.is_zero()) continue;
      GainFn f = GainFn::compose_of({delta_inv[i], gij, delta[j]});
      LtId d = less_than_identity(f);
      if (d == LtId::No || d == LtId::NumericNo) {
        r.holds = false;
        r.i = i;
        r.j = j;
        return r;
      }
      if (d == LtId::NumericYes) r.numeric_only = true;
    }
  return r;
}

/// Network-level certificate assembled from the per-subsystem ones.
/// alpha_tilde is stored through its inverse alpha_hat = max_i { alpha_i^{-1}
/// o delta_i }, which is always representable and directly evaluable; the
/// forward alpha_tilde is kept alongside when the max normalizes to an
/// invertible leaf.
struct ComposedCertificate {
  GainFn sigma_tilde;
  GainFn alpha_hat = GainFn::identity();
  std::optional<GainFn> alpha_tilde;  // symbolic inverse when representable
  GainFn rho_ext_tilde = GainFn::zero();
  double eps_tilde = 0.0;
  std::vector<double> phi;
  std::vector<GainFn> delta;
};

/**
 * Composes per-subsystem certificates under the small-gain condition:
 *
 *   phi_i       = (I_d + lambda^-1)( rho_iint [o chi o (chi - I_d)^-1]
 *                   (max_j varpi_hat_ij) + eps_i ),  = eps_i when the max is 0
 *   eps_tilde   = max_i delta_i^-1(phi_i)
 *   sigma_tilde = max_{i,j} delta_i^-1 o gamma_ij o delta_j
 *   alpha_tilde = ( max_i alpha_i^-1 o delta_i )^-1
 *   rho_ext~    = max_i delta_i^-1 o rho_iext   (dominating variant)
 */
inline ComposedCertificate compose_certificates(
    const std::vector<Certificate>& certs, const std::vector<GainFn>& delta,
    const InterconnectionSpec& m_hat, const EdgeMatrix& edges,
    const GainFn& lambda = GainFn::identity(),
    const std::optional<GainFn>& chi = std::nullopt,
    std::size_t exhaustive_cap = 12) {
  const std::size_t n = certs.size();
  if (delta.size() != n) throw DimensionMismatch("delta count");

  GainMatrix g = build_gain_matrix(certs, lambda, chi, m_hat, edges);
  SgcMode mode = (n <= exhaustive_cap)     ? SgcMode::Exhaustive
                 : g.all_linear()          ? SgcMode::LinearFast
                                           : throw CapExceeded(
                                                 "network too large for the "
                                                 "exhaustive check and gains "
                                                 "are not linear");
  SgcResult sgc = check_small_gain(g, mode, exhaustive_cap);
  if (sgc.status == SgcStatus::Violated)
    throw SmallGainViolated("small-gain condition violated");
  if (sgc.status == SgcStatus::Undecided)
    throw SmallGainViolated(
        "small-gain condition undecided (numeric-only cycles)");
  OmegaPathResult omega = verify_omega_path(g, delta);
  if (!omega.holds)
    throw OmegaPathFails("omega-path condition fails at entry (" +
                         std::to_string(omega.i) + "," +
                         std::to_string(omega.j) + ")");

  ComposedCertificate cc;
  cc.delta = delta;
  cc.phi.resize(n);
  GainFn lam_term = id_plus(inverse(lambda));
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && edges[i][j]) m = std::max(m, m_hat(i, j));
    if (m == 0.0) {
      cc.phi[i] = certs[i].eps;
    } else {
      const GainFn& rho = certs[i].rho_int;
      double t;
      if (rho.is_linear()) {
        t = rho.eval(m);
      } else {
        GainFn c = detail::require_chi(chi);
        t = GainFn::compose_of({rho, c, minus_id_inverse(c)}).eval(m);
      }
      cc.phi[i] = lam_term.eval(t + certs[i].eps);
    }
  }

  std::vector<GainFn> delta_inv;
  delta_inv.reserve(n);
  for (const GainFn& d : delta) delta_inv.push_back(inverse(d));

  cc.eps_tilde = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    cc.eps_tilde = std::max(cc.eps_tilde, delta_inv[i].eval(cc.phi[i]));

  GainFn sigma = GainFn::zero();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const GainFn& gij = g.at(i, j);
      if (gij.is_zero()) continue;
      sigma = GainFn::max_of(
          {std::move(sigma),
           GainFn::compose_of({delta_inv[i], gij, delta[j]})});
    }
  cc.sigma_tilde = std::move(sigma);

  GainFn ah = GainFn::zero();
  for (std::size_t i = 0; i < n; ++i)
    ah = GainFn::max_of(
        {std::move(ah), compose(inverse(certs[i].alpha), delta[i])});
  cc.alpha_hat = std::move(ah);
  try {
    cc.alpha_tilde = inverse(cc.alpha_hat);
  } catch (const NotInvertible&) {
    cc.alpha_tilde.reset();  // max form; relation_error uses alpha_hat
  }

  GainFn re = GainFn::zero();
  for (std::size_t i = 0; i < n; ++i) {
    if (certs[i].rho_ext.is_zero()) continue;
    re = GainFn::max_of({std::move(re), compose(delta_inv[i], certs[i].rho_ext)});
  }
  cc.rho_ext_tilde = std::move(re);
  return cc;
}

/**
 * Output-mismatch error of the composed relation,
 * eps_hat = alpha_tilde^{-1}( max{ rho_ext_tilde(v), eps_tilde } )
 * for the input bound ||u_hat|| <= v. alpha_tilde^{-1} is alpha_hat, which
 * is always directly evaluable. numeric_inverse_eval (bisection, relative
 * tolerance 1e-12) serves callers that hold only a monotone alpha_tilde
 * such as a Max node, where the symbolic inverse does not exist.
 */
inline double relation_error(const ComposedCertificate& cc, double v) {
  double t = std::max(cc.rho_ext_tilde.eval(v), cc.eps_tilde);
  return cc.alpha_hat.eval(t);
}

/// Membership in the composed relation R: max_i delta_i^{-1}(V_i) must not
/// exceed max{ rho_ext_tilde(v), eps_tilde } (closed inequality).
inline bool in_relation(const ComposedCertificate& cc,
                        const std::vector<double>& v_values, double v) {
  if (v_values.size() != cc.delta.size())
    throw DimensionMismatch("per-subsystem V value count");
  double lhs = 0.0;
  for (std::size_t i = 0; i < v_values.size(); ++i)
    lhs = std::max(lhs, inverse(cc.delta[i]).eval(v_values[i]));
  return lhs <= std::max(cc.rho_ext_tilde.eval(v), cc.eps_tilde);
}

}  // namespace symgain
