#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "symgain/abstraction.hpp"
#include "symgain/certificates.hpp"
#include "symgain/geometry.hpp"
#include "symgain/system.hpp"

namespace symgain {

inline Point uniform_point(const BoxUnion& s, std::mt19937_64& rng) {
  if (s.empty()) return {};
  std::uniform_int_distribution<std::size_t> pick(0, s.boxes.size() - 1);
  const Box& b = s.boxes[pick(rng)];
  Point x(b.dim());
  for (std::size_t i = 0; i < b.dim(); ++i) {
    std::uniform_real_distribution<double> d(b.lo[i], b.hi[i]);
    x[i] = d(rng);
  }
  return x;
}

struct StabilizabilityReport {
  bool pass = true;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_violation = 0.0;
  // witnessing tuple of the worst violation
  Point x, x_prime, u, u_prime, w, w_prime;
};

/**
 * Samples the two incremental-stabilizability inequalities on random
 * tuples (x, x', u, u', w, w') from the declared sets, with tolerance
 * 1e-9. Report-only: never throws on violations.
 */
inline StabilizabilityReport verify_stabilizability_data(
    const SubsystemDef& sub, const IncrementalStabilizabilityData& data,
    std::size_t samples, std::uint64_t seed = 0x5eed5) {
  std::mt19937_64 rng(seed);
  const double tol = 1e-9;
  StabilizabilityReport rep;
  rep.samples = samples;

  // sampling bounds for the internal input: product of the (first) boxes
  // of the declared blocks
  BoxUnion wset;
  {
    std::vector<double> lo, hi;
    for (const InternalBlock& blk : sub.internal_blocks) {
      const Box& b = blk.set.boxes.front();
      lo.insert(lo.end(), b.lo.begin(), b.lo.end());
      hi.insert(hi.end(), b.hi.begin(), b.hi.end());
    }
    if (!lo.empty()) wset = BoxUnion(Box(lo, hi));
  }

  Point hu(sub.input_dim), hup(sub.input_dim);
  auto record = [&](double viol, const Point& x, const Point& xp,
                    const Point& u, const Point& up, const Point& w,
                    const Point& wp) {
    ++rep.violations;
    rep.pass = false;
    if (viol > rep.worst_violation) {
      rep.worst_violation = viol;
      rep.x = x;
      rep.x_prime = xp;
      rep.u = u;
      rep.u_prime = up;
      rep.w = w;
      rep.w_prime = wp;
    }
  };

  for (std::size_t it = 0; it < samples; ++it) {
    Point x = uniform_point(sub.state_set, rng);
    Point xp = uniform_point(sub.state_set, rng);
    Point u = uniform_point(sub.input_set, rng);
    Point up = uniform_point(sub.input_set, rng);
    Point w = wset.empty() ? Point{} : uniform_point(wset, rng);
    Point wp = wset.empty() ? Point{} : uniform_point(wset, rng);

    double g = data.form.eval(x, xp);
    double dist = inf_dist(x, xp);
    double lo = data.alpha_lower.eval(dist), hi = data.alpha_upper.eval(dist);
    if (g < lo - tol || g > hi + tol)
      record(std::max(lo - g, g - hi), x, xp, u, up, w, wp);

    // apply the feedback and step both trajectories
    Point fu = u, fup = up;
    if (data.feedback) {
      std::fill(hu.begin(), hu.end(), 0.0);
      std::fill(hup.begin(), hup.end(), 0.0);
      data.feedback(x.data(), hu.data());
      data.feedback(xp.data(), hup.data());
      for (std::size_t i = 0; i < fu.size(); ++i) fu[i] += hu[i];
      for (std::size_t i = 0; i < fup.size(); ++i) fup[i] += hup[i];
    }
    Point xd = sub.step(x, fu, w);
    Point xdp = sub.step(xp, fup, wp);
    double lhs = data.form.eval(xd, xdp) - g;
    double rhs = -data.kappa.eval(g) + data.gamma_int.eval(inf_dist(w, wp)) +
                 data.gamma_ext.eval(inf_dist(u, up));
    if (lhs > rhs + tol) record(lhs - rhs, x, xp, u, up, w, wp);
  }
  return rep;
}

struct CertificateReport {
  bool pass = true;
  std::size_t samples = 0;
  std::size_t decay_violations = 0;
  std::size_t output_violations = 0;
  double worst_violation = 0.0;
};

/**
 * Samples the one-step certificate inequality: draw (x, x_hat, u_hat, w,
 * w_hat), refine u through the certificate, step the concrete subsystem
 * and require an abstract successor x_hat_d with
 *   V(x_d, x_hat_d) <= max{ sigma(V), rho_int(||w - w_hat||),
 *                           rho_ext(||u_hat||), eps } + 1e-9,
 * plus the output inequality alpha(||h(x) - h(x_hat)||) <= V(x, x_hat).
 * The existential successor is resolved over the ambient lattice
 * candidates, so boundary triples are judged on the inequality itself
 * rather than on the state box. Every fourth draw aligns x with x_hat and
 * w with w_hat exactly, exercising the quantization budget alone.
 */
inline CertificateReport verify_certificate_empirically(
    const SubsystemDef& sub, const SymbolicModel& model,
    const Certificate& cert, std::size_t samples,
    std::uint64_t seed = 0xcafe5) {
  std::mt19937_64 rng(seed);
  const double tol = 1e-9;
  CertificateReport rep;
  rep.samples = samples;

  const Grid& xg = model.state_grid();
  const Grid& ug = model.input_grid();
  const InternalGridSet& wg = model.internal_grid();
  std::uniform_int_distribution<std::size_t> pick_x(0, xg.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_u(0, ug.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_w(0, wg.size() - 1);

  BoxUnion wset;
  {
    std::vector<double> lo, hi;
    for (const InternalBlock& blk : sub.internal_blocks) {
      const Box& b = blk.set.boxes.front();
      lo.insert(lo.end(), b.lo.begin(), b.lo.end());
      hi.insert(hi.end(), b.hi.begin(), b.hi.end());
    }
    if (!lo.empty()) wset = BoxUnion(Box(lo, hi));
  }

  auto full_output = [&](const Point& x) {
    Point y;
    for (const OutputBlock& b : sub.output_blocks) {
      Point yb(b.dim);
      b.h(x.data(), yb.data());
      y.insert(y.end(), yb.begin(), yb.end());
    }
    return y;
  };

  for (std::size_t it = 0; it < samples; ++it) {
    const bool aligned = (it % 4 == 0);
    std::size_t si = pick_x(rng), ui = pick_u(rng), wi = pick_w(rng);
    Point x_hat = xg.point_at(si);
    Point u_hat = ug.point_at(ui);
    Point w_hat = wg.point_at(wi);
    Point x = aligned ? x_hat : uniform_point(sub.state_set, rng);
    Point w = aligned || wset.empty() ? w_hat : uniform_point(wset, rng);

    double v = cert.vform.eval(x, x_hat);
    Point u = cert.refine(x, x_hat, u_hat);
    Point xd = sub.step(x, u, w);
    Point z = model.image(si, ui, wi);

    double best = std::numeric_limits<double>::infinity();
    for (const Point& cand : model.ambient_successors(z))
      best = std::min(best, cert.vform.eval(xd, cand));

    double bound = cert.decay_bound(v, inf_dist(w, w_hat), inf_norm(u_hat));
    if (best > bound + tol) {
      ++rep.decay_violations;
      rep.pass = false;
      rep.worst_violation = std::max(rep.worst_violation, best - bound);
    }

    double hdist = inf_dist(full_output(x), full_output(x_hat));
    if (cert.alpha.eval(hdist) > v + tol) {
      ++rep.output_violations;
      rep.pass = false;
    }
  }
  return rep;
}

}  // namespace symgain
