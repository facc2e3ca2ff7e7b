// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "symgain/abstraction.hpp"
#include "symgain/bench.hpp"
#include "symgain/composition.hpp"
#include "symgain/linalg.hpp"
#include "symgain/synthesis.hpp"
#include "symgain/verify.hpp"

using namespace symgain;

namespace {

int g_failures = 0;

struct Criterion {
  const char* name;
  double budget_s;  // <= 0: completion only, no wall-clock gate
  bool (*fn)(std::string&);
};

void run(const Criterion& c) {
  std::string detail;
  auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = c.fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  if (ok && c.budget_s > 0.0 && secs > c.budget_s) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over budget");
  }
  std::printf("[%s] %-52s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", c.name, secs,
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++g_failures;
}

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

// ---------------------------------------------------------------------------
// 1. room-temperature composed error, closed form
bool c1_room_closed_form(std::string& detail) {
  const double a = 0.055, eta = 0.01;
  RoomTempConfig cfg;
  cfg.eta = eta;
  GeneratedNetwork net = gen_roomtemp(cfg);
  std::vector<Certificate> certs = derive_network_certificates(net);
  ComposedCertificate cc = compose_network(net, certs);
  double eps_hat = relation_error(cc, net.input_norm_bound);

  // the printed factor 2.02 stands for 2/0.99 = (I + lambda^{-1}) o psi^{-1}
  double expect = (2.0 / 0.99) * eta / (1.0 - a);
  if (!close_rel(cc.eps_tilde, expect, 1e-9)) {
    detail = "eps_tilde " + std::to_string(cc.eps_tilde) + " vs " +
             std::to_string(expect);
    return false;
  }
  if (!close_rel(eps_hat, expect, 1e-9)) {
    detail = "eps_hat deviates from eps_tilde under identity alpha";
    return false;
  }
  // two-decimal rounding of the printed constant: 2.02 * eta / (1 - a)
  if (!close_rel(eps_hat, 2.02 * eta / (1.0 - a), 2e-4)) {
    detail = "eps_hat far from the printed-constant form";
    return false;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "eps_hat=%.6f", eps_hat);
  detail = buf;
  return true;
}

// ---------------------------------------------------------------------------
// 2. size independence of the composed error
bool c2_size_independence(std::string& detail) {
  double reference = 0.0;
  for (std::size_t n : {3, 10, 100, 1000}) {
    RoomTempConfig cfg;
    cfg.n = n;
    cfg.eta = 0.01;
    GeneratedNetwork net = gen_roomtemp(cfg);
    std::vector<Certificate> certs = derive_network_certificates(net);
    ComposedCertificate cc = compose_network(net, certs);
    double eps_hat = relation_error(cc, net.input_norm_bound);
    if (n == 3) {
      reference = eps_hat;
    } else if (eps_hat != reference) {  // exact float equality
      detail = "eps_hat changed at n=" + std::to_string(n);
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// 3. small-gain checker: mode agreement + power-law cycles
bool c3_small_gain_checker(std::string& detail) {
  std::mt19937_64 rng(0x5eed3);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  std::uniform_real_distribution<double> diag(0.1, 0.95);
  std::uniform_real_distribution<double> coef(0.05, 1.4);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t n = size(rng);
    GainMatrix g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g.at(i, i) = GainFn::power(diag(rng), 1.0);
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && density(rng) < 0.55)
          g.at(i, j) = GainFn::power(coef(rng), 1.0);
    }
    SgcResult ex = check_small_gain(g, SgcMode::Exhaustive);
    SgcResult lf = check_small_gain(g, SgcMode::LinearFast);
    if (ex.status != lf.status) {
      detail = "mode disagreement at rep " + std::to_string(rep);
      return false;
    }
  }

  // two-node power matrix: satisfied iff both rotation coefficients < 1
  auto power_pair = [](double c12, double c21) {
    GainMatrix g(2);
    g.at(0, 0) = GainFn::power(0.5, 1.0);
    g.at(1, 1) = GainFn::power(0.5, 1.0);
    g.at(0, 1) = GainFn::power(c12, 0.5);
    g.at(1, 0) = GainFn::power(c21, 2.0);
    return check_small_gain(g, SgcMode::Exhaustive).status ==
           SgcStatus::Satisfied;
  };
  std::uniform_real_distribution<double> cd(0.2, 1.6);
  for (int rep = 0; rep < 200; ++rep) {
    double c12 = cd(rng), c21 = cd(rng);
    bool expect = c12 * std::sqrt(c21) < 1.0 && c21 * c12 * c12 < 1.0;
    if (power_pair(c12, c21) != expect) {
      detail = "power cycle mismatch at c12=" + std::to_string(c12) +
               " c21=" + std::to_string(c21);
      return false;
    }
  }
  if (!power_pair(0.8, 0.9)) {
    detail = "reference power matrix not satisfied";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 4. per-subsystem certificate soundness by sampling
bool c4_certificate_sampling(std::string& detail) {
  RoomTempConfig cfg;
  cfg.preset = "verified";
  cfg.eta = 0.01;
  cfg.mu = 0.01;
  GeneratedNetwork net = gen_roomtemp(cfg);
  Certificate cert = derive_nonlinear_certificate(
      net.data.front(), net.tuning.front(), cfg.eta,
      Direction::AbstractionToConcrete);
  Grid safe_out(BoxUnion::interval(19.0, 21.0), cfg.eta);
  SymbolicModel model(net.subs.front(), net.data.front().feedback,
                      {cfg.eta, cfg.mu, 0.0}, {safe_out, safe_out});
  CertificateReport rep =
      verify_certificate_empirically(net.subs.front(), model, cert, 10000);
  if (!rep.pass) {
    detail = std::to_string(rep.decay_violations) + " decay / " +
             std::to_string(rep.output_violations) +
             " output violations, worst " +
             std::to_string(rep.worst_violation);
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 5. composed one-step inequality on the three-room network
bool c5_composed_one_step(std::string& detail) {
  RoomTempConfig cfg;
  cfg.n = 3;
  cfg.preset = "verified";
  cfg.eta = 0.01;
  cfg.mu = 0.01;
  GeneratedNetwork net = gen_roomtemp(cfg);
  std::vector<Certificate> certs = derive_network_certificates(net);
  ComposedCertificate cc = compose_network(net, certs);
  NetworkSystem sys(net.subs, net.coupling);

  // abstractions with neighbor output grids as internal inputs
  Grid domain_grid(BoxUnion::interval(cfg.x_lo, cfg.x_hi), cfg.eta);
  std::vector<SymbolicModel> models;
  for (std::size_t i = 0; i < 3; ++i)
    models.emplace_back(net.subs[i], net.data[i].feedback,
                        AbstractionParams{cfg.eta, cfg.mu, 0.0},
                        std::vector<Grid>{domain_grid, domain_grid});

  std::mt19937_64 rng(0x5eed5);
  std::uniform_real_distribution<double> temp(cfg.x_lo, cfg.x_hi);
  std::uniform_int_distribution<std::size_t> pick_x(0, domain_grid.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_u(
      0, models.front().input_grid().size() - 1);
  std::uniform_real_distribution<double> jitter(-cc.eps_tilde, cc.eps_tilde);

  const double tol = 1e-9;
  std::size_t violations = 0, relation_breaks = 0, relation_checked = 0;
  for (int it = 0; it < 10000; ++it) {
    // abstract state and input per room
    std::vector<std::size_t> xi(3), ui(3);
    Point x(3), x_hat(3), u(3), u_hat(3);
    for (std::size_t i = 0; i < 3; ++i) {
      xi[i] = pick_x(rng);
      ui[i] = pick_u(rng);
      x_hat[i] = domain_grid.point_at(xi[i])[0];
      u_hat[i] = models[i].input_grid().point_at(ui[i])[0];
      // half the draws start inside the composed relation
      x[i] = (it % 2 == 0)
                 ? std::clamp(x_hat[i] + jitter(rng), cfg.x_lo, cfg.x_hi)
                 : temp(rng);
      u[i] = u_hat[i];  // refinement with H == 0
    }
    double v_before = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      v_before = std::max(v_before, std::abs(x[i] - x_hat[i]));

    Point x_d = sys.step(x, u);

    // per-room best abstract successor; internal inputs routed exactly
    // from the neighbors' abstract states (blocks ordered by source)
    double v_after = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& blocks = net.subs[i].internal_blocks;
      Point wh(2);
      for (std::size_t b = 0; b < 2; ++b)
        wh[b] = x_hat[static_cast<std::size_t>(blocks[b].source)];
      Point z = models[i].image(xi[i], ui[i],
                                models[i].internal_grid().symbol_of(wh));
      double best = std::numeric_limits<double>::infinity();
      for (const Point& cand : models[i].ambient_successors(z))
        best = std::min(best, std::abs(x_d[i] - cand[0]));
      v_after = std::max(v_after, best);
    }
    double bound = std::max(
        {cc.sigma_tilde.eval(v_before), cc.rho_ext_tilde.eval(inf_norm(u_hat)),
         cc.eps_tilde});
    if (v_after > bound + tol) ++violations;

    // relation invariance: membership propagates to the chosen successor
    if (v_before <= cc.eps_tilde) {
      ++relation_checked;
      if (v_after > cc.eps_tilde + tol) ++relation_breaks;
    }
  }
  if (violations > 0 || relation_breaks > 0) {
    detail = std::to_string(violations) + " decay violations, " +
             std::to_string(relation_breaks) + " relation breaks";
    return false;
  }
  if (relation_checked < 1000) {
    detail = "too few in-relation draws: " + std::to_string(relation_checked);
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 6. linear certificate: closed forms + randomized LMI feasibility
bool c6_linear_certificate(std::string& detail) {
  LinearSystem sys{Matrix::from_rows({{0.5}}), Matrix::from_rows({{1.0}}),
                   Matrix::from_rows({{1.0}}), Matrix()};
  LinearCertificateParams p;
  p.z = Matrix::from_rows({{1.0}});
  p.k = Matrix::from_rows({{0.0}});
  p.kappa_c = 0.5;
  p.theta = 0.5;
  p.psi_c = 0.9;
  p.delta_c = 1.0;
  p.eta = 0.1;
  if (!check_lmi(sys.a, sys.b, p.k, p.z, p.kappa_c, p.theta).holds) {
    detail = "scalar LMI expected to hold";
    return false;
  }
  Certificate cert =
      derive_linear_certificate(sys, p, Direction::AbstractionToConcrete);
  const double kh = 1.0 - std::sqrt(0.5);
  double sigma_expect = 1.0 - kh * (1.0 - 0.9);
  double eps_expect = (2.0 / (kh * 0.9)) * std::sqrt(1.0 * 2.5 / 0.5) * 0.1;
  if (!close_rel(cert.sigma.coeff(), sigma_expect, 1e-12) ||
      !close_rel(cert.eps, eps_expect, 1e-12)) {
    detail = "scalar closed forms deviate";
    return false;
  }

  // randomized: stable closed loops, Z from the discrete Lyapunov iteration,
  // (kappa_c, theta) located by bisection on theta
  std::mt19937_64 rng(0x5eed6);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n = dim(rng);
    Matrix acl(n, n), b(n, 1), k(1, n);
    for (std::size_t i = 0; i < n; ++i) {
      b(i, 0) = entry(rng);
      k(0, i) = entry(rng);
      for (std::size_t j = 0; j < n; ++j) acl(i, j) = entry(rng);
    }
    // scale the closed loop inside the unit circle (inf-norm bound)
    double scale = 0.9 / std::max(acl.inf_norm(), 1e-6);
    if (scale < 1.0) acl = acl.scaled(scale);
    Matrix a = acl - b * k;

    Matrix z = Matrix::eye(n);
    for (int it = 0; it < 500; ++it) {
      Matrix zn = acl.transpose() * z * acl + Matrix::eye(n);
      double delta = (zn - z).max_abs();
      z = zn;
      if (delta < 1e-14) break;
    }

    const double kappa_c = 0.99;
    double lo = 0.0, hi = 8.0;
    if (!check_lmi(a, b, k, z, kappa_c, 1e-9).holds) {
      detail = "Lyapunov Z fails the LMI at vanishing theta, rep " +
               std::to_string(rep);
      return false;
    }
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      if (check_lmi(a, b, k, z, kappa_c, mid).holds)
        lo = mid;
      else
        hi = mid;
    }
    double theta = lo > 0.0 ? lo : 1e-9;
    if (!check_lmi(a, b, k, z, kappa_c, theta).holds) {
      detail = "bisection missed a feasible theta, rep " + std::to_string(rep);
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// 7. end-to-end thousand-room closed loop
bool c7_thousand_rooms(std::string& detail) {
  RoomTempConfig cfg;
  cfg.n = 1000;
  cfg.eta = 0.01;
  cfg.mu = 0.01;
  RoomClosedLoopResult res = run_room_closed_loop(cfg, 19.0, 21.0, 100, 20.0);
  if (res.winning_states == 0) {
    detail = "empty winning domain";
    return false;
  }
  if (!res.sim.safe) {
    detail = "violation at step " +
             std::to_string(res.sim.first_violation_step) + ", room " +
             std::to_string(res.sim.violating_subsystem);
    return false;
  }
  for (const Point& x : res.sim.trajectory)
    for (double v : x)
      if (v < 19.0 - 1e-12 || v > 21.0 + 1e-12) {
        detail = "trajectory leaves the comfort zone";
        return false;
      }
  char buf[96];
  std::snprintf(buf, sizeof buf, "winning=%zu eps_hat=%.6f",
                res.winning_states, res.eps_hat);
  detail = buf;
  return true;
}

// ---------------------------------------------------------------------------
// 8. max-split and weak-triangle property suites
bool c8_lemma_suites(std::string& detail) {
  std::mt19937_64 rng(0x5eed8);
  std::uniform_real_distribution<double> mag(1e-9, 1e6);
  std::uniform_real_distribution<double> coeff(0.05, 5.0);
  std::uniform_real_distribution<double> expo(0.25, 3.0);
  for (int rep = 0; rep < 100000; ++rep) {
    GainFn lambda = GainFn::power(coeff(rng), rep % 2 ? expo(rng) : 1.0);
    double a = mag(rng), b = mag(rng);
    double bound =
        std::max(id_plus(lambda).eval(a), id_plus(inverse(lambda)).eval(b));
    if (a + b > bound * (1.0 + 1e-12)) {
      detail = "max-split failed at rep " + std::to_string(rep);
      return false;
    }
  }
  std::uniform_real_distribution<double> slope(1.000001, 6.0);
  std::uniform_real_distribution<double> nonneg(0.0, 1e6);
  for (int rep = 0; rep < 100000; ++rep) {
    GainFn alpha = GainFn::power(coeff(rng), expo(rng));
    GainFn chi = GainFn::power(slope(rng), 1.0);
    double a = nonneg(rng), b = nonneg(rng);
    double lhs = alpha.eval(a + b);
    double rhs =
        compose(alpha, chi).eval(a) +
        GainFn::compose_of({alpha, chi, minus_id_inverse(chi)}).eval(b);
    if (lhs > rhs * (1.0 + 1e-12)) {
      detail = "weak-triangle failed at rep " + std::to_string(rep);
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// 9. abstraction soundness against the brute-force oracle
bool c9_abstraction_oracle(std::string& detail) {
  std::mt19937_64 rng(0x5eed9);
  std::uniform_real_distribution<double> lo_d(-3.0, 0.0), len_d(0.5, 4.0);
  std::uniform_real_distribution<double> coef(-1.5, 1.5);
  std::vector<std::uint32_t> got;
  for (int rep = 0; rep < 25; ++rep) {
    double xlo = lo_d(rng), xhi = xlo + len_d(rng);
    double eta = (xhi - xlo) / 60.0;
    double a = coef(rng), b = 0.5 * coef(rng), c = 0.4 * coef(rng);
    SubsystemDef sub;
    sub.index = 0;
    sub.state_dim = 1;
    sub.input_dim = 1;
    sub.state_set = BoxUnion::interval(xlo, xhi);
    sub.input_set = BoxUnion::interval(-1.0, 1.0);
    sub.output_blocks.push_back({0, 1, sub.state_set,
                                 [](const double* x, double* y) { y[0] = x[0]; }});
    sub.f = [a, b, c](const double* x, const double* u, const double*,
                      double* out) { out[0] = a * x[0] + b + c * u[0]; };
    SymbolicModel m = build_abstraction(sub, FeedbackFn{}, {eta, 0.25, 0.0});
    const Grid& g = m.state_grid();
    if (g.size() > 100) {
      detail = "test grid too large";
      return false;
    }
    for (std::size_t si = 0; si < g.size(); ++si)
      for (std::size_t ui = 0; ui < m.input_grid().size(); ++ui) {
        Point z = m.image(si, ui, 0);
        bool esc = m.successors_into(si, ui, 0, got);
        std::vector<std::uint32_t> want;
        for (std::size_t t = 0; t < g.size(); ++t)
          if (std::abs(g.point_at(t)[0] - z[0]) <= eta)
            want.push_back(static_cast<std::uint32_t>(t));
        bool esc_want = false;
        std::int64_t klo = static_cast<std::int64_t>(std::ceil(z[0] / eta - 1.0));
        std::int64_t khi = static_cast<std::int64_t>(std::floor(z[0] / eta + 1.0));
        for (std::int64_t kk = klo; kk <= khi; ++kk) {
          if (std::abs(kk * eta - z[0]) > eta) continue;
          IndexVec key = {kk};
          if (g.ordinal_of(key) == Grid::npos) esc_want = true;
        }
        if (got != want || esc != esc_want) {
          detail = "successor mismatch at state " + std::to_string(si);
          return false;
        }
      }
  }
  return true;
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"1 room composed error closed form", 1.0, c1_room_closed_form},
      {"2 size independence of eps_hat", 10.0, c2_size_independence},
      {"3 small-gain checker agreement + power cycles", 30.0,
       c3_small_gain_checker},
      {"4 one-step certificate sampling (verified preset)", 30.0,
       c4_certificate_sampling},
      {"5 composed one-step inequality (3 rooms)", 60.0, c5_composed_one_step},
      {"6 linear certificate + randomized LMI", 30.0, c6_linear_certificate},
      {"7 thousand-room abstraction, synthesis, closed loop", 0.0,
       c7_thousand_rooms},
      {"8 max-split / weak-triangle property suites", 10.0, c8_lemma_suites},
      {"9 abstraction soundness vs brute force", 10.0, c9_abstraction_oracle},
  };
  for (const Criterion& c : criteria) run(c);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
