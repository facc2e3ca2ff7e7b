#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "symgain/abstraction.hpp"
#include "symgain/bench.hpp"

using namespace symgain;

namespace {

/// 1-D subsystem whose image point is the input itself: z = u. Lets the
/// tests steer the successor computation to arbitrary image points.
SubsystemDef steerable(double x_lo, double x_hi, double u_lo, double u_hi) {
  SubsystemDef s;
  s.index = 0;
  s.state_dim = 1;
  s.input_dim = 1;
  s.state_set = BoxUnion::interval(x_lo, x_hi);
  s.input_set = BoxUnion::interval(u_lo, u_hi);
  s.output_blocks.push_back({0, 1, BoxUnion::interval(x_lo, x_hi),
                             [](const double* x, double* y) { y[0] = x[0]; }});
  s.f = [](const double*, const double* u, const double*, double* out) {
    out[0] = u[0];
  };
  return s;
}

/// Brute-force oracle: all grid states within the closed eta-ball of z,
/// plus the escape flag from scanning the ambient multiples.
std::pair<std::vector<std::uint32_t>, bool> brute_successors(
    const Grid& g, const Point& z, double eta) {
  std::vector<std::uint32_t> in_grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (inf_dist(g.point_at(i), z) <= eta)
      in_grid.push_back(static_cast<std::uint32_t>(i));
  }
  // ambient scan: product of per-axis candidate multiples
  bool escaped = false;
  std::vector<std::int64_t> klo(z.size()), khi(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    klo[i] = static_cast<std::int64_t>(std::ceil(z[i] / eta - 1.0));
    khi[i] = static_cast<std::int64_t>(std::floor(z[i] / eta + 1.0));
  }
  IndexVec k(klo.begin(), klo.end());
  while (true) {
    bool within = true;
    for (std::size_t i = 0; i < z.size(); ++i)
      if (std::abs(k[i] * eta - z[i]) > eta) within = false;
    if (within && g.ordinal_of(k) == Grid::npos) escaped = true;
    std::size_t i = k.size();
    while (i > 0) {
      if (++k[i - 1] <= khi[i - 1]) break;
      k[i - 1] = klo[i - 1];
      --i;
    }
    if (i == 0) break;
  }
  return {in_grid, escaped};
}

}  // namespace

TEST_CASE("successor sets on the unit interval") {
  SymbolicModel m = build_abstraction(steerable(0.0, 1.0, -0.5, 1.5),
                                      FeedbackFn{}, {0.5, 0.25, 0.0});
  const Grid& g = m.state_grid();
  REQUIRE(g.size() == 3);

  std::vector<std::uint32_t> out;
  SECTION("image on a grid point keeps the whole closed ball") {
    bool esc = m.successors_of_image({0.5}, out);
    CHECK_FALSE(esc);
    REQUIRE(out.size() == 3);  // 0, 0.5, 1.0 all within 0.5
  }
  SECTION("interior image point") {
    bool esc = m.successors_of_image({0.2}, out);
    CHECK_FALSE(esc);
    REQUIRE(out.size() == 2);  // 0 and 0.5; 1.0 is 0.8 away
    CHECK(g.point_at(out[0])[0] == Catch::Approx(0.0));
    CHECK(g.point_at(out[1])[0] == Catch::Approx(0.5));
  }
  SECTION("escaping image point is flagged but keeps in-set successors") {
    bool esc = m.successors_of_image({1.2}, out);
    CHECK(esc);  // candidate 1.5 lies outside the state set
    REQUIRE(out.size() == 1);
    CHECK(g.point_at(out[0])[0] == Catch::Approx(1.0));
  }
  SECTION("on-grid fixed point contains itself") {
    std::size_t si = m.state_symbol({0.5});
    SuccessorQuery q = m.successors(si, m.input_symbol({0.5}), 0);
    bool found = false;
    for (auto t : q.states) found |= t == si;
    CHECK(found);
  }
  SECTION("off-grid query point raises NotOnGrid") {
    CHECK_THROWS_AS(m.successors_at({0.3}, {0.0}, {}), NotOnGrid);
    CHECK_THROWS_AS(m.successors_at({0.5}, {0.13}, {}), NotOnGrid);
  }
}

TEST_CASE("exhaustive agreement with the brute-force scan") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> lo_d(-2.0, 0.0), len_d(0.5, 3.0);
  std::uniform_real_distribution<double> coef(-1.2, 1.2), shift(-0.5, 0.5);
  std::vector<std::uint32_t> out;
  for (int rep = 0; rep < 10; ++rep) {
    double xlo = lo_d(rng), xhi = xlo + len_d(rng);
    double eta = (xhi - xlo) / 40.0;  // <= 100 states
    double a = coef(rng), b = shift(rng);
    SubsystemDef sub = steerable(xlo, xhi, -1.0, 1.0);
    sub.f = [a, b](const double* x, const double* u, const double*,
                   double* out2) { out2[0] = a * x[0] + b + 0.3 * u[0]; };
    SymbolicModel m = build_abstraction(sub, FeedbackFn{}, {eta, 0.5, 0.0});
    const Grid& g = m.state_grid();
    REQUIRE(g.size() <= 100);
    for (std::size_t si = 0; si < g.size(); ++si) {
      for (std::size_t ui = 0; ui < m.input_grid().size(); ++ui) {
        Point z = m.image(si, ui, 0);
        bool esc = m.successors_of_image(z, out);
        auto [want, esc_want] = brute_successors(g, z, eta);
        REQUIRE(out == want);
        REQUIRE(esc == esc_want);
      }
    }
  }
}

TEST_CASE("successor count bounded by 3^n") {
  SubsystemDef s;
  s.index = 0;
  s.state_dim = 2;
  s.input_dim = 1;
  s.state_set = BoxUnion(Box({0.0, 0.0}, {1.0, 1.0}));
  s.input_set = BoxUnion::interval(0.0, 1.0);
  s.output_blocks.push_back({0, 2, s.state_set,
                             [](const double* x, double* y) {
                               y[0] = x[0];
                               y[1] = x[1];
                             }});
  s.f = [](const double* x, const double* u, const double*, double* out) {
    out[0] = 0.5 * x[0] + 0.1 * u[0];
    out[1] = 0.5 * x[1] + 0.2;
  };
  SymbolicModel m = build_abstraction(s, FeedbackFn{}, {0.25, 0.5, 0.0});
  std::vector<std::uint32_t> out;
  for (std::size_t si = 0; si < m.state_grid().size(); ++si)
    for (std::size_t ui = 0; ui < m.input_grid().size(); ++ui) {
      m.successors_into(si, ui, 0, out);
      REQUIRE(out.size() <= 9);
      // lexicographic order
      for (std::size_t i = 0; i + 1 < out.size(); ++i)
        REQUIRE(out[i] < out[i + 1]);
    }
}

TEST_CASE("soundness: some successor within eta unless flagged") {
  RoomTempConfig cfg;
  cfg.eta = 0.05;
  cfg.mu = 0.1;
  GeneratedNetwork net = gen_roomtemp(cfg);
  Grid nb(BoxUnion::interval(17.0, 23.0), 0.5);  // coarse neighbor grid
  SymbolicModel m(net.subs.front(), net.data.front().feedback,
                  {cfg.eta, cfg.mu, 0.0}, {nb, nb});
  std::vector<std::uint32_t> out;
  std::size_t flagged = 0, total = 0;
  for (std::size_t si = 0; si < m.state_grid().size(); si += 7)
    for (std::size_t ui = 0; ui < m.input_grid().size(); ++ui)
      for (std::size_t wi = 0; wi < m.internal_grid().size(); wi += 5) {
        bool esc = m.successors_into(si, ui, wi, out);
        ++total;
        if (esc) {
          ++flagged;
        } else {
          REQUIRE(!out.empty());
          Point z = m.image(si, ui, wi);
          REQUIRE(inf_dist(m.state_grid().point_at(out.front()), z) <=
                  cfg.eta);
        }
      }
  CHECK(total > 1000);
  CHECK(flagged > 0);  // hot corner escapes the box with full heating
}

TEST_CASE("materialized store matches the implicit enumeration") {
  RoomTempConfig cfg;
  cfg.eta = 0.25;
  cfg.mu = 0.1;
  GeneratedNetwork net = gen_roomtemp(cfg);
  Grid nb(BoxUnion::interval(19.0, 21.0), 0.25);
  SymbolicModel m(net.subs.front(), net.data.front().feedback,
                  {cfg.eta, cfg.mu, 0.0}, {nb, nb});

  TransitionStore st = materialize(m);
  StoreStats stats = st.stats();
  CHECK(stats.n_states == m.state_grid().size());
  CHECK(stats.n_triples == m.triple_count());

  std::vector<std::uint32_t> out;
  std::uint64_t count = 0;
  for (std::size_t si = 0; si < m.state_grid().size(); ++si)
    for (std::size_t ui = 0; ui < m.input_grid().size(); ++ui)
      for (std::size_t wi = 0; wi < m.internal_grid().size(); ++wi) {
        bool esc = m.successors_into(si, ui, wi, out);
        count += out.size();
        std::size_t t = st.triple_index(si, ui, wi);
        REQUIRE(st.out_of_domain(t) == esc);
        auto [b, e] = st.query(t);
        REQUIRE(static_cast<std::size_t>(e - b) == out.size());
        for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(b[i] == out[i]);
      }
  CHECK(stats.n_transitions == count);

  SECTION("tiny cap overflows") {
    CHECK_THROWS_AS(materialize(m, 10), CapacityExceeded);
  }

  SECTION("binary round trip keeps the synthesis-facing relation") {
    std::string path = "store_roundtrip.sgab";
    st.save(path);
    TransitionStore ld = TransitionStore::load(path);
    REQUIRE(ld.n_triples() == st.n_triples());
    for (std::size_t t = 0; t < st.n_triples(); ++t) {
      auto [b, e] = st.query(t);
      auto [lb, le] = ld.query(t);
      if (st.out_of_domain(t)) {
        REQUIRE(le == lb);  // flagged triples persist as empty lists
        REQUIRE(ld.out_of_domain(t));
      } else {
        REQUIRE(le - lb == e - b);
        for (std::ptrdiff_t i = 0; i < e - b; ++i) REQUIRE(lb[i] == b[i]);
      }
    }
    std::remove(path.c_str());
  }
}

TEST_CASE("degenerate internal symbol for decoupled subsystems") {
  SymbolicModel m = build_abstraction(steerable(0.0, 1.0, 0.0, 1.0),
                                      FeedbackFn{}, {0.25, 0.25, 0.0});
  CHECK(m.internal_grid().size() == 1);
  CHECK(m.internal_grid().dim() == 0);
  CHECK(m.triple_count() == m.state_grid().size() * m.input_grid().size());
  SuccessorQuery q = m.successors(0, 2, 0);
  CHECK_FALSE(q.states.empty());
}

TEST_CASE("feedback enters the image point") {
  SubsystemDef sub = steerable(0.0, 1.0, 0.0, 1.0);
  sub.f = [](const double* x, const double* u, const double*, double* out) {
    out[0] = x[0] * 0.0 + u[0];  // u is H(x) + u_hat
  };
  FeedbackFn h = [](const double* x, double* u) { u[0] = 0.5 * x[0]; };
  SymbolicModel m = build_abstraction(sub, h, {0.25, 0.25, 0.0});
  Point z = m.image(m.state_symbol({1.0}), m.input_symbol({0.25}), 0);
  CHECK(z[0] == Catch::Approx(0.75));
}

TEST_CASE("abstraction parameter validation") {
  CHECK_THROWS_AS(build_abstraction(steerable(0.0, 1.0, 0.0, 1.0),
                                    FeedbackFn{}, {2.0, 0.25, 0.0}),
                  StepTooLarge);
  CHECK_THROWS_AS(build_abstraction(steerable(0.0, 1.0, 0.0, 1.0),
                                    FeedbackFn{}, {0.25, 3.0, 0.0}),
                  StepTooLarge);
  RoomTempConfig cfg;
  GeneratedNetwork net = gen_roomtemp(cfg);
  // networked subsystem with varpi_hat = 0 and no supplied grids
  CHECK_THROWS_AS(build_abstraction(net.subs.front(),
                                    net.data.front().feedback,
                                    {0.25, 0.1, 0.0}),
                  EmptyGrid);
}
