#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "symgain/abstraction.hpp"
#include "symgain/certificates.hpp"
#include "symgain/errors.hpp"
#include "symgain/geometry.hpp"
#include "symgain/system.hpp"
#include "symgain/thread_pool.hpp"

namespace symgain {

/// Safety objective: stay in the safe set forever (maximal fixed point).
struct SafetySpec {
  BoxUnion safe;
};

/**
 * Safety controller: map from winning grid states to their non-empty sets
 * of allowed inputs (ascending input ordinals, so the lexicographically
 * smallest input is first). Carries the grids it indexes into.
 */
class Controller {
 public:
  Controller() = default;
  Controller(Grid states, Grid inputs, std::vector<std::uint64_t> offsets,
             std::vector<std::uint32_t> allowed)
      : states_(std::move(states)),
        inputs_(std::move(inputs)),
        offsets_(std::move(offsets)),
        allowed_(std::move(allowed)) {}

  const Grid& state_grid() const { return states_; }
  const Grid& input_grid() const { return inputs_; }

  bool winning(std::size_t si) const {
    return offsets_[si + 1] > offsets_[si];
  }

  std::pair<const std::uint32_t*, const std::uint32_t*> allowed(
      std::size_t si) const {
    return {allowed_.data() + offsets_[si], allowed_.data() + offsets_[si + 1]};
  }

  std::size_t winning_count() const {
    std::size_t c = 0;
    for (std::size_t si = 0; si + 1 < offsets_.size(); ++si)
      if (winning(si)) ++c;
    return c;
  }

  /// Binary dump, little-endian: {magic "SGCT", version u32, n_states u64},
  /// per-state offsets (u64, n_states + 1) and the allowed-input index
  /// list (u32). Non-winning states have empty lists.
  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os.write("SGCT", 4);
    std::uint32_t version = 1;
    os.write(reinterpret_cast<const char*>(&version), sizeof version);
    std::uint64_t n = states_.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (std::uint64_t v : offsets_)
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    for (std::uint32_t v : allowed_)
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    if (!os) throw Error("write failure on " + path);
  }

  static Controller load(const std::string& path, Grid states, Grid inputs) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SGCT", 4) != 0)
      throw Error("bad magic in " + path);
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof version);
    if (version != 1) throw Error("unsupported SGCT version");
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    if (n != states.size()) throw DimensionMismatch("controller state count");
    std::vector<std::uint64_t> offsets(n + 1);
    for (auto& v : offsets) is.read(reinterpret_cast<char*>(&v), sizeof v);
    std::vector<std::uint32_t> allowed(offsets.back());
    for (auto& v : allowed) is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw Error("truncated SGCT file");
    return Controller(std::move(states), std::move(inputs), std::move(offsets),
                      std::move(allowed));
  }

 private:
  Grid states_;
  Grid inputs_;
  std::vector<std::uint64_t> offsets_;  // n_states + 1
  std::vector<std::uint32_t> allowed_;
};

namespace detail {

class BitSet {
 public:
  explicit BitSet(std::size_t bits = 0) : bits_(bits), words_((bits + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  bool subset_of(const BitSet& o) const {
    for (std::size_t w = 0; w < words_.size(); ++w)
      if (words_[w] & ~o.words_[w]) return false;
    return true;
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (std::uint64_t w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }
  std::size_t size() const { return bits_; }

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace detail

/**
 * Maximal controlled-invariant fixed point for safety under assume-
 * guarantee internal inputs:
 *
 *   W_0     = Safe  intersected with the state grid
 *   W_{k+1} = { x : exists u, for all w in assumed_W:
 *               the triple is in-domain and all successors stay in W_k }
 *
 * The universal quantifier over assumed_W is resolved once per
 * (state, input) pair by accumulating the successor union (and the
 * out-of-domain flag) in a first pass; the monotone iteration then runs on
 * those unions. Pairs whose eta-ball leaves the state set are unsafe.
 * Throws EmptyWinningSet (with the emptying iteration) when no state
 * survives.
 */
inline Controller synthesize_safety(const SymbolicModel& model,
                                    const SafetySpec& spec,
                                    const InternalGridSet& assumed_w,
                                    unsigned threads = 0) {
  const Grid& states = model.state_grid();
  const Grid& inputs = model.input_grid();
  const std::size_t ns = states.size(), nu = inputs.size();
  const std::size_t nw = assumed_w.size();
  if (assumed_w.dim() != model.subsystem().internal_dim())
    throw DimensionMismatch("assumed internal grid dimension");

  // W_0
  detail::BitSet win(ns);
  std::size_t initial = 0;
  for (std::size_t si = 0; si < ns; ++si) {
    if (spec.safe.contains(states.point_at(si), 1e-9 * states.eta())) {
      win.set(si);
      ++initial;
    }
  }
  if (initial == 0)
    throw EmptyWinningSet("safe set contains no grid states", 0);

  // per-(state, input) successor unions under the assumed internal range
  std::vector<detail::BitSet> unions(ns * nu, detail::BitSet(ns));
  std::vector<std::uint8_t> valid(ns * nu, 1);
  const SubsystemDef& sub = model.subsystem();
  const FeedbackFn& fb = model.feedback();

  parallel_for_chunks(0, ns, resolve_thread_count(threads),
                      [&](std::size_t s_begin, std::size_t s_end) {
    Point w(assumed_w.dim());
    Point z(sub.state_dim);
    std::vector<std::uint32_t> buf;
    for (std::size_t si = s_begin; si < s_end; ++si) {
      Point x = states.point_at(si);
      for (std::size_t ui = 0; ui < nu; ++ui) {
        Point u = model.combined_input(x, inputs.point_at(ui));
        detail::BitSet& acc = unions[si * nu + ui];
        for (std::size_t wi = 0; wi < nw; ++wi) {
          assumed_w.point_into(wi, w);
          sub.f(x.data(), u.data(), w.data(), z.data());
          bool escaped = model.successors_of_image(z, buf);
          if (escaped) {
            valid[si * nu + ui] = 0;
            break;
          }
          for (std::uint32_t t : buf) acc.set(t);
        }
      }
    }
  });

  // monotone shrink to the fixed point
  std::size_t iteration = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    ++iteration;
    detail::BitSet next(ns);
    std::size_t remaining = 0;
    for (std::size_t si = 0; si < ns; ++si) {
      if (!win.get(si)) continue;
      bool ok = false;
      for (std::size_t ui = 0; ui < nu && !ok; ++ui)
        ok = valid[si * nu + ui] && unions[si * nu + ui].subset_of(win);
      if (ok) {
        next.set(si);
        ++remaining;
      } else {
        changed = true;
      }
    }
    win = next;
    if (remaining == 0)
      throw EmptyWinningSet("winning set emptied", iteration);
  }

  std::vector<std::uint64_t> offsets(ns + 1, 0);
  std::vector<std::uint32_t> allowed;
  for (std::size_t si = 0; si < ns; ++si) {
    if (win.get(si)) {
      for (std::size_t ui = 0; ui < nu; ++ui)
        if (valid[si * nu + ui] && unions[si * nu + ui].subset_of(win))
          allowed.push_back(static_cast<std::uint32_t>(ui));
    }
    offsets[si + 1] = allowed.size();
  }
  return Controller(states, inputs, std::move(offsets), std::move(allowed));
}

/// Concrete input at state x: quantize to the grid, look up the allowed
/// abstract inputs (the lexicographically smallest is chosen) and refine
/// through the certificate's rule.
inline Point refine_control(const Controller& ctrl, const Certificate& cert,
                            const Point& x) {
  std::size_t si;
  try {
    si = ctrl.state_grid().nearest(x);
  } catch (const OutsideDomain&) {
    throw OutsideWinningDomain("state outside the quantizer domain");
  }
  if (!ctrl.winning(si))
    throw OutsideWinningDomain("quantized state not in the winning domain");
  auto [begin, end] = ctrl.allowed(si);
  (void)end;
  Point u_hat = ctrl.input_grid().point_at(*begin);
  Point x_hat = ctrl.state_grid().point_at(si);
  return cert.refine(x, x_hat, u_hat);
}

struct SimulationResult {
  std::vector<Point> trajectory;  // network states, steps + 1 entries
  bool safe = true;
  std::size_t first_violation_step = 0;
  std::size_t violating_subsystem = 0;
};

/**
 * Closed loop of the concrete network under the refined per-subsystem
 * controllers. Records the trajectory and the first violation of the
 * per-subsystem safe sets, if any. OutsideWinningDomain is rethrown with
 * the step index.
 */
inline SimulationResult simulate_closed_loop(
    const NetworkSystem& net, const std::vector<const Controller*>& ctrls,
    const std::vector<Certificate>& certs,
    const std::vector<BoxUnion>& safe_sets, const Point& x0,
    std::size_t steps) {
  const std::size_t n = net.size();
  if (ctrls.size() != n || certs.size() != n || safe_sets.size() != n)
    throw DimensionMismatch("per-subsystem controller/certificate counts");
  SimulationResult res;
  res.trajectory.reserve(steps + 1);
  res.trajectory.push_back(x0);
  Point x = x0;

  auto check_safe = [&](const Point& state, std::size_t k) {
    if (!res.safe) return;
    for (std::size_t i = 0; i < n; ++i) {
      if (!safe_sets[i].contains(net.slice_state(state, static_cast<int>(i)),
                                 1e-9)) {
        res.safe = false;
        res.first_violation_step = k;
        res.violating_subsystem = i;
        return;
      }
    }
  };
  check_safe(x, 0);

  for (std::size_t k = 0; k < steps; ++k) {
    Point u;
    u.reserve(net.input_dim());
    for (std::size_t i = 0; i < n; ++i) {
      Point xi = net.slice_state(x, static_cast<int>(i));
      Point ui;
      try {
        ui = refine_control(*ctrls[i], certs[i], xi);
      } catch (const OutsideWinningDomain& e) {
        throw OutsideWinningDomain(std::string(e.what()) + " (subsystem " +
                                   std::to_string(i) + ", step " +
                                   std::to_string(k) + ")");
      }
      u.insert(u.end(), ui.begin(), ui.end());
    }
    x = net.step(x, u);
    res.trajectory.push_back(x);
    check_safe(x, k + 1);
  }
  return res;
}

}  // namespace symgain
