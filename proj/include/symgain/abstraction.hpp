#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "symgain/errors.hpp"
#include "symgain/geometry.hpp"
#include "symgain/system.hpp"
#include "symgain/thread_pool.hpp"

namespace symgain {

struct AbstractionParams {
  double eta = 0.0;        // state quantization
  double mu = 0.0;         // external-input quantization
  double varpi_hat = 0.0;  // internal-input quantization; 0 = grids supplied
                           // externally (neighbors' output grids)
};

/// Cartesian product of per-neighbor-block grids for the internal input.
/// With no blocks there is exactly one (empty) symbol. Symbol order is
/// lexicographic by block ordinals, first block most significant.
class InternalGridSet {
 public:
  InternalGridSet() { rebuild(); }
  explicit InternalGridSet(std::vector<Grid> blocks)
      : blocks_(std::move(blocks)) {
    rebuild();
  }

  std::size_t blocks() const { return blocks_.size(); }
  const Grid& block(std::size_t b) const { return blocks_[b]; }
  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }

  /// Decodes symbol `wi` into the concatenated point `w` (resized).
  void point_into(std::size_t wi, Point& w) const {
    w.resize(dim_);
    for (std::size_t b = blocks_.size(); b-- > 0;) {
      std::size_t ord = wi % blocks_[b].size();
      wi /= blocks_[b].size();
      const IndexVec& k = blocks_[b].index_at(ord);
      double eta = blocks_[b].eta();
      std::size_t off = offsets_[b];
      for (std::size_t d = 0; d < k.size(); ++d) w[off + d] = k[d] * eta;
    }
  }

  Point point_at(std::size_t wi) const {
    Point w;
    point_into(wi, w);
    return w;
  }

  /// Symbol of a concatenated on-grid point; NotOnGrid otherwise.
  std::size_t symbol_of(const Point& w) const {
    if (w.size() != dim_) throw DimensionMismatch("internal point dim");
    std::size_t sym = 0;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const Grid& g = blocks_[b];
      IndexVec k(g.dim());
      for (std::size_t d = 0; d < g.dim(); ++d) {
        double v = w[offsets_[b] + d] / g.eta();
        double r = std::round(v);
        if (std::abs(v - r) > 1e-6)
          throw NotOnGrid("internal input coordinate not on grid");
        k[d] = static_cast<std::int64_t>(r);
      }
      std::size_t ord = g.ordinal_of(k);
      if (ord == Grid::npos) throw NotOnGrid("internal input not a grid member");
      sym = sym * g.size() + ord;
    }
    return sym;
  }

 private:
  void rebuild() {
    count_ = 1;
    dim_ = 0;
    offsets_.clear();
    for (const Grid& g : blocks_) {
      offsets_.push_back(dim_);
      count_ *= g.size();
      dim_ += g.dim();
    }
  }

  std::vector<Grid> blocks_;
  std::vector<std::size_t> offsets_;
  std::size_t count_ = 1;
  std::size_t dim_ = 0;
};

struct SuccessorQuery {
  std::vector<std::uint32_t> states;
  bool out_of_domain = false;
};

/**
 * Finite symbolic model of one subsystem: quantized state / input /
 * internal-input sets and the over-approximated transition relation
 *
 *   x_hat_d in f_hat(x_hat, u_hat, w_hat)
 *     iff  ||x_hat_d - f(x_hat, H(x_hat) + u_hat, w_hat)||_inf <= eta.
 *
 * The inequality is closed, taken literally. Successors are the grid
 * members of the state set satisfying it, in lexicographic order; when the
 * eta-ball of the image also contains lattice candidates outside the state
 * set, the triple is flagged out-of-domain (synthesis treats it as unsafe,
 * verification may still inspect the ambient candidates). The transition
 * relation is recomputed on demand; materialize() builds the contiguous
 * store. Immutable and safe to share across threads.
 */
class SymbolicModel {
 public:
  SymbolicModel(SubsystemDef sub, FeedbackFn feedback, AbstractionParams prm,
                std::vector<Grid> internal_blocks)
      : sub_(std::move(sub)),
        feedback_(std::move(feedback)),
        prm_(prm),
        states_(sub_.state_set, prm.eta),
        inputs_(sub_.input_set, prm.mu),
        internal_(std::move(internal_blocks)) {
    if (internal_.dim() != sub_.internal_dim())
      throw DimensionMismatch("internal grid dims vs subsystem blocks");
  }

  const SubsystemDef& subsystem() const { return sub_; }
  const FeedbackFn& feedback() const { return feedback_; }
  double eta() const { return prm_.eta; }
  double mu() const { return prm_.mu; }
  const Grid& state_grid() const { return states_; }
  const Grid& input_grid() const { return inputs_; }
  const InternalGridSet& internal_grid() const { return internal_; }

  std::size_t triple_count() const {
    return states_.size() * inputs_.size() * internal_.size();
  }

  /// Image point z = f(x_hat, H(x_hat) + u_hat, w_hat).
  Point image(std::size_t si, std::size_t ui, std::size_t wi) const {
    Point x = states_.point_at(si);
    Point u = combined_input(x, inputs_.point_at(ui));
    Point w = internal_.point_at(wi);
    Point z(sub_.state_dim);
    sub_.f(x.data(), u.data(), w.data(), z.data());
    return z;
  }

  Point combined_input(const Point& x, const Point& u_hat) const {
    Point u(u_hat.size(), 0.0);
    if (feedback_) feedback_(x.data(), u.data());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += u_hat[i];
    return u;
  }

  /// In-grid successors of a triple; returns the out-of-domain flag.
  /// `out` is cleared and filled in lexicographic state order.
  bool successors_into(std::size_t si, std::size_t ui, std::size_t wi,
                       std::vector<std::uint32_t>& out) const {
    Point z = image(si, ui, wi);
    return successors_of_image(z, out);
  }

  SuccessorQuery successors(std::size_t si, std::size_t ui,
                            std::size_t wi) const {
    SuccessorQuery q;
    q.out_of_domain = successors_into(si, ui, wi, q.states);
    return q;
  }

  /// Point-based query; arguments must lie on their grids.
  SuccessorQuery successors_at(const Point& x_hat, const Point& u_hat,
                               const Point& w_hat) const {
    return successors(state_symbol(x_hat), input_symbol(u_hat),
                      internal_.symbol_of(w_hat));
  }

  /// Successors of an arbitrary image point. Shared by the implicit query
  /// and by callers that precompute the combined input.
  bool successors_of_image(const Point& z,
                           std::vector<std::uint32_t>& out) const {
    out.clear();
    const double eta = prm_.eta;
    const std::size_t d = sub_.state_dim;
    bool escaped = false;
    std::int64_t klo[kMaxDim], khi[kMaxDim], k[kMaxDim];
    if (d > kMaxDim) throw Error("state dimension exceeds supported maximum");
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(z[i]))
        throw OutsideDomain("non-finite image point in abstraction");
      klo[i] = static_cast<std::int64_t>(std::ceil(z[i] / eta - 1.0));
      khi[i] = static_cast<std::int64_t>(std::floor(z[i] / eta + 1.0));
      k[i] = klo[i];
    }
    // lexicographic scan of the <= 3^d lattice candidates
    while (true) {
      bool within = true;
      for (std::size_t i = 0; i < d; ++i) {
        if (std::abs(static_cast<double>(k[i]) * eta - z[i]) > eta) {
          within = false;
          break;
        }
      }
      if (within) {
        std::size_t ord = states_.ordinal_of(k, d);
        if (ord == Grid::npos)
          escaped = true;
        else
          out.push_back(static_cast<std::uint32_t>(ord));
      }
      std::size_t i = d;
      while (i > 0) {
        if (++k[i - 1] <= khi[i - 1]) break;
        k[i - 1] = klo[i - 1];
        --i;
      }
      if (i == 0) break;
    }
    return escaped;
  }

  /// Ambient lattice candidates within eta of the image, whether or not
  /// they belong to the state set (diagnostic view used by the
  /// verification samplers; never by synthesis).
  std::vector<Point> ambient_successors(const Point& z) const {
    const double eta = prm_.eta;
    const std::size_t d = sub_.state_dim;
    std::vector<std::int64_t> klo(d), khi(d);
    for (std::size_t i = 0; i < d; ++i) {
      klo[i] = static_cast<std::int64_t>(std::ceil(z[i] / eta - 1.0));
      khi[i] = static_cast<std::int64_t>(std::floor(z[i] / eta + 1.0));
    }
    std::vector<Point> pts;
    IndexVec k(klo.begin(), klo.end());
    while (true) {
      bool within = true;
      for (std::size_t i = 0; i < d; ++i)
        if (std::abs(static_cast<double>(k[i]) * eta - z[i]) > eta) {
          within = false;
          break;
        }
      if (within) {
        Point p(d);
        for (std::size_t i = 0; i < d; ++i) p[i] = k[i] * eta;
        pts.push_back(std::move(p));
      }
      std::size_t i = d;
      while (i > 0) {
        if (++k[i - 1] <= khi[i - 1]) break;
        k[i - 1] = klo[i - 1];
        --i;
      }
      if (i == 0) break;
    }
    return pts;
  }

  std::size_t state_symbol(const Point& x) const {
    return grid_symbol(states_, x, "state");
  }
  std::size_t input_symbol(const Point& u) const {
    return grid_symbol(inputs_, u, "input");
  }

 private:
  static constexpr std::size_t kMaxDim = 16;

  static std::size_t grid_symbol(const Grid& g, const Point& x,
                                 const char* what) {
    if (x.size() != g.dim()) throw DimensionMismatch("grid point dim");
    IndexVec k(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) {
      double v = x[i] / g.eta();
      double r = std::round(v);
      if (std::abs(v - r) > 1e-6)
        throw NotOnGrid(std::string(what) + " coordinate not on grid");
      k[i] = static_cast<std::int64_t>(r);
    }
    std::size_t ord = g.ordinal_of(k);
    if (ord == Grid::npos)
      throw NotOnGrid(std::string(what) + " point not a grid member");
    return ord;
  }

  SubsystemDef sub_;
  FeedbackFn feedback_;
  AbstractionParams prm_;
  Grid states_;
  Grid inputs_;
  InternalGridSet internal_;
};

/// Builds the model; with varpi_hat > 0 each internal block is quantized
/// from its declared set, with varpi_hat == 0 the caller must use the
/// overload that supplies the neighbors' output grids.
inline SymbolicModel build_abstraction(SubsystemDef sub, FeedbackFn feedback,
                                       const AbstractionParams& prm) {
  std::vector<Grid> blocks;
  if (!sub.internal_blocks.empty()) {
    if (!(prm.varpi_hat > 0.0))
      throw EmptyGrid(
          "varpi_hat == 0: internal grids must be supplied by the caller");
    for (const InternalBlock& b : sub.internal_blocks)
      blocks.emplace_back(b.set, prm.varpi_hat);
  }
  return SymbolicModel(std::move(sub), std::move(feedback), prm,
                       std::move(blocks));
}

inline SymbolicModel build_abstraction(SubsystemDef sub, FeedbackFn feedback,
                                       const AbstractionParams& prm,
                                       std::vector<Grid> internal_blocks) {
  return SymbolicModel(std::move(sub), std::move(feedback), prm,
                       std::move(internal_blocks));
}

struct StoreStats {
  std::uint64_t n_states = 0;
  std::uint64_t n_triples = 0;
  std::uint64_t n_transitions = 0;
  std::uint64_t bytes = 0;
};

/**
 * Materialized transition relation: per-triple offsets into one contiguous
 * successor-index array, plus the out-of-domain flag bits. Triple index is
 * (state * |U| + input) * |W| + internal. Queries reproduce the implicit
 * enumeration exactly, in the same order.
 */
class TransitionStore {
 public:
  static constexpr std::uint64_t kDefaultCap = std::uint64_t{1} << 31;

  TransitionStore() = default;

  /// Two passes: a counting pass fixes the per-triple offsets, then the
  /// successor array is filled through disjoint pre-sized ranges, parallel
  /// across states.
  static TransitionStore build(const SymbolicModel& model,
                               std::uint64_t transition_cap = kDefaultCap,
                               unsigned threads = 0) {
    TransitionStore st;
    st.n_states_ = model.state_grid().size();
    st.n_inputs_ = model.input_grid().size();
    st.n_internal_ = model.internal_grid().size();
    const std::size_t triples = model.triple_count();
    if (st.n_states_ > (std::uint64_t{1} << 32))
      throw CapacityExceeded("state count exceeds 32-bit successor indices");
    st.offsets_.assign(triples + 1, 0);
    st.flags_.assign(triples, 0);

    parallel_for_chunks(0, st.n_states_, resolve_thread_count(threads),
                        [&](std::size_t s_begin, std::size_t s_end) {
      std::vector<std::uint32_t> buf;
      for (std::size_t si = s_begin; si < s_end; ++si)
        for (std::size_t ui = 0; ui < st.n_inputs_; ++ui)
          for (std::size_t wi = 0; wi < st.n_internal_; ++wi) {
            std::size_t t = (si * st.n_inputs_ + ui) * st.n_internal_ + wi;
            bool escaped = model.successors_into(si, ui, wi, buf);
            st.flags_[t] = escaped ? 1 : 0;
            st.offsets_[t + 1] = buf.size();  // counts; prefix-summed below
          }
    });
    std::uint64_t total = 0;
    for (std::size_t t = 0; t < triples; ++t) {
      total += st.offsets_[t + 1];
      st.offsets_[t + 1] = total;
      if (total > transition_cap)
        throw CapacityExceeded("transition count exceeds the configured cap");
    }
    st.successors_.resize(total);
    parallel_for_chunks(0, st.n_states_, resolve_thread_count(threads),
                        [&](std::size_t s_begin, std::size_t s_end) {
      std::vector<std::uint32_t> buf;
      for (std::size_t si = s_begin; si < s_end; ++si)
        for (std::size_t ui = 0; ui < st.n_inputs_; ++ui)
          for (std::size_t wi = 0; wi < st.n_internal_; ++wi) {
            std::size_t t = (si * st.n_inputs_ + ui) * st.n_internal_ + wi;
            model.successors_into(si, ui, wi, buf);
            std::copy(buf.begin(), buf.end(),
                      st.successors_.begin() +
                          static_cast<std::ptrdiff_t>(st.offsets_[t]));
          }
    });
    return st;
  }

  std::uint64_t n_states() const { return n_states_; }
  std::size_t n_triples() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::uint64_t n_transitions() const { return successors_.size(); }

  StoreStats stats() const {
    StoreStats s;
    s.n_states = n_states_;
    s.n_triples = n_triples();
    s.n_transitions = n_transitions();
    s.bytes = offsets_.size() * sizeof(std::uint64_t) +
              successors_.size() * sizeof(std::uint32_t) + flags_.size();
    return s;
  }

  bool out_of_domain(std::size_t t) const { return flags_[t] != 0; }

  std::pair<const std::uint32_t*, const std::uint32_t*> query(
      std::size_t t) const {
    return {successors_.data() + offsets_[t], successors_.data() + offsets_[t + 1]};
  }

  std::size_t triple_index(std::size_t si, std::size_t ui, std::size_t wi) const {
    return (si * n_inputs_ + ui) * n_internal_ + wi;
  }

  /**
   * Binary dump, little-endian: header {magic "SGAB", version u32,
   * n_states u64, n_triples u64, n_transitions u64}, then the offset
   * array (n_triples + 1 entries of u64), then the successor-index array
   * (u32). Out-of-domain triples are written with empty successor lists;
   * consumers must treat an empty list as an invalid (unsafe) triple.
   */
  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    // rebuild offsets over the synthesis-facing view (flagged -> empty)
    std::vector<std::uint64_t> off(offsets_.size(), 0);
    std::uint64_t total = 0;
    for (std::size_t t = 0; t + 1 < offsets_.size(); ++t) {
      if (!flags_[t]) total += offsets_[t + 1] - offsets_[t];
      off[t + 1] = total;
    }
    os.write("SGAB", 4);
    write_u32(os, 1);
    write_u64(os, n_states_);
    write_u64(os, n_triples());
    write_u64(os, total);
    for (std::uint64_t v : off) write_u64(os, v);
    for (std::size_t t = 0; t + 1 < offsets_.size(); ++t) {
      if (flags_[t]) continue;
      for (std::uint64_t i = offsets_[t]; i < offsets_[t + 1]; ++i)
        write_u32(os, successors_[i]);
    }
    if (!os) throw Error("write failure on " + path);
  }

  static TransitionStore load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SGAB", 4) != 0)
      throw Error("bad magic in " + path);
    std::uint32_t version = read_u32(is);
    if (version != 1) throw Error("unsupported SGAB version");
    TransitionStore st;
    st.n_states_ = read_u64(is);
    std::uint64_t triples = read_u64(is);
    std::uint64_t transitions = read_u64(is);
    st.offsets_.resize(triples + 1);
    for (auto& v : st.offsets_) v = read_u64(is);
    st.successors_.resize(transitions);
    for (auto& v : st.successors_) v = read_u32(is);
    if (!is) throw Error("truncated SGAB file");
    st.flags_.assign(triples, 0);
    for (std::size_t t = 0; t < triples; ++t)
      if (st.offsets_[t] == st.offsets_[t + 1]) st.flags_[t] = 1;
    st.n_inputs_ = 0;  // unknown after load; triple_index unavailable
    st.n_internal_ = 0;
    return st;
  }

 private:
  std::tuple<std::size_t, std::size_t, std::size_t> split(std::size_t t) const {
    std::size_t wi = t % n_internal_;
    std::size_t rest = t / n_internal_;
    return {rest / n_inputs_, rest % n_inputs_, wi};
  }

  static void write_u32(std::ofstream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  static void write_u64(std::ofstream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  static std::uint32_t read_u32(std::ifstream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  static std::uint64_t read_u64(std::ifstream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }

  std::uint64_t n_states_ = 0;
  std::size_t n_inputs_ = 0;
  std::size_t n_internal_ = 0;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> successors_;
  std::vector<std::uint8_t> flags_;
};

inline TransitionStore materialize(
    const SymbolicModel& model,
    std::uint64_t transition_cap = TransitionStore::kDefaultCap,
    unsigned threads = 0) {
  return TransitionStore::build(model, transition_cap, threads);
}

}  // namespace symgain
