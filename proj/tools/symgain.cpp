// symgain: compositional symbolic abstraction, small-gain certification and
// safety synthesis for networks of discrete-time subsystems.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "symgain/abstraction.hpp"
#include "symgain/bench.hpp"
#include "symgain/composition.hpp"
#include "symgain/config.hpp"
#include "symgain/synthesis.hpp"
#include "symgain/verify.hpp"

namespace {

using namespace symgain;

constexpr int kExitOk = 0;
constexpr int kExitSgcViolated = 2;
constexpr int kExitEmptyController = 3;
constexpr int kExitUndecided = 4;
constexpr int kExitUsage = 64;

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  return out;
}

/// Abstraction of one subsystem of a configured network. With varpi > 0
/// the internal blocks are quantized from their declared sets; with
/// varpi == 0 they default to the neighbors' output grids.
SymbolicModel model_for_sub(const NetworkConfig& cfg, std::size_t sub_index,
                            std::optional<double> safe_lo,
                            std::optional<double> safe_hi) {
  AbstractionParams prm{cfg.eta, cfg.mu, cfg.varpi};
  if (cfg.kind == "linear") {
    SubsystemDef sub = build_linear_subsystem(cfg);
    FeedbackFn h;
    if (!cfg.linear_params.k.empty()) {
      Matrix k = cfg.linear_params.k;
      h = [k](const double* x, double* u) {
        for (std::size_t i = 0; i < k.rows(); ++i) {
          double v = 0.0;
          for (std::size_t j = 0; j < k.cols(); ++j) v += k(i, j) * x[j];
          u[i] = v;
        }
      };
    }
    if (!sub.internal_blocks.empty() && !(cfg.varpi > 0.0))
      throw ConfigError("linear subsystem with internal inputs needs varpi > 0");
    return build_abstraction(std::move(sub), std::move(h), prm);
  }
  GeneratedNetwork net = build_builtin(cfg);
  if (sub_index >= net.subs.size()) throw ConfigError("subsystem index out of range");
  SubsystemDef sub = net.subs[sub_index];
  FeedbackFn h = net.data[sub_index].feedback;
  // per-edge internal grids over the neighbors' output ranges: their output
  // grid image for exact routing, or that range quantized at varpi
  const double step = cfg.varpi > 0.0 ? cfg.varpi : cfg.eta;
  std::vector<Grid> blocks;
  for (const InternalBlock& blk : sub.internal_blocks) {
    const SubsystemDef& nb = net.subs[static_cast<std::size_t>(blk.source)];
    const OutputBlock* out = nb.output_toward(sub.index);
    BoxUnion range = out->range;
    if (safe_lo && safe_hi)  // assume-guarantee: neighbors stay safe
      range = BoxUnion::interval(*safe_lo, *safe_hi);
    blocks.emplace_back(range, step);
  }
  return build_abstraction(std::move(sub), std::move(h), prm,
                           std::move(blocks));
}

int cmd_abstract(const std::string& config_path, std::size_t sub_index,
                 const std::string& out_path, std::uint64_t cap) {
  NetworkConfig cfg = load_config(config_path);
  SymbolicModel model = model_for_sub(cfg, sub_index, std::nullopt, std::nullopt);
  TransitionStore store = materialize(model, cap);
  StoreStats st = store.stats();
  store.save(out_path);
  std::printf("abstraction of subsystem %zu: %llu states, %llu triples, "
              "%llu transitions, %llu bytes -> %s\n",
              sub_index, static_cast<unsigned long long>(st.n_states),
              static_cast<unsigned long long>(st.n_triples),
              static_cast<unsigned long long>(st.n_transitions),
              static_cast<unsigned long long>(st.bytes), out_path.c_str());
  return kExitOk;
}

int cmd_check_smallgain(const std::string& config_path, const std::string& mode) {
  NetworkConfig cfg = load_config(config_path);
  GainMatrix g(0);
  if (cfg.kind == "linear") {
    Certificate cert = derive_linear_certificate(cfg.linear, cfg.linear_params,
                                                 Direction::AbstractionToConcrete);
    g = GainMatrix(1);
    g.at(0, 0) = cert.sigma;
  } else {
    GeneratedNetwork net = build_builtin(cfg);
    std::vector<Certificate> certs = derive_network_certificates(net);
    g = build_gain_matrix(certs, GainFn::identity(), std::nullopt,
                          net.coupling, net.edges);
  }
  SgcMode m;
  if (mode == "linear")
    m = SgcMode::LinearFast;
  else if (mode == "exhaustive")
    m = SgcMode::Exhaustive;
  else
    m = g.n <= 12 ? SgcMode::Exhaustive : SgcMode::LinearFast;
  SgcResult r = check_small_gain(g, m);
  switch (r.status) {
    case SgcStatus::Satisfied:
      std::printf("small-gain condition: satisfied (n=%zu)\n", g.n);
      return kExitOk;
    case SgcStatus::Violated: {
      std::printf("small-gain condition: violated, cycle");
      for (std::size_t v : r.witness) std::printf(" %zu", v);
      std::printf("\n");
      return kExitSgcViolated;
    }
    case SgcStatus::Undecided:
      std::printf("small-gain condition: undecided (numeric-only cycles)\n");
      return kExitUndecided;
  }
  return kExitOk;
}

int cmd_compose_error(const std::string& config_path, const std::string& etas,
                      const std::string& out_path) {
  NetworkConfig cfg = load_config(config_path);
  if (cfg.kind == "linear")
    throw ConfigError("compose-error needs an interconnected family config");
  std::vector<double> eta_list = split_doubles(etas);
  std::ofstream os(out_path);
  if (!os) throw Error("cannot open " + out_path + " for writing");
  os << "n,eta,eps_hat\n";
  char buf[128];
  for (double eta : eta_list) {
    GeneratedNetwork net;
    std::size_t n;
    if (cfg.kind == "roomtemp") {
      RoomTempConfig rc = cfg.room;
      rc.eta = eta;
      net = gen_roomtemp(rc);
      n = rc.n;
    } else {
      FullNetConfig fc = cfg.fullnet;
      fc.eta = eta;
      net = gen_fullnet(fc);
      n = fc.n;
    }
    std::vector<Certificate> certs = derive_network_certificates(net);
    ComposedCertificate cc = compose_network(net, certs);
    double eps_hat = relation_error(cc, net.input_norm_bound);
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", n, eta, eps_hat);
    os << buf;
  }
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

int cmd_synthesize(const std::string& config_path, const std::string& safe,
                   std::size_t sub_index, const std::string& out_path,
                   double inflate, unsigned threads) {
  NetworkConfig cfg = load_config(config_path);
  std::vector<double> band = split_doubles(safe);
  if (band.size() != 2) throw ConfigError("--safe expects lo,hi");
  SymbolicModel model =
      model_for_sub(cfg, sub_index, band[0] - inflate, band[1] + inflate);
  SafetySpec spec{BoxUnion::interval(band[0], band[1])};
  Controller ctrl =
      synthesize_safety(model, spec, model.internal_grid(), threads);
  ctrl.save(out_path);
  std::printf("controller for subsystem %zu: %zu winning states -> %s\n",
              sub_index, ctrl.winning_count(), out_path.c_str());
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, std::size_t steps,
                 const std::string& x0_spec, const std::string& safe,
                 const std::string& out_path, unsigned threads) {
  NetworkConfig cfg = load_config(config_path);
  if (cfg.kind != "roomtemp")
    throw ConfigError("simulate currently supports the roomtemp family");
  std::vector<double> band = split_doubles(safe);
  if (band.size() != 2) throw ConfigError("--safe expects lo,hi");
  std::vector<double> x0 = split_doubles(x0_spec);
  double x0_val = x0.size() == 1 ? x0[0] : 0.0;
  RoomClosedLoopResult res = run_room_closed_loop(
      cfg.room, band[0], band[1], steps, x0.size() == 1 ? x0_val : 20.0,
      threads);
  GeneratedNetwork net = gen_roomtemp(cfg.room);
  NetworkSystem network(net.subs, net.coupling);
  write_trajectory_csv(network, res.sim.trajectory, out_path);
  std::printf("simulated %zu steps of %zu rooms: %s -> %s\n", steps,
              cfg.room.n, res.sim.safe ? "safe" : "violated", out_path.c_str());
  return res.sim.safe ? kExitOk : 1;
}

int cmd_bench(const std::string& family, const std::string& n_spec,
              const std::string& eta_spec, double mu, std::size_t steps,
              const std::string& preset, const std::string& safe,
              const std::string& err_path, const std::string& traj_path,
              unsigned threads) {
  std::vector<std::size_t> n_list = split_sizes(n_spec);
  std::vector<double> eta_list = split_doubles(eta_spec);
  BenchFamily fam;
  if (family == "roomtemp")
    fam = BenchFamily::RoomTemp;
  else if (family == "fullnet")
    fam = BenchFamily::FullNet;
  else
    throw ConfigError("unknown bench family: " + family);

  std::vector<SweepRow> rows = error_sweep(fam, n_list, eta_list, preset, threads);
  write_sweep_csv(rows, err_path, true);
  std::printf("wrote %s (%zu rows)\n", err_path.c_str(), rows.size());
  bool any_violated = false;
  for (const SweepRow& r : rows) any_violated |= r.status != "ok";

  if (fam == BenchFamily::RoomTemp && steps > 0) {
    std::vector<double> band = split_doubles(safe);
    if (band.size() != 2) throw ConfigError("--safe expects lo,hi");
    RoomTempConfig cfg;
    cfg.n = n_list.front();
    cfg.eta = eta_list.front();
    cfg.mu = mu;
    cfg.preset = preset;
    RoomClosedLoopResult res =
        run_room_closed_loop(cfg, band[0], band[1], steps, 20.0, threads);
    GeneratedNetwork net = gen_roomtemp(cfg);
    NetworkSystem network(net.subs, net.coupling);
    write_trajectory_csv(network, res.sim.trajectory, traj_path);
    std::printf(
        "closed loop: n=%zu eps_hat=%.6g winning=%zu steps=%zu %s -> %s\n",
        cfg.n, res.eps_hat, res.winning_states, steps,
        res.sim.safe ? "safe" : "VIOLATED", traj_path.c_str());
    if (!res.sim.safe) return 1;
  }
  return any_violated ? kExitSgcViolated : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symbolic abstraction, small-gain composition and safety "
               "synthesis for interconnected discrete-time systems"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker count (0 = auto)");

  std::string config_path, out_path, mode, safe = "19,21";
  std::size_t sub_index = 0;

  auto* abs = app.add_subcommand("abstract", "materialize one subsystem abstraction");
  abs->add_option("--config", config_path, "network JSON config")->required();
  abs->add_option("--sub", sub_index, "subsystem index");
  abs->add_option("--out", out_path, "output .sgab path")->required();
  std::uint64_t cap = TransitionStore::kDefaultCap;
  abs->add_option("--cap", cap, "transition-count cap");

  auto* sgc = app.add_subcommand("check-smallgain", "decide the small-gain condition");
  sgc->add_option("--config", config_path, "network JSON config")->required();
  sgc->add_option("--mode", mode, "linear|exhaustive (default: auto)");

  std::string eta_spec = "0.01";
  auto* cerr_cmd = app.add_subcommand("compose-error", "composed relation error");
  cerr_cmd->add_option("--config", config_path, "network JSON config")->required();
  cerr_cmd->add_option("--eta", eta_spec, "state quantization(s), comma separated");
  cerr_cmd->add_option("--out", out_path, "output CSV path")->required();

  double inflate = 0.0;
  auto* syn = app.add_subcommand("synthesize", "safety controller synthesis");
  syn->add_option("--config", config_path, "network JSON config")->required();
  syn->add_option("--safe", safe, "safe interval lo,hi");
  syn->add_option("--sub", sub_index, "subsystem index");
  syn->add_option("--inflate", inflate,
                  "widen the assumed neighbor range by this margin");
  syn->add_option("--out", out_path, "output .bin path")->required();

  std::size_t steps = 100;
  std::string x0_spec = "20";
  auto* sim = app.add_subcommand("simulate", "closed-loop simulation");
  sim->add_option("--config", config_path, "network JSON config")->required();
  sim->add_option("--steps", steps, "step count");
  sim->add_option("--x0", x0_spec, "uniform initial state");
  sim->add_option("--safe", safe, "safe interval lo,hi");
  sim->add_option("--out", out_path, "trajectory CSV path")->required();

  std::string family, n_spec = "3", preset = "paper";
  double mu = 0.01;
  std::string err_path = "err.csv", traj_path = "traj.csv";
  auto* bench = app.add_subcommand("bench", "case-study benchmarks");
  bench->add_option("family", family, "roomtemp|fullnet")->required();
  bench->add_option("--n", n_spec, "network size(s), comma separated");
  bench->add_option("--eta", eta_spec, "state quantization(s)");
  bench->add_option("--mu", mu, "input quantization");
  bench->add_option("--steps", steps, "closed-loop steps (roomtemp)");
  bench->add_option("--preset", preset, "roomtemp data preset");
  bench->add_option("--safe", safe, "safe interval lo,hi");
  bench->add_option("--out-err", err_path, "error sweep CSV path");
  bench->add_option("--out-traj", traj_path, "trajectory CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*abs) return cmd_abstract(config_path, sub_index, out_path, cap);
    if (*sgc) return cmd_check_smallgain(config_path, mode);
    if (*cerr_cmd) return cmd_compose_error(config_path, eta_spec, out_path);
    if (*syn)
      return cmd_synthesize(config_path, safe, sub_index, out_path, inflate,
                            threads);
    if (*sim) return cmd_simulate(config_path, steps, x0_spec, safe, out_path, threads);
    if (*bench)
      return cmd_bench(family, n_spec, eta_spec, mu, steps, preset, safe,
                       err_path, traj_path, threads);
  } catch (const SmallGainViolated& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSgcViolated;
  } catch (const EmptyWinningSet& e) {
    std::cerr << "error: " << e.what() << " (iteration " << e.iteration << ")\n";
    return kExitEmptyController;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
