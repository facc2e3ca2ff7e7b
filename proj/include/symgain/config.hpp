#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "symgain/bench.hpp"
#include "symgain/certificates.hpp"
#include "symgain/errors.hpp"
#include "symgain/geometry.hpp"

namespace symgain {

/// Parsed network description. `kind` selects either a builtin family
/// (roomtemp / fullnet) or a single linear subsystem given by its
/// matrices. The JSON schema is documented in the README.
struct NetworkConfig {
  std::string kind;
  RoomTempConfig room;
  FullNetConfig fullnet;
  // linear kind
  LinearSystem linear;
  LinearCertificateParams linear_params;
  BoxUnion x_set, u_set;
  std::vector<BoxUnion> w_blocks;
  double varpi = 0.0;
  double eta = 0.0, mu = 0.0;
  std::optional<BoxUnion> safe;
};

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : j) rows.push_back(r.get<std::vector<double>>());
  return Matrix::from_rows(std::move(rows));
}

inline BoxUnion box_from_json(const nlohmann::json& j) {
  // [[lo,hi],...] one entry per dimension (a single box), or
  // {"boxes": [[[lo,hi],...], ...]} for a union
  auto one_box = [](const nlohmann::json& jb) {
    std::vector<double> lo, hi;
    for (const auto& iv : jb) {
      lo.push_back(iv.at(0).get<double>());
      hi.push_back(iv.at(1).get<double>());
    }
    return Box(std::move(lo), std::move(hi));
  };
  if (j.is_object()) {
    std::vector<Box> boxes;
    for (const auto& jb : j.at("boxes")) boxes.push_back(one_box(jb));
    return BoxUnion(std::move(boxes));
  }
  return BoxUnion(one_box(j));
}

}  // namespace detail

inline NetworkConfig parse_config(const nlohmann::json& j) {
  NetworkConfig c;
  c.kind = j.at("kind").get<std::string>();
  c.eta = j.value("eta", 0.01);
  c.mu = j.value("mu", 0.01);
  c.varpi = j.value("varpi", 0.0);

  if (c.kind == "roomtemp") {
    c.room.n = j.value("n", std::size_t{3});
    c.room.eta = c.eta;
    c.room.mu = c.mu;
    c.room.varpi = c.varpi;
    c.room.preset = j.value("preset", std::string("paper"));
    c.room.alpha = j.value("alpha", c.room.alpha);
    c.room.beta = j.value("beta", c.room.beta);
    if (j.contains("domain")) {
      c.room.x_lo = j["domain"].at(0).get<double>();
      c.room.x_hi = j["domain"].at(1).get<double>();
    }
    if (j.contains("safe"))
      c.safe = BoxUnion::interval(j["safe"].at(0).get<double>(),
                                  j["safe"].at(1).get<double>());
  } else if (c.kind == "fullnet") {
    c.fullnet.n = j.value("n", std::size_t{2});
    c.fullnet.eta = c.eta;
    c.fullnet.mu = c.mu;
    c.fullnet.varpi = c.varpi;
    c.fullnet.c = j.value("c", 0.0);
    if (j.contains("safe"))
      c.safe = BoxUnion::interval(j["safe"].at(0).get<double>(),
                                  j["safe"].at(1).get<double>());
  } else if (c.kind == "linear") {
    c.linear.a = detail::matrix_from_json(j.at("A"));
    c.linear.b = detail::matrix_from_json(j.at("B"));
    c.linear.c = detail::matrix_from_json(j.at("C"));
    if (j.contains("D") && !j["D"].empty())
      c.linear.d = detail::matrix_from_json(j["D"]);
    c.linear_params.z = detail::matrix_from_json(j.at("Z"));
    if (j.contains("K") && !j["K"].empty())
      c.linear_params.k = detail::matrix_from_json(j["K"]);
    c.linear_params.kappa_c = j.value("kappa_c", 0.5);
    c.linear_params.theta = j.value("theta", 0.5);
    c.linear_params.psi_c = j.value("psi_c", 0.99);
    c.linear_params.delta_c = j.value("delta_c", 1.0);
    c.linear_params.eta = c.eta;
    c.linear_params.mu = c.mu;
    c.x_set = detail::box_from_json(j.at("X"));
    c.u_set = detail::box_from_json(j.at("U"));
    if (j.contains("W"))
      for (const auto& wb : j["W"]) c.w_blocks.push_back(detail::box_from_json(wb));
    if (j.contains("safe")) c.safe = detail::box_from_json(j["safe"]);
  } else {
    throw ConfigError("unknown network kind: " + c.kind);
  }
  return c;
}

inline NetworkConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config " + path + ": " + e.what());
  }
}

/// Builtin families expand to full generated networks.
inline GeneratedNetwork build_builtin(const NetworkConfig& c) {
  if (c.kind == "roomtemp") return gen_roomtemp(c.room);
  if (c.kind == "fullnet") return gen_fullnet(c.fullnet);
  throw ConfigError("config kind '" + c.kind + "' is not a builtin family");
}

/// Single linear subsystem x+ = A x + B u + D w, y = C x. The internal
/// input, when present, is an exogenous block (not fed by a neighbor).
inline SubsystemDef build_linear_subsystem(const NetworkConfig& c) {
  SubsystemDef s;
  s.index = 0;
  s.state_dim = c.linear.a.rows();
  s.input_dim = c.linear.b.cols();
  s.state_set = c.x_set;
  s.input_set = c.u_set;
  std::size_t woff = 0;
  for (const BoxUnion& wb : c.w_blocks) {
    s.internal_blocks.push_back({-1, wb.dim(), wb});
    woff += wb.dim();
  }
  if (!c.linear.d.empty() && c.linear.d.cols() != woff)
    throw DimensionMismatch("D columns vs declared W blocks");
  Matrix a = c.linear.a, b = c.linear.b, d = c.linear.d, cm = c.linear.c;
  s.f = [a, b, d](const double* x, const double* u, const double* w,
                  double* out) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) v += a(i, j) * x[j];
      for (std::size_t j = 0; j < b.cols(); ++j) v += b(i, j) * u[j];
      if (!d.empty())
        for (std::size_t j = 0; j < d.cols(); ++j) v += d(i, j) * w[j];
      out[i] = v;
    }
  };
  BoxUnion yrange = c.x_set;  // declared output range
  s.output_blocks.push_back(
      {0, cm.rows(), yrange, [cm](const double* x, double* y) {
         for (std::size_t i = 0; i < cm.rows(); ++i) {
           double v = 0.0;
           for (std::size_t j = 0; j < cm.cols(); ++j) v += cm(i, j) * x[j];
           y[i] = v;
         }
       }});
  return s;
}

}  // namespace symgain
