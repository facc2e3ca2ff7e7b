#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "symgain/certificates.hpp"
#include "symgain/gain_json.hpp"
#include "symgain/linalg.hpp"

namespace symgain {

inline nlohmann::json to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : j) rows.push_back(r.get<std::vector<double>>());
  return Matrix::from_rows(std::move(rows));
}

/// Certificate wire format: gain trees, the offset scalar, the refinement
/// tag and the V-form. The nonlinear feedback callback is not a wire
/// object; loaders rebind it from the stabilizability data when refining.
inline nlohmann::json to_json(const Certificate& c) {
  nlohmann::json j;
  j["alpha"] = to_json(c.alpha);
  j["sigma"] = to_json(c.sigma);
  j["rho_int"] = to_json(c.rho_int);
  j["rho_ext"] = to_json(c.rho_ext);
  j["eps"] = c.eps;
  j["refinement"] =
      c.refinement == RefinementKind::Nonlinear ? "nonlinear" : "linear";
  if (c.refinement == RefinementKind::Linear) j["K"] = to_json(c.gain_k);
  if (c.vform.kind == VForm::Kind::Norm) {
    j["vform"] = "norm";
  } else {
    j["vform"] = "quadratic";
    j["Z"] = to_json(c.vform.z);
  }
  return j;
}

inline Certificate certificate_from_json(const nlohmann::json& j) {
  Certificate c;
  c.alpha = gain_from_json(j.at("alpha"));
  c.sigma = gain_from_json(j.at("sigma"));
  c.rho_int = gain_from_json(j.at("rho_int"));
  c.rho_ext = gain_from_json(j.at("rho_ext"));
  c.eps = j.at("eps").get<double>();
  const std::string tag = j.at("refinement").get<std::string>();
  if (tag == "nonlinear") {
    c.refinement = RefinementKind::Nonlinear;
  } else if (tag == "linear") {
    c.refinement = RefinementKind::Linear;
    c.gain_k = matrix_from_json(j.at("K"));
  } else {
    throw ConfigError("unknown refinement tag: " + tag);
  }
  const std::string vf = j.at("vform").get<std::string>();
  if (vf == "norm")
    c.vform = VForm::norm();
  else if (vf == "quadratic")
    c.vform = VForm::quadratic(matrix_from_json(j.at("Z")));
  else
    throw ConfigError("unknown V-form: " + vf);
  return c;
}

}  // namespace symgain
