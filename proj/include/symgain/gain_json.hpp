#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "symgain/gain.hpp"

namespace symgain {

/// JSON expression tree:
/// {"kind":"power","c":2.0,"p":0.5} | {"kind":"id"} | {"kind":"zero"} |
/// {"kind":"compose","fs":[...]} | {"kind":"max","fs":[...]} |
/// {"kind":"idplus","inner":{...}}
inline nlohmann::json to_json(const GainFn& f) {
  using nlohmann::json;
  switch (f.kind()) {
    case GainFn::Kind::Zero:
      return json{{"kind", "zero"}};
    case GainFn::Kind::Identity:
      return json{{"kind", "id"}};
    case GainFn::Kind::Power:
      return json{{"kind", "power"}, {"c", f.coeff()}, {"p", f.exponent()}};
    case GainFn::Kind::Compose:
    case GainFn::Kind::Max: {
      json fs = json::array();
      for (const GainFn& g : f.children()) fs.push_back(to_json(g));
      return json{{"kind", f.kind() == GainFn::Kind::Compose ? "compose" : "max"},
                  {"fs", std::move(fs)}};
    }
    case GainFn::Kind::IdPlus:
      return json{{"kind", "idplus"}, {"inner", to_json(f.children().front())}};
  }
  throw Error("unreachable GainFn kind");
}

inline GainFn gain_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return GainFn::zero();
  if (kind == "id") return GainFn::identity();
  if (kind == "power")
    return GainFn::power(j.at("c").get<double>(), j.at("p").get<double>());
  if (kind == "compose" || kind == "max") {
    std::vector<GainFn> fs;
    for (const auto& e : j.at("fs")) fs.push_back(gain_from_json(e));
    return kind == "compose" ? GainFn::compose_of(std::move(fs))
                             : GainFn::max_of(std::move(fs));
  }
  if (kind == "idplus") return GainFn::id_plus_node(gain_from_json(j.at("inner")));
  throw ConfigError("unknown GainFn kind: " + kind);
}

}  // namespace symgain
