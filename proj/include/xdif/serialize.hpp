/// @file serialize.hpp
/// @brief JSON (de)serialization of the core records.
#pragma once

#include <json.hpp>

#include "xdif/model.hpp"
#include "xdif/spectral.hpp"

namespace xdif {

inline void to_json(nlohmann::json& j, const ModelParams& p) {
  j = nlohmann::json{{"d1", p.d1},           {"d2", p.d2},
                     {"chi1", p.chi1},       {"chi2", p.chi2},
                     {"m1", p.m1},           {"m2", p.m2},
                     {"q1", p.q1},           {"q2", p.q2},
                     {"lambda1", p.lambda1}, {"lambda2", p.lambda2},
                     {"mu1", p.mu1},         {"mu2", p.mu2},
                     {"a1", p.a1},           {"a2", p.a2},
                     {"kinetics", to_string(p.kinetics)},
                     {"n", p.n}};
}

inline void from_json(const nlohmann::json& j, ModelParams& p) {
  j.at("d1").get_to(p.d1);
  j.at("d2").get_to(p.d2);
  j.at("chi1").get_to(p.chi1);
  j.at("chi2").get_to(p.chi2);
  j.at("m1").get_to(p.m1);
  j.at("m2").get_to(p.m2);
  j.at("q1").get_to(p.q1);
  j.at("q2").get_to(p.q2);
  p.lambda1 = j.value("lambda1", 0.0);
  p.lambda2 = j.value("lambda2", 0.0);
  p.mu1 = j.value("mu1", 0.0);
  p.mu2 = j.value("mu2", 0.0);
  p.a1 = j.value("a1", 0.0);
  p.a2 = j.value("a2", 0.0);
  const std::string kin = j.at("kinetics").get<std::string>();
  if (kin == "H1")
    p.kinetics = Kinetics::H1;
  else if (kin == "H2")
    p.kinetics = Kinetics::H2;
  else
    throw std::invalid_argument("kinetics must be \"H1\" or \"H2\"");
  p.n = j.value("n", 1);
}

inline void to_json(nlohmann::json& j, const RegularizationLevel& l) {
  j = nlohmann::json{{"alpha", l.alpha}, {"delta", l.delta}, {"epsilon", l.epsilon}, {"k", l.k}};
}

inline void from_json(const nlohmann::json& j, RegularizationLevel& l) {
  l.alpha = j.value("alpha", 0.0);
  l.delta = j.value("delta", 0.0);
  l.epsilon = j.value("epsilon", 0.0);
  j.at("k").get_to(l.k);
}

inline void to_json(nlohmann::json& j, const Domain& d) {
  if (d.shape == Domain::Shape::Interval)
    j = nlohmann::json{{"shape", "interval"}, {"L", d.Lx}, {"oversample", d.oversample}};
  else
    j = nlohmann::json{{"shape", "rectangle"}, {"Lx", d.Lx}, {"Ly", d.Ly}, {"oversample", d.oversample}};
}

inline void from_json(const nlohmann::json& j, Domain& d) {
  const std::string shape = j.at("shape").get<std::string>();
  if (shape == "interval") {
    d.shape = Domain::Shape::Interval;
    j.at("L").get_to(d.Lx);
    d.Ly = 0.0;
  } else if (shape == "rectangle") {
    d.shape = Domain::Shape::Rectangle;
    j.at("Lx").get_to(d.Lx);
    j.at("Ly").get_to(d.Ly);
  } else {
    throw std::invalid_argument("domain shape must be \"interval\" or \"rectangle\"");
  }
  d.oversample = j.value("oversample", 3);
}

}  // namespace xdif
