/// @file regime.hpp
/// @brief Exponent algebra and parameter-regime classification.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xdif/model.hpp"

namespace xdif {

struct Exponents {
  double p1 = 0.0, p2 = 0.0;
  double r1 = 0.0, r2 = 0.0;
  double beta1 = 0.0, beta2 = 0.0;
};

/// p_i = max{m_i+1-q_i + 2(2-q_i)/n, 2-q_i} under H1 (3-q_i under H2),
/// r_i = min{2 p_i / (p_i - beta_i), 2}, beta_i = m_i - q_i - 1.
inline Exponents compute_exponents(const ModelParams& p) {
  const double low = (p.kinetics == Kinetics::H1) ? 2.0 : 3.0;
  auto one = [&](double m, double q, double& pi, double& ri, double& beta) {
    pi = std::max(m + 1.0 - q + 2.0 * (2.0 - q) / p.n, low - q);
    beta = m - q - 1.0;
    ri = std::min(2.0 * pi / (pi - beta), 2.0);
  };
  Exponents e;
  one(p.m1, p.q1, e.p1, e.r1, e.beta1);
  one(p.m2, p.q2, e.p2, e.r2, e.beta2);
  return e;
}

/// Sampled semi-decision of the kinetic compatibility condition: does
/// h(s1,s2) = G1'(s1) f1(s1,s2) + G2'(s2) f2(s1,s2) admit a fit
/// h <= -C1 (s1^2 ln s1 + s2^2 ln s2) + C2 with C1 > 0 over [1, s_max]^2?
struct F1Verdict {
  bool falsified = false;
  double c1 = 0.0, c2 = 0.0;                    // fitted pair (valid on the samples)
  double witness_s1 = 0.0, witness_s2 = 0.0;    // superquadratic-growth witness
  double s_max = 0.0;                           // search bound
};

inline F1Verdict check_F1(const ModelParams& params, double s_max = 1e6, int grid_points = 41) {
  if (!(s_max >= 1.0)) throw std::invalid_argument("check_F1: s_max must be >= 1");
  if (grid_points < 2) throw std::invalid_argument("check_F1: grid_points must be >= 2");
  params.validate();

  RegularizationLevel proto;  // alpha = delta = 0: prototype-level G'
  proto.k = 1;
  const detail::GPair g1 = detail::make_G(params, proto, 1);
  const detail::GPair g2 = detail::make_G(params, proto, 2);

  std::vector<double> s(grid_points);
  const double lmax = std::log(s_max);
  for (int j = 0; j < grid_points; ++j)
    s[j] = (grid_points == 1) ? 1.0 : std::exp(lmax * j / (grid_points - 1));

  std::vector<double> gp1(grid_points), gp2(grid_points);
  for (int j = 0; j < grid_points; ++j) {
    gp1[j] = g1.Gp(s[j]);
    gp2[j] = g2.Gp(s[j]);
  }

  const double outer_cut = s_max / 10.0;  // outermost log-annulus
  double max_h_outer = -std::numeric_limits<double>::infinity();
  double max_h_inner = -std::numeric_limits<double>::infinity();
  double max_phi_outer = -std::numeric_limits<double>::infinity();
  double wit1 = s_max, wit2 = s_max;

  struct Sample {
    double h, g;
  };
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(grid_points) * grid_points);

  for (int j1 = 0; j1 < grid_points; ++j1) {
    for (int j2 = 0; j2 < grid_points; ++j2) {
      const double s1 = s[j1], s2 = s[j2];
      const double h = gp1[j1] * prototype_f(1, params, s1, s2) + gp2[j2] * prototype_f(2, params, s1, s2);
      const double g = s1 * s1 * std::log(s1) + s2 * s2 * std::log(s2);
      samples.push_back({h, g});
      const bool outer = std::max(s1, s2) >= outer_cut;
      if (outer) {
        max_h_outer = std::max(max_h_outer, h);
        const double phi = h / (1.0 + g);
        if (phi > max_phi_outer) {
          max_phi_outer = phi;
          wit1 = s1;
          wit2 = s2;
        }
      } else {
        max_h_inner = std::max(max_h_inner, h);
      }
    }
  }

  F1Verdict v;
  v.s_max = s_max;
  if (max_h_outer > 0.0 && max_h_outer > max_h_inner) {
    v.falsified = true;
    v.witness_s1 = wit1;
    v.witness_s2 = wit2;
    return v;
  }
  v.c1 = std::max(1e-9, -max_phi_outer);
  double c2 = 0.0;
  for (const Sample& sm : samples) c2 = std::max(c2, sm.h + v.c1 * sm.g);
  v.c2 = c2;
  return v;
}

struct RegimeReport {
  Exponents exps;
  bool cond_mi_qi = false;
  bool cond_f2 = false;
  bool cond_main_1 = false, cond_main_2 = false;
  std::optional<bool> cond_m_h1;  // symmetric H1 closed form, when applicable
  F1Verdict f1;

  /// Conditions required by the global existence theorem (the F1 leg is the
  /// sampled verdict, never a proof).
  bool all_required_hold() const {
    return cond_mi_qi && cond_main_1 && cond_main_2 && (cond_f2 || !f1.falsified);
  }

  std::vector<std::string> failing() const {
    std::vector<std::string> out;
    if (!cond_mi_qi) out.push_back("cond_mi_qi");
    if (!cond_main_1) out.push_back("cond_main_1");
    if (!cond_main_2) out.push_back("cond_main_2");
    if (!cond_f2 && f1.falsified) out.push_back("cond_f1_or_f2");
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["p1"] = exps.p1;
    j["p2"] = exps.p2;
    j["r1"] = exps.r1;
    j["r2"] = exps.r2;
    j["beta1"] = exps.beta1;
    j["beta2"] = exps.beta2;
    j["cond_mi_qi"] = cond_mi_qi;
    j["cond_f2"] = cond_f2;
    j["cond_main_1"] = cond_main_1;
    j["cond_main_2"] = cond_main_2;
    if (cond_m_h1.has_value())
      j["cond_m_h1"] = *cond_m_h1;
    else
      j["cond_m_h1"] = nullptr;
    nlohmann::json f;
    f["status"] = f1.falsified ? "falsified" : "not_falsified";
    f["c1"] = f1.c1;
    f["c2"] = f1.c2;
    if (f1.falsified)
      f["witness"] = {f1.witness_s1, f1.witness_s2};
    else
      f["witness"] = nullptr;
    f["s_max"] = f1.s_max;
    j["f1_verdict"] = f;
    return j;
  }
};

/// Main condition, three-case split on q_i (strict below q_i = 1, non-strict
/// within 1e-12 at q_i = 1).
inline bool main_condition_holds(double qi, double pi, double r_other) {
  if (qi <= 0.0) return 1.0 / r_other < 1.0;
  if (qi < 1.0) return qi / pi + 1.0 / r_other < 1.0;
  return 1.0 / pi + 1.0 / r_other <= 1.0 + 1e-12;
}

/// Symmetric H1 closed form: m > min{((2n+1)q - 2)/n, 4q - 1}.
inline bool closed_form_main_condition(double m, double q, int n) {
  return m > std::min(((2.0 * n + 1.0) * q - 2.0) / n, 4.0 * q - 1.0);
}

inline RegimeReport check_conditions(const ModelParams& params, double f1_s_max = 1e6,
                                     int f1_grid_points = 41) {
  params.validate();
  RegimeReport r;
  r.exps = compute_exponents(params);
  r.cond_mi_qi = (params.m1 - params.q1 > -1.0) && (params.m2 - params.q2 > -1.0);

  const double f2_lhs1 = (2.0 * params.n - 2.0) / params.n +
                         ((3.0 - params.q2) * (2.0 - params.q1) - (3.0 - params.q1) * (2.0 - params.q2)) /
                             (2.0 - params.q2);
  const double f2_lhs2 = (2.0 * params.n - 2.0) / params.n + (params.q2 - params.q1);
  r.cond_f2 = (params.m1 > f2_lhs1) || (params.m2 > f2_lhs2);

  r.cond_main_1 = main_condition_holds(params.q1, r.exps.p1, r.exps.r2);
  r.cond_main_2 = main_condition_holds(params.q2, r.exps.p2, r.exps.r1);

  if (params.kinetics == Kinetics::H1 && params.m1 == params.m2 && params.q1 == params.q2 &&
      params.q1 > 0.0 && params.q1 < 1.0)
    r.cond_m_h1 = closed_form_main_condition(params.m1, params.q1, params.n);

  r.f1 = check_F1(params, f1_s_max, f1_grid_points);
  return r;
}

}  // namespace xdif
