/// @file entropy.hpp
/// @brief Entropy, dissipation and reaction functionals, the discrete
///        entropy-inequality / identity residuals and the a-priori monitors.
#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xdif/galerkin.hpp"
#include "xdif/model.hpp"
#include "xdif/spectral.hpp"

namespace xdif {

/// Which dissipation form a report uses: the simulation (eps-delta) form with
/// eps |Laplacian|^2 terms, or the limit-theorem form with D_i/S_i weights only.
enum class DissipationForm { Simulation, Limit };

inline const char* to_string(DissipationForm f) {
  return f == DissipationForm::Simulation ? "simulation" : "limit";
}

struct Functionals {
  double E = 0.0, D = 0.0, R = 0.0;
  bool available = true;  // false when the delta = 0 singularity guard fired
};

/// E = int G1(u) + int G2(v); D and R per the active form; grid quadrature
/// with spectral derivatives. At delta = 0 levels, states touching the
/// singularity (min u or v <= 1e-12) are reported as not-available.
inline Functionals functionals_at(const std::vector<double>& w, const std::vector<double>& z,
                                  const CoefficientSet& coeffs, const Transform& tr,
                                  DissipationForm form = DissipationForm::Simulation) {
  Functionals out;
  const int M = tr.grid_size();
  const double wgt = tr.cell_weight();
  const double eps = coeffs.level.epsilon;

  const std::vector<double> u = tr.to_grid(w);
  const std::vector<double> v = tr.to_grid(z);

  if (!coeffs.g_on_reals) {
    double mn = std::numeric_limits<double>::infinity();
    for (double x : u) mn = std::min(mn, x);
    for (double x : v) mn = std::min(mn, x);
    if (mn <= 1e-12) {
      out.available = false;
      out.E = out.D = out.R = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
  }

  std::vector<double> ux, uy, vx, vy;
  tr.gradient(w, ux, uy);
  tr.gradient(z, vx, vy);
  const bool two_d = tr.domain().dim() == 2;

  double E = 0.0, D = 0.0, R = 0.0;
  for (int m = 0; m < M; ++m) {
    E += coeffs.G1(u[m]) + coeffs.G2(v[m]);
    const double gu2 = ux[m] * ux[m] + (two_d ? uy[m] * uy[m] : 0.0);
    const double gv2 = vx[m] * vx[m] + (two_d ? vy[m] * vy[m] : 0.0);
    D += coeffs.D1(u[m]) / coeffs.S1(u[m]) * gu2 + coeffs.D2(v[m]) / coeffs.S2(v[m]) * gv2;
    R += coeffs.Gprime1(u[m]) * coeffs.f1(u[m], v[m]) + coeffs.Gprime2(v[m]) * coeffs.f2(u[m], v[m]);
  }
  E *= wgt;
  D *= wgt;
  R *= wgt;

  if (form == DissipationForm::Simulation && eps > 0.0) {
    const std::vector<double> lu = tr.to_grid(tr.laplacian_coeffs(w));
    const std::vector<double> lv = tr.to_grid(tr.laplacian_coeffs(z));
    double d4 = 0.0;
    for (int m = 0; m < M; ++m) d4 += lu[m] * lu[m] + lv[m] * lv[m];
    D += eps * d4 * wgt;
  }

  out.E = E;
  out.D = D;
  out.R = R;
  return out;
}

struct EntropyRow {
  double t = 0.0;
  double E = 0.0, D = 0.0, R = 0.0;
  double mass_u = 0.0, mass_v = 0.0;
  double neg_mass_u = 0.0, neg_mass_v = 0.0;
  double linf_u = 0.0, linf_v = 0.0;
  double lq_monitor = std::numeric_limits<double>::quiet_NaN();  // alpha > 0 only
  bool available = true;
};

struct EntropyReport {
  DissipationForm form = DissipationForm::Simulation;
  std::vector<EntropyRow> rows;
  std::vector<double> inequality_residual;  // aligned with rows
  std::vector<double> tol_entropy;          // aligned with rows
  std::vector<double> identity_residual_raw;   // midpoints, size rows-1
  std::vector<double> identity_residual_norm;  // midpoints
  std::vector<double> mass_comb_lhs, mass_comb_rhs;  // Lemma-4.6-style bound (H2)

  double max_inequality_residual = 0.0;
  double max_identity_residual_normalized = 0.0;
  double mass_drift = 0.0;
  double min_state = 0.0;
};

/// Full post-processing pass over a trajectory.
inline EntropyReport analyze_trajectory(const TrajectoryRecord& rec, const CoefficientSet& coeffs,
                                        const Domain& domain,
                                        DissipationForm form = DissipationForm::Simulation) {
  EntropyReport rep;
  rep.form = form;
  const Transform tr(domain, coeffs.level.k);
  const double omega = domain.measure();
  const double sqrt_omega = std::sqrt(omega);
  const ModelParams& p = coeffs.params;
  const double alpha = coeffs.level.alpha;

  rep.rows.reserve(rec.snapshots.size());
  double min_state = std::numeric_limits<double>::infinity();
  for (const Snapshot& s : rec.snapshots) {
    EntropyRow row;
    row.t = s.t;
    const Functionals F = functionals_at(s.w, s.z, coeffs, tr, form);
    row.E = F.E;
    row.D = F.D;
    row.R = F.R;
    row.available = F.available;
    row.mass_u = s.w[0] * sqrt_omega;
    row.mass_v = s.z[0] * sqrt_omega;
    const std::vector<double> u = tr.to_grid(s.w);
    const std::vector<double> v = tr.to_grid(s.z);
    std::vector<double> negu(u.size()), negv(v.size());
    double lu = 0.0, lv = 0.0;
    for (std::size_t m = 0; m < u.size(); ++m) {
      negu[m] = std::max(-u[m], 0.0);
      negv[m] = std::max(-v[m], 0.0);
      lu = std::max(lu, std::abs(u[m]));
      lv = std::max(lv, std::abs(v[m]));
      min_state = std::min({min_state, u[m], v[m]});
    }
    row.neg_mass_u = tr.integrate(negu);
    row.neg_mass_v = tr.integrate(negv);
    row.linf_u = lu;
    row.linf_v = lv;
    if (alpha > 0.0) {
      double acc = 0.0;
      const double e = std::exp(1.0);
      for (std::size_t m = 0; m < u.size(); ++m) {
        const double up = std::max(u[m], 0.0), vp = std::max(v[m], 0.0);
        acc += std::pow(eval_B_alpha(up, alpha), 2.0 - p.q1) * (p.q1 == 1.0 ? std::log(up + e) : 1.0);
        acc += std::pow(eval_B_alpha(vp, alpha), 2.0 - p.q2) * (p.q2 == 1.0 ? std::log(vp + e) : 1.0);
      }
      row.lq_monitor = acc * tr.cell_weight();
    }
    rep.rows.push_back(row);
  }
  rep.min_state = min_state;

  const std::size_t n = rep.rows.size();

  // identity residual at snapshot midpoints
  rep.identity_residual_raw.assign(n > 0 ? n - 1 : 0, std::numeric_limits<double>::quiet_NaN());
  rep.identity_residual_norm = rep.identity_residual_raw;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const EntropyRow& r0 = rep.rows[j];
    const EntropyRow& r1 = rep.rows[j + 1];
    if (!r0.available || !r1.available) continue;
    const double dt = r1.t - r0.t;
    if (!(dt > 0.0)) continue;
    const double dmid = 0.5 * (r0.D + r1.D);
    const double rmid = 0.5 * (r0.R + r1.R);
    const double raw = std::abs((r1.E - r0.E) / dt + dmid - rmid);
    rep.identity_residual_raw[j] = raw;
    rep.identity_residual_norm[j] = raw / (1.0 + std::abs(dmid) + std::abs(rmid));
  }

  // inequality residual E(T) + Q[D](0,T) - E(0) - Q[R](0,T), trapezoid over snapshots
  rep.inequality_residual.assign(n, std::numeric_limits<double>::quiet_NaN());
  rep.tol_entropy.assign(n, std::numeric_limits<double>::quiet_NaN());
  if (n > 0 && rep.rows[0].available) {
    const double E0 = rep.rows[0].E;
    double qd = 0.0, qr = 0.0;       // fine trapezoid prefixes
    double qd_abs = 0.0, qr_abs = 0.0;
    double acc_ident = 0.0;
    // coarse trapezoid over every other snapshot for a Richardson-style estimate
    auto coarse_prefix = [&](std::size_t upto, double& qdc, double& qrc) {
      qdc = 0.0;
      qrc = 0.0;
      std::size_t prev = 0;
      for (std::size_t i = 2; i <= upto; i += 2) {
        const double h = rep.rows[i].t - rep.rows[prev].t;
        qdc += 0.5 * h * (rep.rows[i].D + rep.rows[prev].D);
        qrc += 0.5 * h * (rep.rows[i].R + rep.rows[prev].R);
        prev = i;
      }
      if (prev != upto) {
        const double h = rep.rows[upto].t - rep.rows[prev].t;
        qdc += 0.5 * h * (rep.rows[upto].D + rep.rows[prev].D);
        qrc += 0.5 * h * (rep.rows[upto].R + rep.rows[prev].R);
      }
    };
    rep.inequality_residual[0] = 0.0;
    rep.tol_entropy[0] = 0.0;
    bool chain_ok = true;
    for (std::size_t j = 1; j < n; ++j) {
      const EntropyRow& r0 = rep.rows[j - 1];
      const EntropyRow& r1 = rep.rows[j];
      if (!r1.available || !chain_ok) {
        chain_ok = false;
        continue;
      }
      const double h = r1.t - r0.t;
      qd += 0.5 * h * (r0.D + r1.D);
      qr += 0.5 * h * (r0.R + r1.R);
      qd_abs += 0.5 * h * (std::abs(r0.D) + std::abs(r1.D));
      qr_abs += 0.5 * h * (std::abs(r0.R) + std::abs(r1.R));
      if (std::isfinite(rep.identity_residual_raw[j - 1])) acc_ident += h * rep.identity_residual_raw[j - 1];
      rep.inequality_residual[j] = r1.E + qd - E0 - qr;
      double qdc, qrc;
      coarse_prefix(j, qdc, qrc);
      const double quad_est = std::abs(qd - qdc) + std::abs(qr - qrc);
      const double floor =
          1e-12 * (1.0 + std::abs(E0) + std::abs(r1.E) + qd_abs + qr_abs);
      rep.tol_entropy[j] = quad_est + acc_ident + floor;
    }
  }

  // Lemma-4.6-style linear combination bound (meaningful for H2)
  if (p.kinetics == Kinetics::H2 && n > 0) {
    rep.mass_comb_lhs.resize(n);
    rep.mass_comb_rhs.resize(n);
    const double rate = (p.a2 * p.lambda1 * p.lambda1 / (4.0 * p.mu1) +
                         p.a1 * p.lambda2 * p.lambda2 / (4.0 * p.mu2)) *
                        omega;
    const double base = p.a2 * rep.rows[0].mass_u + p.a1 * rep.rows[0].mass_v;
    for (std::size_t j = 0; j < n; ++j) {
      rep.mass_comb_lhs[j] = p.a2 * rep.rows[j].mass_u + p.a1 * rep.rows[j].mass_v;
      rep.mass_comb_rhs[j] = base + rate * rep.rows[j].t;
    }
  }

  // summary
  double mir = -std::numeric_limits<double>::infinity();
  double midn = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (std::isfinite(rep.inequality_residual[j])) mir = std::max(mir, rep.inequality_residual[j]);
  for (double x : rep.identity_residual_norm)
    if (std::isfinite(x)) midn = std::max(midn, x);
  rep.max_inequality_residual = std::isfinite(mir) ? mir : std::numeric_limits<double>::quiet_NaN();
  rep.max_identity_residual_normalized = midn;
  double drift = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    drift = std::max(drift, std::abs(rep.rows[j].mass_u - rep.rows[0].mass_u));
    drift = std::max(drift, std::abs(rep.rows[j].mass_v - rep.rows[0].mass_v));
  }
  rep.mass_drift = drift;
  return rep;
}

/// Residual series of the integrated entropy inequality (positive values
/// beyond tol_entropy flag a violation).
inline std::vector<double> entropy_inequality_residual(const TrajectoryRecord& rec,
                                                       const CoefficientSet& coeffs,
                                                       const Domain& domain) {
  return analyze_trajectory(rec, coeffs, domain).inequality_residual;
}

/// Midpoint residuals |dE/dt + D - R| (raw, normalized).
inline std::pair<std::vector<double>, std::vector<double>> identity_residual(
    const TrajectoryRecord& rec, const CoefficientSet& coeffs, const Domain& domain) {
  EntropyReport rep = analyze_trajectory(rec, coeffs, domain);
  return {rep.identity_residual_raw, rep.identity_residual_norm};
}

/// Mass / positivity / sup-norm monitor pass (alias of the full analysis).
inline EntropyReport monitors(const TrajectoryRecord& rec, const CoefficientSet& coeffs,
                              const Domain& domain) {
  return analyze_trajectory(rec, coeffs, domain);
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

/// CSV, one row per snapshot. Midpoint (identity) columns hold the value of
/// the interval ending at the row; the first row leaves them empty.
inline void write_entropy_csv(std::ostream& os, const EntropyReport& rep) {
  os << "t,E,D,R,mass_u,mass_v,neg_mass_u,neg_mass_v,linf_u,linf_v,lq_monitor,"
        "inequality_residual,tol_entropy,identity_residual_raw,identity_residual_norm,"
        "mass_comb_lhs,mass_comb_rhs,form\n";
  auto cell = [&](double v) { return std::isfinite(v) ? detail::fmt17(v) : std::string(); };
  for (std::size_t j = 0; j < rep.rows.size(); ++j) {
    const EntropyRow& r = rep.rows[j];
    os << detail::fmt17(r.t) << ',' << cell(r.E) << ',' << cell(r.D) << ',' << cell(r.R) << ','
       << detail::fmt17(r.mass_u) << ',' << detail::fmt17(r.mass_v) << ','
       << detail::fmt17(r.neg_mass_u) << ',' << detail::fmt17(r.neg_mass_v) << ','
       << detail::fmt17(r.linf_u) << ',' << detail::fmt17(r.linf_v) << ',' << cell(r.lq_monitor) << ','
       << cell(rep.inequality_residual[j]) << ',' << cell(rep.tol_entropy[j]) << ','
       << (j > 0 ? cell(rep.identity_residual_raw[j - 1]) : std::string()) << ','
       << (j > 0 ? cell(rep.identity_residual_norm[j - 1]) : std::string()) << ','
       << (j < rep.mass_comb_lhs.size() ? detail::fmt17(rep.mass_comb_lhs[j]) : std::string()) << ','
       << (j < rep.mass_comb_rhs.size() ? detail::fmt17(rep.mass_comb_rhs[j]) : std::string()) << ','
       << to_string(rep.form) << '\n';
  }
}

inline nlohmann::json entropy_summary_json(const EntropyReport& rep) {
  nlohmann::json j;
  j["max_inequality_residual"] = rep.max_inequality_residual;
  j["max_identity_residual_normalized"] = rep.max_identity_residual_normalized;
  j["mass_drift"] = rep.mass_drift;
  j["min_state"] = rep.min_state;
  j["form"] = to_string(rep.form);
  return j;
}

}  // namespace xdif
