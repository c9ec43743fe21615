/// @file galerkin.hpp
/// @brief Galerkin right-hand side of the regularized system and its adaptive
///        time integration (embedded RK 5(4), PI step control, dense output).
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "xdif/model.hpp"
#include "xdif/serialize.hpp"
#include "xdif/spectral.hpp"

namespace xdif {

struct SolverConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double dt_init = 1e-6;
  double dt_min = 0.0;  // 0: defaults to 1e-12 * t_end
  double dt_max = std::numeric_limits<double>::infinity();
  double blowup_threshold = 1e6;  // L2 cap realizing the extensibility criterion
  double t_end = 1.0;
  int snapshot_stride = 10;
  double state_cap = 0.0;              // U_max for alpha = 0 runs; 0 disables
  std::vector<double> capture_times;   // exact-time snapshots via dense output

  double effective_dt_min() const { return dt_min > 0.0 ? dt_min : 1e-12 * t_end; }

  void validate() const {
    if (!(t_end > 0.0)) throw std::invalid_argument("SolverConfig: t_end must be positive");
    if (!(dt_init > 0.0)) throw std::invalid_argument("SolverConfig: dt_init must be positive");
    const double dmin = effective_dt_min();
    if (!(dmin <= dt_init && dt_init <= dt_max))
      throw std::invalid_argument("SolverConfig: need dt_min <= dt_init <= dt_max");
    if (!(blowup_threshold > 0.0))
      throw std::invalid_argument("SolverConfig: blowup_threshold must be positive");
    if (snapshot_stride < 1) throw std::invalid_argument("SolverConfig: snapshot_stride must be >= 1");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw std::invalid_argument("SolverConfig: tolerances must be positive");
  }
};

struct GalerkinState {
  double t = 0.0;
  std::vector<double> w, z;
  long accepted = 0, rejected = 0;
  double dt = 0.0;
};

enum class Termination { ReachedTEnd, BlowupSuspected, StepUnderflow, StateCapExceeded };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::ReachedTEnd: return "reached_t_end";
    case Termination::BlowupSuspected: return "blowup_suspected";
    case Termination::StepUnderflow: return "step_underflow";
    case Termination::StateCapExceeded: return "state_cap_exceeded";
  }
  return "?";
}

struct Snapshot {
  double t = 0.0;
  std::vector<double> w, z;
  double dt = 0.0;  // step size in effect when recorded
};

struct TrajectoryRecord {
  std::vector<Snapshot> snapshots;
  Termination termination = Termination::ReachedTEnd;
  double termination_time = 0.0;
  long accepted = 0, rejected = 0;
};

/// Assembles the weak-form right-hand side on the oversampled grid. The state
/// may be negative: D is evaluated at |s|, S carries the delta shift at |s|,
/// f acts on positive parts (all baked into the CoefficientSet).
class GalerkinSystem {
 public:
  GalerkinSystem(const Domain& domain, const CoefficientSet& coeffs)
      : dom_(domain), coeffs_(coeffs), tr_(domain, coeffs.level.k) {
    if (!(coeffs.level.delta > 0.0))
      throw std::invalid_argument("GalerkinSystem: the Galerkin system is defined at delta > 0 only");
  }

  const Transform& transform() const { return tr_; }
  int modes() const { return tr_.modes(); }
  double lambda_max() const {
    double m = 0.0;
    for (double l : tr_.eigenvalues()) m = std::max(m, l);
    return m;
  }
  /// Largest sensitivity value seen on the grid in the latest evaluation;
  /// feeds the fourth-order stability cap.
  double S_sup_observed() const { return s_sup_; }

  void rhs(const std::vector<double>& w, const std::vector<double>& z, std::vector<double>& dw,
           std::vector<double>& dz) const {
    const int M = tr_.grid_size();
    const double eps = coeffs_.level.epsilon;
    const bool two_d = dom_.dim() == 2;

    const std::vector<double> u = tr_.to_grid(w);
    const std::vector<double> v = tr_.to_grid(z);
    check_finite(u, "u");
    check_finite(v, "v");

    std::vector<double> ux, uy, vx, vy;
    tr_.gradient(w, ux, uy);
    tr_.gradient(z, vx, vy);
    check_finite(ux, "grad u");
    check_finite(vx, "grad v");

    std::vector<double> ulx, uly, vlx, vly;
    if (eps > 0.0) {
      tr_.gradient(tr_.laplacian_coeffs(w), ulx, uly);
      tr_.gradient(tr_.laplacian_coeffs(z), vlx, vly);
      check_finite(ulx, "grad laplacian u");
      check_finite(vlx, "grad laplacian v");
    }

    std::vector<double> s1(M), s2(M), d1(M), d2(M), f1(M), f2(M);
    double s_sup = 0.0;
    for (int m = 0; m < M; ++m) {
      s1[m] = coeffs_.S1(u[m]);
      s2[m] = coeffs_.S2(v[m]);
      d1[m] = coeffs_.D1(u[m]);
      d2[m] = coeffs_.D2(v[m]);
      f1[m] = coeffs_.f1(u[m], v[m]);
      f2[m] = coeffs_.f2(u[m], v[m]);
      s_sup = std::max(s_sup, std::max(s1[m], s2[m]));
    }
    s_sup_ = s_sup;
    check_finite(s1, "S1(u)");
    check_finite(s2, "S2(v)");
    check_finite(d1, "D1(|u|)");
    check_finite(d2, "D2(|v|)");
    check_finite(f1, "f1(u,v)");
    check_finite(f2, "f2(u,v)");

    // V_u = eps S1 grad lap u - D1 grad u + S1 grad v
    // V_v = eps S2 grad lap v - D2 grad v - S2 grad u
    std::vector<double> Vux(M), Vvx(M), Vuy, Vvy;
    for (int m = 0; m < M; ++m) {
      Vux[m] = -d1[m] * ux[m] + s1[m] * vx[m];
      Vvx[m] = -d2[m] * vx[m] - s2[m] * ux[m];
    }
    if (eps > 0.0)
      for (int m = 0; m < M; ++m) {
        Vux[m] += eps * s1[m] * ulx[m];
        Vvx[m] += eps * s2[m] * vlx[m];
      }
    if (two_d) {
      Vuy.resize(M);
      Vvy.resize(M);
      for (int m = 0; m < M; ++m) {
        Vuy[m] = -d1[m] * uy[m] + s1[m] * vy[m];
        Vvy[m] = -d2[m] * vy[m] - s2[m] * uy[m];
      }
      if (eps > 0.0)
        for (int m = 0; m < M; ++m) {
          Vuy[m] += eps * s1[m] * uly[m];
          Vvy[m] += eps * s2[m] * vly[m];
        }
    }
    check_finite(Vux, "flux V_u");
    check_finite(Vvx, "flux V_v");

    dw = tr_.project_grad(Vux, Vuy);
    dz = tr_.project_grad(Vvx, Vvy);
    const std::vector<double> pf1 = tr_.from_grid(f1);
    const std::vector<double> pf2 = tr_.from_grid(f2);
    for (int i = 0; i < tr_.modes(); ++i) {
      dw[i] += pf1[i];
      dz[i] += pf2[i];
    }
  }

 private:
  static void check_finite(const std::vector<double>& a, const char* term) {
    for (double x : a)
      if (!std::isfinite(x))
        throw std::runtime_error(std::string("assemble_rhs: non-finite values in ") + term);
  }

  Domain dom_;
  CoefficientSet coeffs_;
  Transform tr_;
  mutable double s_sup_ = 0.0;
};

/// One-shot weak-form right-hand side (Lemma-level weak formulation with
/// test functions running over the retained modes).
inline void assemble_rhs(const GalerkinState& state, const CoefficientSet& coeffs, const Domain& domain,
                         std::vector<double>& dw, std::vector<double>& dz) {
  GalerkinSystem sys(domain, coeffs);
  sys.rhs(state.w, state.z, dw, dz);
}

namespace detail {

/// Dormand--Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  // dense-output weights
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
  /// Real-axis linear stability radius of the 5th order method.
  static constexpr double stability_radius = 3.3;
};

}  // namespace detail

/// Positivized, mass-fixed projection of raw initial data onto X_k:
/// u0 = gamma (P_k[raw] + lift) with gamma chosen so that the integral equals
/// the target mass. Throws if projection ringing dips below -lift/2.
inline std::vector<double> prepare_initial_component(
    const std::function<double(double, double)>& raw, const Domain& domain, int k, double target_mass,
    double lift = 0.1) {
  if (!(lift > 0.0)) throw std::invalid_argument("prepare_initial_component: lift must be positive");
  Transform tr(domain, k);
  std::vector<double> vals(tr.grid_size());
  for (int m = 0; m < tr.grid_size(); ++m) {
    auto p = tr.grid_point(m);
    vals[m] = raw(p[0], p[1]);
    if (!(vals[m] >= 0.0))
      throw std::invalid_argument("prepare_initial_component: raw data must be nonnegative");
  }
  std::vector<double> coeffs = tr.from_grid(vals);
  const std::vector<double> proj = tr.to_grid(coeffs);
  double mn = proj[0];
  for (double x : proj) mn = std::min(mn, x);
  if (mn < -0.5 * lift)
    throw std::runtime_error(
        "prepare_initial_component: projection ringing exceeds lift/2; increase k or smooth the data");

  const double omega = domain.measure();
  const double sqrt_omega = std::sqrt(omega);
  const double mass = coeffs[0] * sqrt_omega;
  if (std::isnan(target_mass)) target_mass = mass;  // keep the raw data's mass
  if (!(target_mass > 0.0))
    throw std::invalid_argument("prepare_initial_component: target mass must be positive");
  const double gamma = target_mass / (mass + lift * omega);
  coeffs[0] += lift * sqrt_omega;
  for (double& c : coeffs) c *= gamma;
  return coeffs;
}

struct InitialData {
  std::vector<double> w, z;
};

inline InitialData prepare_initial_data(const std::function<double(double, double)>& raw_u,
                                        const std::function<double(double, double)>& raw_v,
                                        const Domain& domain, int k, double target_mass_u,
                                        double target_mass_v, double lift = 0.1) {
  InitialData d;
  d.w = prepare_initial_component(raw_u, domain, k, target_mass_u, lift);
  d.z = prepare_initial_component(raw_v, domain, k, target_mass_v, lift);
  return d;
}

/// Advance the Galerkin ODE system to t_end (or until a termination event)
/// with the embedded RK 5(4) pair under PI control. The step size is
/// additionally capped by the fourth-order stability bound
/// dt <= c_stab / (eps * S_sup * lambda_max^2).
inline TrajectoryRecord integrate(const std::vector<double>& w0, const std::vector<double>& z0,
                                  const CoefficientSet& coeffs, const Domain& domain,
                                  const SolverConfig& config) {
  config.validate();
  GalerkinSystem sys(domain, coeffs);
  const int K = sys.modes();
  if (static_cast<int>(w0.size()) != K || static_cast<int>(z0.size()) != K)
    throw std::invalid_argument("integrate: initial coefficient size mismatch");
  for (double x : w0)
    if (!std::isfinite(x)) throw std::invalid_argument("integrate: non-finite initial data");
  for (double x : z0)
    if (!std::isfinite(x)) throw std::invalid_argument("integrate: non-finite initial data");

  using D5 = detail::Dopri5;
  const int N = 2 * K;
  auto eval = [&](const std::vector<double>& y, std::vector<double>& f) {
    std::vector<double> w(y.begin(), y.begin() + K), z(y.begin() + K, y.end());
    std::vector<double> dw, dz;
    sys.rhs(w, z, dw, dz);
    f.resize(N);
    std::copy(dw.begin(), dw.end(), f.begin());
    std::copy(dz.begin(), dz.end(), f.begin() + K);
  };

  TrajectoryRecord rec;
  std::vector<double> y(N);
  std::copy(w0.begin(), w0.end(), y.begin());
  std::copy(z0.begin(), z0.end(), y.begin() + K);

  const double dt_min = config.effective_dt_min();
  const double lam_max = sys.lambda_max();
  const double c_stab = 0.8 * D5::stability_radius;
  const double eps4 = coeffs.level.epsilon;

  std::vector<double> captures = config.capture_times;
  std::sort(captures.begin(), captures.end());
  std::size_t next_capture = 0;

  auto record_snapshot = [&](double t, const std::vector<double>& state, double dt) {
    if (!rec.snapshots.empty() && !(t > rec.snapshots.back().t)) return;
    Snapshot s;
    s.t = t;
    s.w.assign(state.begin(), state.begin() + K);
    s.z.assign(state.begin() + K, state.end());
    s.dt = dt;
    rec.snapshots.push_back(std::move(s));
  };

  std::vector<double> k1(N), k2(N), k3(N), k4(N), k5(N), k6(N), k7(N);
  std::vector<double> ytmp(N), ynew(N), yerr(N);

  eval(y, k1);  // FSAL seed; failures here are hard errors by contract
  double t = 0.0;
  double dt = std::min({config.dt_init, config.dt_max, config.t_end});
  double err_prev = 1.0;

  record_snapshot(0.0, y, dt);

  const double safety = 0.9, fac_min = 0.2, fac_max = 5.0;
  long steps_since_snapshot = 0;

  while (t < config.t_end) {
    // stability cap from the latest observed sensitivity sup
    if (eps4 > 0.0 && sys.S_sup_observed() > 0.0 && lam_max > 0.0) {
      const double cap = c_stab / (eps4 * sys.S_sup_observed() * lam_max * lam_max);
      dt = std::min(dt, cap);
    }
    dt = std::min(dt, config.dt_max);
    if (dt < dt_min) {
      rec.termination = Termination::StepUnderflow;
      rec.termination_time = t;
      record_snapshot(t, y, dt);
      return rec;
    }
    const double h = std::min(dt, config.t_end - t);

    bool step_failed = false;
    double err = 0.0;
    try {
      for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h * D5::a21 * k1[i];
      eval(ytmp, k2);
      for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h * (D5::a31 * k1[i] + D5::a32 * k2[i]);
      eval(ytmp, k3);
      for (int i = 0; i < N; ++i)
        ytmp[i] = y[i] + h * (D5::a41 * k1[i] + D5::a42 * k2[i] + D5::a43 * k3[i]);
      eval(ytmp, k4);
      for (int i = 0; i < N; ++i)
        ytmp[i] = y[i] + h * (D5::a51 * k1[i] + D5::a52 * k2[i] + D5::a53 * k3[i] + D5::a54 * k4[i]);
      eval(ytmp, k5);
      for (int i = 0; i < N; ++i)
        ytmp[i] = y[i] + h * (D5::a61 * k1[i] + D5::a62 * k2[i] + D5::a63 * k3[i] + D5::a64 * k4[i] +
                              D5::a65 * k5[i]);
      eval(ytmp, k6);
      for (int i = 0; i < N; ++i)
        ynew[i] = y[i] + h * (D5::b1 * k1[i] + D5::b3 * k3[i] + D5::b4 * k4[i] + D5::b5 * k5[i] +
                              D5::b6 * k6[i]);
      eval(ynew, k7);
      for (int i = 0; i < N; ++i)
        yerr[i] = h * (D5::e1 * k1[i] + D5::e3 * k3[i] + D5::e4 * k4[i] + D5::e5 * k5[i] +
                       D5::e6 * k6[i] + D5::e7 * k7[i]);

      double acc = 0.0;
      for (int i = 0; i < N; ++i) {
        const double sc = config.abs_tol + config.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double r = yerr[i] / sc;
        acc += r * r;
      }
      err = std::sqrt(acc / N);
      if (!std::isfinite(err)) step_failed = true;
    } catch (const std::runtime_error&) {
      step_failed = true;  // overflow inside a trial stage: reject and shrink
    }

    if (step_failed || err > 1.0) {
      rec.rejected += 1;
      const double fac = step_failed ? fac_min
                                     : std::clamp(safety * std::pow(err, -0.2), fac_min, 1.0);
      dt = h * fac;
      continue;
    }

    // accepted
    rec.accepted += 1;
    const double t_new = t + h;

    // dense output over (t, t_new]
    if (next_capture < captures.size() && captures[next_capture] <= t_new + 1e-14 * config.t_end) {
      std::vector<double> rc2(N), rc3(N), rc4(N), rc5(N);
      for (int i = 0; i < N; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        rc2[i] = ydiff;
        rc3[i] = bspl;
        rc4[i] = ydiff - h * k7[i] - bspl;
        rc5[i] = h * (D5::d1 * k1[i] + D5::d3 * k3[i] + D5::d4 * k4[i] + D5::d5 * k5[i] +
                      D5::d6 * k6[i] + D5::d7 * k7[i]);
      }
      while (next_capture < captures.size() && captures[next_capture] <= t_new + 1e-14 * config.t_end) {
        const double tc = captures[next_capture];
        if (tc >= t) {
          const double theta = std::clamp((tc - t) / h, 0.0, 1.0);
          for (int i = 0; i < N; ++i)
            ytmp[i] = y[i] + theta * (rc2[i] + (1.0 - theta) *
                                                   (rc3[i] + theta * (rc4[i] + (1.0 - theta) * rc5[i])));
          record_snapshot(tc, ytmp, h);
        }
        ++next_capture;
      }
    }

    t = t_new;
    y.swap(ynew);
    k1.swap(k7);  // FSAL
    steps_since_snapshot += 1;

    double fac;
    if (err == 0.0) {
      fac = fac_max;
    } else {
      fac = safety * std::pow(err, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, fac_min, fac_max);
    }
    err_prev = std::max(err, 1e-10);
    dt = h * fac;

    double nrm = 0.0;
    for (double x : y) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm > config.blowup_threshold) {
      rec.termination = Termination::BlowupSuspected;
      rec.termination_time = t;
      record_snapshot(t, y, dt);
      return rec;
    }

    if (config.state_cap > 0.0 && coeffs.level.alpha == 0.0) {
      const auto& tr = sys.transform();
      const std::vector<double> ug = tr.to_grid(std::vector<double>(y.begin(), y.begin() + K));
      const std::vector<double> vg = tr.to_grid(std::vector<double>(y.begin() + K, y.end()));
      double mx = 0.0;
      for (double x : ug) mx = std::max(mx, std::abs(x));
      for (double x : vg) mx = std::max(mx, std::abs(x));
      if (mx > config.state_cap) {
        rec.termination = Termination::StateCapExceeded;
        rec.termination_time = t;
        record_snapshot(t, y, dt);
        return rec;
      }
    }

    if (t >= config.t_end || steps_since_snapshot >= config.snapshot_stride) {
      record_snapshot(t, y, dt);
      steps_since_snapshot = 0;
    }
  }

  rec.termination = Termination::ReachedTEnd;
  rec.termination_time = config.t_end;
  record_snapshot(config.t_end, y, dt);
  return rec;
}

// ---------------------------------------------------------------------------
// Trajectory files: one JSON preamble line, then per snapshot t, dt and the
// two fields in the binary snapshot format. CSV sidecar with scalar series.
// ---------------------------------------------------------------------------

inline void write_trajectory(std::ostream& os, const ModelParams& params, const RegularizationLevel& level,
                             const Domain& domain, const SolverConfig& config,
                             const TrajectoryRecord& rec) {
  nlohmann::json pre;
  pre["model"] = params;
  pre["level"] = level;
  pre["domain"] = domain;
  pre["solver"] = {{"rel_tol", config.rel_tol},
                   {"abs_tol", config.abs_tol},
                   {"dt_init", config.dt_init},
                   {"dt_min", config.dt_min},
                   {"dt_max", config.dt_max},
                   {"blowup_threshold", config.blowup_threshold},
                   {"t_end", config.t_end},
                   {"snapshot_stride", config.snapshot_stride},
                   {"state_cap", config.state_cap}};
  pre["termination"] = to_string(rec.termination);
  pre["termination_time"] = rec.termination_time;
  pre["accepted"] = rec.accepted;
  pre["rejected"] = rec.rejected;
  pre["snapshots"] = rec.snapshots.size();
  os << pre.dump() << "\n";
  for (const Snapshot& s : rec.snapshots) {
    io::write_f64(os, s.t);
    io::write_f64(os, s.dt);
    SpectralField fu{domain, level.k, s.w, std::nullopt};
    SpectralField fv{domain, level.k, s.z, std::nullopt};
    write_field(os, fu);
    write_field(os, fv);
  }
}

struct LoadedTrajectory {
  ModelParams params;
  RegularizationLevel level;
  Domain domain;
  TrajectoryRecord record;
};

inline LoadedTrajectory read_trajectory(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trajectory io: missing preamble");
  nlohmann::json pre = nlohmann::json::parse(line);
  LoadedTrajectory out;
  out.params = pre.at("model").get<ModelParams>();
  out.level = pre.at("level").get<RegularizationLevel>();
  out.domain = pre.at("domain").get<Domain>();
  const std::string term = pre.at("termination").get<std::string>();
  if (term == "reached_t_end")
    out.record.termination = Termination::ReachedTEnd;
  else if (term == "blowup_suspected")
    out.record.termination = Termination::BlowupSuspected;
  else if (term == "step_underflow")
    out.record.termination = Termination::StepUnderflow;
  else
    out.record.termination = Termination::StateCapExceeded;
  out.record.termination_time = pre.at("termination_time").get<double>();
  out.record.accepted = pre.value("accepted", 0L);
  out.record.rejected = pre.value("rejected", 0L);
  const std::size_t n = pre.at("snapshots").get<std::size_t>();
  out.record.snapshots.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Snapshot s;
    s.t = io::read_f64(is);
    s.dt = io::read_f64(is);
    SpectralField fu = read_field(is);
    SpectralField fv = read_field(is);
    s.w = std::move(fu.coeffs);
    s.z = std::move(fv.coeffs);
    out.record.snapshots.push_back(std::move(s));
  }
  return out;
}

}  // namespace xdif
