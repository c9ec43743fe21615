/// @file sweeps.hpp
/// @brief Empirical limit-process sweeps over the regularization ladder and
///        their convergence / nonnegativity diagnostics.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "xdif/entropy.hpp"
#include "xdif/galerkin.hpp"
#include "xdif/model.hpp"
#include "xdif/serialize.hpp"
#include "xdif/spectral.hpp"

namespace xdif {

struct SweepPlan {
  ModelParams params;
  SolverConfig solver;
  Domain domain;
  std::vector<RegularizationLevel> schedule;
  std::vector<double> comparison_times;
  std::function<double(double, double)> raw_u, raw_v;  // initial data samplers
  double lift = 0.1;
  double target_mass_u = std::numeric_limits<double>::quiet_NaN();  // NaN: keep raw mass
  double target_mass_v = std::numeric_limits<double>::quiet_NaN();

  void validate() const {
    params.validate();
    solver.validate();
    domain.validate();
    if (schedule.empty()) throw std::invalid_argument("SweepPlan: schedule must be nonempty");
    for (const auto& l : schedule) {
      l.validate();
      if (!(l.delta > 0.0 && l.epsilon > 0.0))
        throw std::invalid_argument("SweepPlan: schedule points need delta > 0 and epsilon > 0");
    }
    for (double t : comparison_times)
      if (!(t >= 0.0 && t <= solver.t_end))
        throw std::invalid_argument("SweepPlan: comparison times must lie in [0, t_end]");
    if (!raw_u || !raw_v) throw std::invalid_argument("SweepPlan: initial data samplers missing");
  }
};

enum class SweepAxis { K, Delta, Epsilon, Alpha, Diagonal };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::K: return "k";
    case SweepAxis::Delta: return "delta";
    case SweepAxis::Epsilon: return "epsilon";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Diagonal: return "diagonal";
  }
  return "?";
}

/// Which ladder coordinate varies along the schedule.
inline SweepAxis sweep_axis(const std::vector<RegularizationLevel>& schedule) {
  bool vk = false, vd = false, ve = false, va = false;
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    vk |= schedule[i].k != schedule[0].k;
    vd |= schedule[i].delta != schedule[0].delta;
    ve |= schedule[i].epsilon != schedule[0].epsilon;
    va |= schedule[i].alpha != schedule[0].alpha;
  }
  const int nv = int(vk) + int(vd) + int(ve) + int(va);
  if (nv > 1) return SweepAxis::Diagonal;
  if (vk) return SweepAxis::K;
  if (vd) return SweepAxis::Delta;
  if (ve) return SweepAxis::Epsilon;
  if (va) return SweepAxis::Alpha;
  return SweepAxis::Diagonal;
}

struct SweepPointResult {
  RegularizationLevel level;
  Termination termination = Termination::ReachedTEnd;
  double termination_time = 0.0;
  double max_neg_mass_u = 0.0, max_neg_mass_v = 0.0;
  double mass_u0 = 0.0, mass_v0 = 0.0;
  std::vector<std::optional<std::pair<std::vector<double>, std::vector<double>>>> at_times;
};

struct ConvergenceDiagnostics {
  SweepAxis axis = SweepAxis::Diagonal;
  std::vector<double> comparison_times;
  std::vector<SweepPointResult> points;
  // [pair i][time j]: L2 distance between schedule points i and i+1
  std::vector<std::vector<double>> distance_u, distance_v, distance;
};

namespace detail {

/// Zero-pad coefficients from k_small to k_big modes per axis (nested bases).
inline std::vector<double> embed_coeffs(const std::vector<double>& w, int ks, int kb, int dim) {
  if (ks == kb) return w;
  if (dim == 1) {
    std::vector<double> out(kb, 0.0);
    std::copy(w.begin(), w.end(), out.begin());
    return out;
  }
  std::vector<double> out(static_cast<std::size_t>(kb) * kb, 0.0);
  for (int jx = 0; jx < ks; ++jx)
    for (int jy = 0; jy < ks; ++jy)
      out[static_cast<std::size_t>(jx) * kb + jy] = w[static_cast<std::size_t>(jx) * ks + jy];
  return out;
}

/// Truncate coefficients from k_big to k_small modes per axis (projection P_k).
inline std::vector<double> truncate_coeffs(const std::vector<double>& w, int kb, int ks, int dim) {
  if (ks == kb) return w;
  if (dim == 1) return std::vector<double>(w.begin(), w.begin() + ks);
  std::vector<double> out(static_cast<std::size_t>(ks) * ks, 0.0);
  for (int jx = 0; jx < ks; ++jx)
    for (int jy = 0; jy < ks; ++jy)
      out[static_cast<std::size_t>(jx) * ks + jy] = w[static_cast<std::size_t>(jx) * kb + jy];
  return out;
}

inline double l2_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace detail

/// Integrate every schedule point (initial data prepared once at the finest k
/// and re-projected per point), align states at the comparison times by dense
/// output and compute pairwise L2 distances plus negative-part-mass maxima.
/// Abnormal terminations are recorded, never propagated.
inline ConvergenceDiagnostics run_sweep(
    const SweepPlan& plan, int jobs = 1,
    const std::function<void(std::size_t, const RegularizationLevel&, const TrajectoryRecord&)>&
        on_point = nullptr) {
  plan.validate();
  const int dim = plan.domain.dim();

  int k_max = 0;
  for (const auto& l : plan.schedule) k_max = std::max(k_max, l.k);
  const InitialData master = prepare_initial_data(plan.raw_u, plan.raw_v, plan.domain, k_max,
                                                  plan.target_mass_u, plan.target_mass_v, plan.lift);

  ConvergenceDiagnostics diag;
  diag.axis = sweep_axis(plan.schedule);
  diag.comparison_times = plan.comparison_times;
  diag.points.resize(plan.schedule.size());

  std::mutex cb_mutex;
  auto run_point = [&](std::size_t idx) {
    const RegularizationLevel& lvl = plan.schedule[idx];
    SweepPointResult res;
    res.level = lvl;

    SolverConfig cfg = plan.solver;
    cfg.capture_times = plan.comparison_times;

    const std::vector<double> w0 = detail::truncate_coeffs(master.w, k_max, lvl.k, dim);
    const std::vector<double> z0 = detail::truncate_coeffs(master.z, k_max, lvl.k, dim);
    const CoefficientSet coeffs = build_coefficients(plan.params, lvl);
    const TrajectoryRecord rec = integrate(w0, z0, coeffs, plan.domain, cfg);

    res.termination = rec.termination;
    res.termination_time = rec.termination_time;
    res.mass_u0 = w0[0] * std::sqrt(plan.domain.measure());
    res.mass_v0 = z0[0] * std::sqrt(plan.domain.measure());

    const Transform tr(plan.domain, lvl.k);
    for (const Snapshot& s : rec.snapshots) {
      const std::vector<double> u = tr.to_grid(s.w);
      const std::vector<double> v = tr.to_grid(s.z);
      std::vector<double> negu(u.size()), negv(v.size());
      for (std::size_t m = 0; m < u.size(); ++m) {
        negu[m] = std::max(-u[m], 0.0);
        negv[m] = std::max(-v[m], 0.0);
      }
      res.max_neg_mass_u = std::max(res.max_neg_mass_u, tr.integrate(negu));
      res.max_neg_mass_v = std::max(res.max_neg_mass_v, tr.integrate(negv));
    }

    res.at_times.resize(plan.comparison_times.size());
    for (std::size_t j = 0; j < plan.comparison_times.size(); ++j) {
      const double tc = plan.comparison_times[j];
      for (const Snapshot& s : rec.snapshots) {
        if (std::abs(s.t - tc) <= 1e-12 * std::max(1.0, plan.solver.t_end)) {
          res.at_times[j] = std::make_pair(s.w, s.z);
          break;
        }
      }
    }

    if (on_point) {
      std::lock_guard<std::mutex> lock(cb_mutex);
      on_point(idx, lvl, rec);
    }
    diag.points[idx] = std::move(res);
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < plan.schedule.size(); ++i) run_point(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex q_mutex;
    auto worker = [&]() {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(q_mutex);
          if (next >= plan.schedule.size()) return;
          i = next++;
        }
        run_point(i);
      }
    };
    const int nt = std::min<int>(jobs, static_cast<int>(plan.schedule.size()));
    pool.reserve(nt);
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const std::size_t np = plan.schedule.size();
  const std::size_t ntimes = plan.comparison_times.size();
  diag.distance_u.assign(np > 0 ? np - 1 : 0, std::vector<double>(ntimes, std::numeric_limits<double>::quiet_NaN()));
  diag.distance_v = diag.distance_u;
  diag.distance = diag.distance_u;
  for (std::size_t i = 0; i + 1 < np; ++i) {
    const SweepPointResult& A = diag.points[i];
    const SweepPointResult& B = diag.points[i + 1];
    const int kc = std::max(A.level.k, B.level.k);
    for (std::size_t j = 0; j < ntimes; ++j) {
      if (!A.at_times[j] || !B.at_times[j]) continue;
      const auto& [wa, za] = *A.at_times[j];
      const auto& [wb, zb] = *B.at_times[j];
      const double du = detail::l2_diff(detail::embed_coeffs(wa, A.level.k, kc, dim),
                                        detail::embed_coeffs(wb, B.level.k, kc, dim));
      const double dv = detail::l2_diff(detail::embed_coeffs(za, A.level.k, kc, dim),
                                        detail::embed_coeffs(zb, B.level.k, kc, dim));
      diag.distance_u[i][j] = du;
      diag.distance_v[i][j] = dv;
      diag.distance[i][j] = std::sqrt(du * du + dv * dv);
    }
  }
  return diag;
}

// ---------------------------------------------------------------------------
// Rate estimation
// ---------------------------------------------------------------------------

struct RateFit {
  double rate = 0.0;
  double residual = 0.0;
  bool converged_exactly = false;
};

/// Least-squares slope of log(distance) against the abscissa (log-parameter
/// for ladder axes, plain k for spectral refinement).
inline RateFit fit_rate(const std::vector<double>& abscissa, const std::vector<double>& distances) {
  RateFit f;
  if (abscissa.size() != distances.size() || abscissa.size() < 2)
    throw std::invalid_argument("fit_rate: need matching arrays with >= 2 entries");
  for (double d : distances)
    if (d == 0.0) {
      f.converged_exactly = true;
      return f;
    }
  const std::size_t n = abscissa.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = abscissa[i], y = std::log(distances[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  f.rate = (n * sxy - sx * sy) / denom;
  const double icept = (sy - f.rate * sx) / n;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::log(distances[i]) - (f.rate * abscissa[i] + icept);
    rss += e * e;
  }
  f.residual = std::sqrt(rss / n);
  return f;
}

struct RateTable {
  SweepAxis axis = SweepAxis::Diagonal;
  std::vector<double> times;
  std::vector<RateFit> fits;  // one per comparison time
};

inline RateTable estimate_rates(const ConvergenceDiagnostics& diag) {
  if (diag.points.size() < 3) throw std::invalid_argument("estimate_rates: need >= 3 schedule points");
  RateTable tab;
  tab.axis = diag.axis;
  tab.times = diag.comparison_times;

  auto abscissa_of = [&](std::size_t pair_idx) -> double {
    const RegularizationLevel& l = diag.points[pair_idx + 1].level;
    switch (diag.axis) {
      case SweepAxis::K: return static_cast<double>(l.k);
      case SweepAxis::Delta: return std::log(l.delta);
      case SweepAxis::Epsilon: return std::log(l.epsilon);
      case SweepAxis::Alpha: return std::log(l.alpha);
      case SweepAxis::Diagonal: return static_cast<double>(pair_idx + 1);
    }
    return static_cast<double>(pair_idx + 1);
  };
  // For parameter axes the abscissa is log(parameter), so fit_rate's slope of
  // log(distance) is the usual log-log rate.
  for (std::size_t j = 0; j < diag.comparison_times.size(); ++j) {
    std::vector<double> xs, ds;
    for (std::size_t i = 0; i + 1 < diag.points.size(); ++i) {
      const double d = diag.distance[i][j];
      if (!std::isfinite(d)) continue;
      xs.push_back(abscissa_of(i));
      ds.push_back(d);
    }
    if (xs.size() >= 2)
      tab.fits.push_back(fit_rate(xs, ds));
    else
      tab.fits.push_back(RateFit{});
  }
  return tab;
}

// ---------------------------------------------------------------------------
// Emission and content addressing
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Content-addressed directory name for one sweep point.
inline std::string point_dir_name(const ModelParams& params, const RegularizationLevel& lvl) {
  nlohmann::json j;
  j["model"] = params;
  j["level"] = lvl;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "point_%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

inline void write_diagnostics_csv(std::ostream& os, const ConvergenceDiagnostics& diag) {
  os << "pair,axis,axis_value,time,distance_u,distance_v,distance\n";
  auto cell = [&](double v) { return std::isfinite(v) ? detail::fmt17(v) : std::string(); };
  for (std::size_t i = 0; i + 1 < diag.points.size(); ++i) {
    const RegularizationLevel& l = diag.points[i + 1].level;
    double axis_value = 0.0;
    switch (diag.axis) {
      case SweepAxis::K: axis_value = l.k; break;
      case SweepAxis::Delta: axis_value = l.delta; break;
      case SweepAxis::Epsilon: axis_value = l.epsilon; break;
      case SweepAxis::Alpha: axis_value = l.alpha; break;
      case SweepAxis::Diagonal: axis_value = static_cast<double>(i + 1); break;
    }
    for (std::size_t j = 0; j < diag.comparison_times.size(); ++j) {
      os << i << ',' << to_string(diag.axis) << ',' << detail::fmt17(axis_value) << ','
         << detail::fmt17(diag.comparison_times[j]) << ',' << cell(diag.distance_u[i][j]) << ','
         << cell(diag.distance_v[i][j]) << ',' << cell(diag.distance[i][j]) << '\n';
    }
  }
}

inline nlohmann::json diagnostics_summary_json(const ConvergenceDiagnostics& diag) {
  nlohmann::json j;
  j["axis"] = to_string(diag.axis);
  j["comparison_times"] = diag.comparison_times;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : diag.points) {
    nlohmann::json e;
    e["level"] = p.level;
    e["termination"] = to_string(p.termination);
    e["termination_time"] = p.termination_time;
    e["max_neg_mass_u"] = p.max_neg_mass_u;
    e["max_neg_mass_v"] = p.max_neg_mass_v;
    e["mass_u0"] = p.mass_u0;
    e["mass_v0"] = p.mass_v0;
    pts.push_back(e);
  }
  j["points"] = pts;
  nlohmann::json dist = nlohmann::json::array();
  for (std::size_t i = 0; i + 1 < diag.points.size(); ++i) dist.push_back(diag.distance[i]);
  j["distance"] = dist;
  if (diag.points.size() >= 3) {
    RateTable tab = estimate_rates(diag);
    nlohmann::json rates = nlohmann::json::array();
    for (std::size_t jj = 0; jj < tab.fits.size(); ++jj) {
      nlohmann::json r;
      r["time"] = tab.times[jj];
      if (tab.fits[jj].converged_exactly) {
        r["rate"] = "converged-exactly";
      } else {
        r["rate"] = tab.fits[jj].rate;
        r["residual"] = tab.fits[jj].residual;
      }
      rates.push_back(r);
    }
    j["rates"] = rates;
  }
  return j;
}

}  // namespace xdif
