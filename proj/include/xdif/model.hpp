/// @file model.hpp
/// @brief Model parameters, the prototype/truncated/shifted nonlinearities and
///        the entropy integrands G, G' at every regularization level.
#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "xdif/quadrature.hpp"

namespace xdif {

enum class Kinetics { H1, H2 };

inline const char* to_string(Kinetics k) { return k == Kinetics::H1 ? "H1" : "H2"; }

/// Full parameter record of the two-species cross-diffusion model.
struct ModelParams {
  double d1 = 1.0, d2 = 1.0;      ///< diffusion strengths, > 0
  double chi1 = 1.0, chi2 = 1.0;  ///< taxis strengths, > 0
  double m1 = 1.0, m2 = 1.0;      ///< diffusion exponents
  double q1 = 1.0, q2 = 1.0;      ///< taxis saturation exponents, <= 1
  double lambda1 = 0.0, lambda2 = 0.0;
  double mu1 = 0.0, mu2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
  Kinetics kinetics = Kinetics::H1;
  int n = 1;  ///< spatial dimension, 1 or 2

  void validate() const {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw std::invalid_argument("ModelParams: d1, d2 must be positive");
    if (!(chi1 > 0.0) || !(chi2 > 0.0))
      throw std::invalid_argument("ModelParams: chi1, chi2 must be positive");
    if (!(q1 <= 1.0) || !(q2 <= 1.0)) throw std::invalid_argument("ModelParams: q1, q2 must be <= 1");
    if (n != 1 && n != 2) throw std::invalid_argument("ModelParams: n must be 1 or 2");
    const double ks[6] = {lambda1, lambda2, mu1, mu2, a1, a2};
    if (kinetics == Kinetics::H1) {
      for (double v : ks)
        if (v != 0.0) throw std::invalid_argument("ModelParams: H1 requires all kinetic coefficients = 0");
    } else {
      for (double v : ks)
        if (!(v > 0.0)) throw std::invalid_argument("ModelParams: H2 requires all kinetic coefficients > 0");
    }
  }

  double q_min() const { return std::min(q1, q2); }
};

/// Active rung of the approximation ladder.
struct RegularizationLevel {
  double alpha = 0.0;    ///< truncation parameter, [0, 1); 0 = prototype coefficients
  double delta = 0.0;    ///< desingularization shift, [0, 1)
  double epsilon = 0.0;  ///< fourth-order strength, [0, 1)
  int k = 16;            ///< Galerkin modes per spatial axis

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("RegularizationLevel: alpha in [0,1)");
    if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("RegularizationLevel: delta in [0,1)");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
      throw std::invalid_argument("RegularizationLevel: epsilon in [0,1)");
    if (k < 1) throw std::invalid_argument("RegularizationLevel: k must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Prototype nonlinearities
// ---------------------------------------------------------------------------

enum class Prototype { D1, D2, S1, S2, F1, F2 };

namespace detail {
inline void require_nonneg(double s, const char* what) {
  if (!(s >= 0.0)) throw std::domain_error(std::string(what) + ": argument must be >= 0");
}
}  // namespace detail

/// D_i(s) = d_i (s+1)^(m_i - 1), s >= 0.
inline double prototype_D(int i, const ModelParams& p, double s) {
  detail::require_nonneg(s, "prototype_D");
  const double d = (i == 1) ? p.d1 : p.d2;
  const double m = (i == 1) ? p.m1 : p.m2;
  return d * std::pow(s + 1.0, m - 1.0);
}

/// S_i(s) = chi_i s (s+1)^(q_i - 1), s >= 0.
inline double prototype_S(int i, const ModelParams& p, double s) {
  detail::require_nonneg(s, "prototype_S");
  const double chi = (i == 1) ? p.chi1 : p.chi2;
  const double q = (i == 1) ? p.q1 : p.q2;
  return chi * s * std::pow(s + 1.0, q - 1.0);
}

/// f_i(s1, s2) = lambda_i s_i - mu_i s_i^2 +/- a_i s1 s2 (plus sign for i = 1).
inline double prototype_f(int i, const ModelParams& p, double s1, double s2) {
  detail::require_nonneg(s1, "prototype_f");
  detail::require_nonneg(s2, "prototype_f");
  const double lam = (i == 1) ? p.lambda1 : p.lambda2;
  const double mu = (i == 1) ? p.mu1 : p.mu2;
  const double a = (i == 1) ? p.a1 : p.a2;
  const double si = (i == 1) ? s1 : s2;
  const double sign = (i == 1) ? 1.0 : -1.0;
  return lam * si - mu * si * si + sign * a * s1 * s2;
}

inline double eval_prototype(Prototype which, const ModelParams& p, double s1, double s2 = 0.0) {
  switch (which) {
    case Prototype::D1: return prototype_D(1, p, s1);
    case Prototype::D2: return prototype_D(2, p, s1);
    case Prototype::S1: return prototype_S(1, p, s1);
    case Prototype::S2: return prototype_S(2, p, s1);
    case Prototype::F1: return prototype_f(1, p, s1, s2);
    case Prototype::F2: return prototype_f(2, p, s1, s2);
  }
  throw std::logic_error("eval_prototype: bad selector");
}

// ---------------------------------------------------------------------------
// Auxiliary functions
// ---------------------------------------------------------------------------

/// B_alpha(s) = (s+1) / (1 + alpha (s+1)), s >= 0.
inline double eval_B_alpha(double s, double alpha) {
  detail::require_nonneg(s, "eval_B_alpha");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::domain_error("eval_B_alpha: alpha in [0,1)");
  return (s + 1.0) / (1.0 + alpha * (s + 1.0));
}

/// L_q(s) = 1 for q < 1, ln s for q = 1.
inline double eval_L_q(double s, double q) {
  if (!(q <= 1.0)) throw std::domain_error("eval_L_q: q must be <= 1");
  if (q < 1.0) return 1.0;
  if (!(s > 0.0)) throw std::domain_error("eval_L_q: s must be > 0 when q = 1");
  return std::log(s);
}

/// Smooth transition xi with xi = 1 on (-inf, 0], xi = 0 on [1, inf).
inline double xi_bump(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - s));  // phi(1 - s)
  const double b = std::exp(-1.0 / s);          // phi(s)
  return a / (a + b);
}

/// xi_alpha(s) = xi(alpha^(1/(4 - qmin)) s - 1); identically 1 for alpha = 0.
inline double xi_alpha(double s, double alpha, double q_min) {
  if (alpha <= 0.0) return 1.0;
  const double scale = std::pow(alpha, 1.0 / (4.0 - q_min));
  return xi_bump(scale * s - 1.0);
}

// ---------------------------------------------------------------------------
// Ladder coefficients
// ---------------------------------------------------------------------------

namespace detail {

/// alpha-truncated diffusion, s >= 0: d_i B_alpha^(m_i-1)(s) + alpha (prototype at alpha = 0).
inline double D_level(int i, const ModelParams& p, double alpha, double s) {
  const double d = (i == 1) ? p.d1 : p.d2;
  const double m = (i == 1) ? p.m1 : p.m2;
  if (alpha <= 0.0) return d * std::pow(s + 1.0, m - 1.0);
  const double b = (s + 1.0) / (1.0 + alpha * (s + 1.0));
  return d * std::pow(b, m - 1.0) + alpha;
}

/// alpha-truncated sensitivity, s >= 0 (prototype at alpha = 0), without delta shift.
inline double S_level(int i, const ModelParams& p, double alpha, double s) {
  const double chi = (i == 1) ? p.chi1 : p.chi2;
  const double q = (i == 1) ? p.q1 : p.q2;
  if (alpha <= 0.0) return chi * s * std::pow(s + 1.0, q - 1.0);
  return chi * s * std::pow(s + 1.0, q - 1.0) / std::pow(1.0 + alpha * (s + 1.0), q);
}

}  // namespace detail

/// All scalar coefficient functions of one regularization level, extended to
/// the whole real line the way the regularized problems need them: D at |s|,
/// S at |s| plus delta, f at positive parts (with the alpha-cutoff).
/// G and G' are the entropy integrands built from the same S.
struct CoefficientSet {
  ModelParams params;
  RegularizationLevel level;

  std::function<double(double)> D1, D2;
  std::function<double(double)> S1, S2;
  std::function<double(double, double)> f1, f2;
  std::function<double(double)> G1, G2, Gprime1, Gprime2;

  /// true iff delta > 0, i.e. G and G' are finite on all of R.
  bool g_on_reals = false;
};

namespace detail {

struct GPair {
  std::function<double(double)> G, Gp;
};

/// Closed forms at the prototype level (alpha = delta = 0) for q in {0, 1}.
inline bool closed_form_G(double chi, double q, GPair& out) {
  if (q == 1.0) {
    out.Gp = [chi](double s) {
      if (!(s > 0.0)) throw std::domain_error("Gprime: singular at s <= 0 when delta = 0");
      return std::log(s) / chi;
    };
    out.G = [chi](double s) {
      if (!(s > 0.0)) throw std::domain_error("G: singular at s <= 0 when delta = 0");
      return (s * std::log(s) - s + 1.0) / chi;
    };
    return true;
  }
  if (q == 0.0) {
    out.Gp = [chi](double s) {
      if (!(s > 0.0)) throw std::domain_error("Gprime: singular at s <= 0 when delta = 0");
      return (s - 1.0 + std::log(s)) / chi;
    };
    out.G = [chi](double s) {
      if (!(s > 0.0)) throw std::domain_error("G: singular at s <= 0 when delta = 0");
      return (0.5 * s * s - 2.0 * s + s * std::log(s) + 1.5) / chi;
    };
    return true;
  }
  return false;
}

/// Tabulated G'/G for one species at one ladder level. For delta > 0 the
/// shifted S is even in s, so negative arguments reduce to the reflections
/// G'(-t) = 2 G'(0) - G'(t) and G(-t) = G(t) - 2 t G'(0).
inline GPair tabulated_G(const ModelParams& p, const RegularizationLevel& lvl, int i) {
  const double delta = lvl.delta;
  auto S_shift = [p, alpha = lvl.alpha, delta, i](double s) {
    return S_level(i, p, alpha, std::abs(s)) + delta;
  };

  std::vector<double> nodes = log_node_grid(1e-8, 1e8, 256);
  if (delta > 0.0) nodes.insert(nodes.begin(), 0.0);

  auto gp_tab = std::make_shared<AntiderivativeTable>(
      std::move(nodes), 1.0, [S_shift](double s) { return 1.0 / S_shift(s); });
  auto g_tab = std::make_shared<AntiderivativeTable>(
      gp_tab->nodes(), 1.0, [gp_tab](double s) { return (*gp_tab)(s); });

  GPair out;
  if (delta > 0.0) {
    const double gp0 = (*gp_tab)(0.0);
    out.Gp = [gp_tab, gp0](double s) {
      if (s >= 0.0) return (*gp_tab)(s);
      return 2.0 * gp0 - (*gp_tab)(-s);
    };
    out.G = [g_tab, gp0](double s) {
      if (s >= 0.0) return (*g_tab)(s);
      return (*g_tab)(-s) + 2.0 * s * gp0;
    };
  } else {
    out.Gp = [gp_tab](double s) {
      if (!(s > 0.0)) throw std::domain_error("Gprime: singular at s <= 0 when delta = 0");
      return (*gp_tab)(s);
    };
    out.G = [g_tab](double s) {
      if (!(s > 0.0)) throw std::domain_error("G: singular at s <= 0 when delta = 0");
      return (*g_tab)(s);
    };
  }
  return out;
}

inline GPair make_G(const ModelParams& p, const RegularizationLevel& lvl, int i) {
  const double chi = (i == 1) ? p.chi1 : p.chi2;
  const double q = (i == 1) ? p.q1 : p.q2;
  GPair out;
  if (lvl.alpha == 0.0 && lvl.delta == 0.0 && closed_form_G(chi, q, out)) return out;
  return tabulated_G(p, lvl, i);
}

}  // namespace detail

/// Compose the approximation ladder in the order prototype -> alpha-truncation
/// -> delta-shift and build the matching entropy integrands.
inline CoefficientSet build_coefficients(const ModelParams& params, const RegularizationLevel& level) {
  params.validate();
  level.validate();

  CoefficientSet c;
  c.params = params;
  c.level = level;
  c.g_on_reals = level.delta > 0.0;

  const double alpha = level.alpha, delta = level.delta;
  const double q_min = params.q_min();

  c.D1 = [params, alpha](double s) { return detail::D_level(1, params, alpha, std::abs(s)); };
  c.D2 = [params, alpha](double s) { return detail::D_level(2, params, alpha, std::abs(s)); };
  c.S1 = [params, alpha, delta](double s) { return detail::S_level(1, params, alpha, std::abs(s)) + delta; };
  c.S2 = [params, alpha, delta](double s) { return detail::S_level(2, params, alpha, std::abs(s)) + delta; };

  auto make_f = [params, alpha, q_min](int i) {
    return [params, alpha, q_min, i](double s1, double s2) {
      const double p1 = std::max(s1, 0.0), p2 = std::max(s2, 0.0);
      double v = prototype_f(i, params, p1, p2);
      if (alpha > 0.0) v *= xi_alpha(p1, alpha, q_min) * xi_alpha(p2, alpha, q_min);
      return v;
    };
  };
  c.f1 = make_f(1);
  c.f2 = make_f(2);

  detail::GPair g1 = detail::make_G(params, level, 1);
  detail::GPair g2 = detail::make_G(params, level, 2);
  c.G1 = std::move(g1.G);
  c.Gprime1 = std::move(g1.Gp);
  c.G2 = std::move(g2.G);
  c.Gprime2 = std::move(g2.Gp);
  return c;
}

inline double eval_G(int i, double s, const CoefficientSet& c) {
  return (i == 1) ? c.G1(s) : c.G2(s);
}

inline double eval_Gprime(int i, double s, const CoefficientSet& c) {
  return (i == 1) ? c.Gprime1(s) : c.Gprime2(s);
}

}  // namespace xdif
