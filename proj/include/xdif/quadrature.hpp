/// @file quadrature.hpp
/// @brief Adaptive 1D quadrature and cumulative antiderivative tables.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace xdif {

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK dqk15).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kGk15WeightsK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGk15WeightsG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

/// One 15-point panel; err is |Kronrod - Gauss| (a conservative indicator
/// that scales with the panel, unlike rescaled heuristics).
template <class F>
double gk15_panel(const F& f, double a, double b, double& err) {
  const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
  const double fc = f(c);
  double resk = kGk15WeightsK[7] * fc;
  double resg = kGk15WeightsG[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = hl * kGk15Nodes[i];
    const double f1 = f(c - x), f2 = f(c + x);
    resk += kGk15WeightsK[i] * (f1 + f2);
    if (i % 2 == 1) resg += kGk15WeightsG[i / 2] * (f1 + f2);
  }
  err = std::abs((resk - resg) * hl);
  return resk * hl;
}

template <class F>
double gk15_recurse(const F& f, double a, double b, double rel_tol, double abs_floor, int depth) {
  double err = 0.0;
  const double v = gk15_panel(f, a, b, err);
  if (depth <= 0 || err <= std::max(rel_tol * std::abs(v), abs_floor)) return v;
  const double c = 0.5 * (a + b);
  return gk15_recurse(f, a, c, rel_tol, 0.5 * abs_floor, depth - 1) +
         gk15_recurse(f, c, b, rel_tol, 0.5 * abs_floor, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss--Kronrod (15-point) integral of f over [a, b].
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double rel_tol = 1e-12) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  // A first sweep fixes the absolute scale so that near-zero panel integrals
  // (sign changes, tiny subintervals) do not force needless refinement.
  double err0 = 0.0;
  const double coarse = detail::gk15_panel(f, a, b, err0);
  const double abs_floor = 1e-3 * rel_tol * std::abs(coarse);
  return sign * detail::gk15_recurse(f, a, b, rel_tol, abs_floor, 40);
}

/// Cumulative antiderivative F(s) = int_anchor^s f, tabulated on a fixed node grid
/// and evaluated by cubic Hermite interpolation with exact node derivatives
/// (F' = f is known analytically) plus a Fritsch--Carlson monotone limiter.
/// Queries outside the node range fall back to direct adaptive quadrature from
/// the nearest end node.
class AntiderivativeTable {
 public:
  AntiderivativeTable() = default;

  /// @param nodes  strictly increasing; must contain `anchor` exactly.
  AntiderivativeTable(std::vector<double> nodes, double anchor,
                      std::function<double(double)> integrand, double rel_tol = 1e-12)
      : nodes_(std::move(nodes)), integrand_(std::move(integrand)) {
    const std::size_t n = nodes_.size();
    if (n < 2) throw std::invalid_argument("AntiderivativeTable: need at least two nodes");
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), anchor);
    if (it == nodes_.end() || *it != anchor)
      throw std::invalid_argument("AntiderivativeTable: anchor must be a node");
    const std::size_t ia = static_cast<std::size_t>(it - nodes_.begin());

    values_.assign(n, 0.0);
    derivs_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) derivs_[i] = integrand_(nodes_[i]);

    for (std::size_t i = ia; i + 1 < n; ++i)
      values_[i + 1] = values_[i] + integrate_adaptive(integrand_, nodes_[i], nodes_[i + 1], rel_tol);
    for (std::size_t i = ia; i > 0; --i)
      values_[i - 1] = values_[i] - integrate_adaptive(integrand_, nodes_[i - 1], nodes_[i], rel_tol);

    limited_lo_ = derivs_;
    limited_hi_ = derivs_;
    apply_monotone_limiter();
  }

  bool empty() const { return nodes_.empty(); }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  double value_at_node(std::size_t i) const { return values_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }

  double operator()(double s) const {
    if (nodes_.empty()) throw std::logic_error("AntiderivativeTable: empty");
    if (s <= nodes_.front())
      return values_.front() - integrate_adaptive(integrand_, s, nodes_.front());
    if (s >= nodes_.back())
      return values_.back() + integrate_adaptive(integrand_, nodes_.back(), s);

    const std::size_t i = interval_of(s);
    const double x0 = nodes_[i], x1 = nodes_[i + 1];
    const double h = x1 - x0;
    const double t = (s - x0) / h;
    const double y0 = values_[i], y1 = values_[i + 1];
    const double d0 = limited_hi_[i] * h, d1 = limited_lo_[i + 1] * h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
  }

 private:
  std::size_t interval_of(double s) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
    std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
    if (i == 0) return 0;
    if (i >= nodes_.size()) return nodes_.size() - 2;
    return i - 1;
  }

  // Per-interval Fritsch--Carlson limiting of the one-sided derivatives. With
  // exact derivatives of a smooth monotone integrand this is nearly always a
  // no-op, but it protects the sign properties of the interpolant near flat
  // data (e.g. G'(1) = 0).
  void apply_monotone_limiter() {
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
      const double h = nodes_[i + 1] - nodes_[i];
      const double delta = (values_[i + 1] - values_[i]) / h;
      double d0 = limited_hi_[i], d1 = limited_lo_[i + 1];
      if (delta == 0.0) {
        d0 = 0.0;
        d1 = 0.0;
      } else {
        double a = d0 / delta, b = d1 / delta;
        if (a < 0.0) a = 0.0;
        if (b < 0.0) b = 0.0;
        const double r = a * a + b * b;
        if (r > 9.0) {
          const double tau = 3.0 / std::sqrt(r);
          a *= tau;
          b *= tau;
        }
        d0 = a * delta;
        d1 = b * delta;
      }
      limited_hi_[i] = d0;
      limited_lo_[i + 1] = d1;
    }
  }

  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> derivs_;       // exact f at nodes
  std::vector<double> limited_lo_;   // derivative used when node is the right end
  std::vector<double> limited_hi_;   // derivative used when node is the left end
  std::function<double(double)> integrand_;
};

/// Log-spaced node grid over [lo, hi] with `per_decade` intervals per decade.
/// Exact powers of ten are hit exactly (in particular s = 1), so tables
/// anchored at 1 vanish there without interpolation error.
inline std::vector<double> log_node_grid(double lo, double hi, int per_decade) {
  const double d0 = std::log10(lo), d1 = std::log10(hi);
  const long j0 = std::lround(d0 * per_decade), j1 = std::lround(d1 * per_decade);
  std::vector<double> nodes;
  nodes.reserve(static_cast<std::size_t>(j1 - j0 + 1));
  for (long j = j0; j <= j1; ++j) {
    if (j == 0)
      nodes.push_back(1.0);
    else
      nodes.push_back(std::pow(10.0, static_cast<double>(j) / per_decade));
  }
  return nodes;
}

}  // namespace xdif
