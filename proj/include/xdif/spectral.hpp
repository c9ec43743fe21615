/// @file spectral.hpp
/// @brief Neumann-cosine eigenbasis on intervals/rectangles: transforms,
///        spectral differentiation, quadrature and the Galerkin projection.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace xdif {

struct Domain {
  enum class Shape { Interval, Rectangle };
  Shape shape = Shape::Interval;
  double Lx = 1.0;
  double Ly = 0.0;   // ignored for intervals
  int oversample = 3;

  int dim() const { return shape == Shape::Interval ? 1 : 2; }
  double measure() const { return shape == Shape::Interval ? Lx : Lx * Ly; }

  void validate() const {
    if (!(Lx > 0.0)) throw std::invalid_argument("Domain: Lx must be positive");
    if (shape == Shape::Rectangle && !(Ly > 0.0))
      throw std::invalid_argument("Domain: Ly must be positive");
    if (oversample < 2) throw std::invalid_argument("Domain: oversample must be >= 2");
  }
};

/// Scalar field represented by coefficients w.r.t. the orthonormal Neumann
/// eigenfunctions; k modes per axis, 2D flattening row-major by (jx, jy).
struct SpectralField {
  Domain domain;
  int k = 0;
  std::vector<double> coeffs;
  mutable std::optional<std::vector<double>> grid_cache;

  int modes() const { return domain.dim() == 1 ? k : k * k; }
};

struct Eigenpair {
  std::function<double(double, double)> sampler;  // y ignored in 1D
  double eigenvalue = 0.0;
};

namespace detail {

inline double phi_1d(int j, double L, double x) {
  if (j == 0) return 1.0 / std::sqrt(L);
  return std::sqrt(2.0 / L) * std::cos(j * std::numbers::pi * x / L);
}

inline double phi_1d_deriv(int j, double L, double x) {
  if (j == 0) return 0.0;
  const double f = j * std::numbers::pi / L;
  return -std::sqrt(2.0 / L) * f * std::sin(f * x);
}

inline double lambda_1d(int j, double L) {
  const double f = j * std::numbers::pi / L;
  return f * f;
}

}  // namespace detail

/// Eigenpair (phi_j, lambda_j) for the Neumann Laplacian; tensor products in 2D.
inline Eigenpair basis_eigenpair(const Domain& dom, int jx, int jy = 0) {
  dom.validate();
  if (jx < 0 || jy < 0) throw std::invalid_argument("basis_eigenpair: multi-index must be >= 0");
  Eigenpair e;
  if (dom.dim() == 1) {
    const double L = dom.Lx;
    e.sampler = [j = jx, L](double x, double) { return detail::phi_1d(j, L, x); };
    e.eigenvalue = detail::lambda_1d(jx, L);
  } else {
    const double Lx = dom.Lx, Ly = dom.Ly;
    e.sampler = [jx, jy, Lx, Ly](double x, double y) {
      return detail::phi_1d(jx, Lx, x) * detail::phi_1d(jy, Ly, y);
    };
    e.eigenvalue = detail::lambda_1d(jx, Lx) + detail::lambda_1d(jy, Ly);
  }
  return e;
}

/// Precomputed transform tables for one (domain, k): uniform midpoint
/// quadrature grid of oversample*k points per axis; direct summation with
/// cached basis matrices. Quadrature is exact for products of resolved modes.
class Transform {
 public:
  Transform(const Domain& dom, int k) : dom_(dom), k_(k) {
    dom.validate();
    if (k < 1) throw std::invalid_argument("Transform: k must be >= 1");
    axes_ = dom.dim();
    build_axis(0, dom.Lx);
    if (axes_ == 2) build_axis(1, dom.Ly);
    modes_ = (axes_ == 1) ? k_ : k_ * k_;
    grid_ = ax_[0].M * (axes_ == 2 ? ax_[1].M : 1);
    lambda_.resize(modes_);
    if (axes_ == 1) {
      for (int j = 0; j < k_; ++j) lambda_[j] = ax_[0].lambda[j];
    } else {
      for (int jx = 0; jx < k_; ++jx)
        for (int jy = 0; jy < k_; ++jy) lambda_[jx * k_ + jy] = ax_[0].lambda[jx] + ax_[1].lambda[jy];
    }
  }

  const Domain& domain() const { return dom_; }
  int k() const { return k_; }
  int modes() const { return modes_; }
  int grid_size() const { return grid_; }
  double cell_weight() const { return axes_ == 1 ? ax_[0].h : ax_[0].h * ax_[1].h; }
  const std::vector<double>& eigenvalues() const { return lambda_; }

  /// Coordinates of grid node m.
  std::array<double, 2> grid_point(int m) const {
    if (axes_ == 1) return {ax_[0].x[m], 0.0};
    const int My = ax_[1].M;
    return {ax_[0].x[m / My], ax_[1].x[m % My]};
  }

  std::vector<double> to_grid(const std::vector<double>& w) const {
    check_modes(w.size());
    if (axes_ == 1) return apply_modes_to_grid_1d(w, ax_[0].C);
    return apply_modes_to_grid_2d(w, ax_[0].C, ax_[1].C);
  }

  std::vector<double> from_grid(const std::vector<double>& vals) const {
    check_grid(vals.size());
    if (axes_ == 1) return apply_grid_to_modes_1d(vals, ax_[0].C);
    return apply_grid_to_modes_2d(vals, ax_[0].C, ax_[1].C);
  }

  /// Mode-wise Laplacian: coefficients -lambda_j w_j.
  std::vector<double> laplacian_coeffs(const std::vector<double>& w) const {
    check_modes(w.size());
    std::vector<double> out(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) out[j] = -lambda_[j] * w[j];
    return out;
  }

  /// Gradient sampled on the grid; gy untouched in 1D.
  void gradient(const std::vector<double>& w, std::vector<double>& gx, std::vector<double>& gy) const {
    check_modes(w.size());
    if (axes_ == 1) {
      gx = apply_modes_to_grid_1d(w, ax_[0].Cd);
    } else {
      gx = apply_modes_to_grid_2d(w, ax_[0].Cd, ax_[1].C);
      gy = apply_modes_to_grid_2d(w, ax_[0].C, ax_[1].Cd);
    }
  }

  /// (int_Omega V . grad phi_i)_i for a grid-sampled vector field.
  std::vector<double> project_grad(const std::vector<double>& Vx, const std::vector<double>& Vy) const {
    check_grid(Vx.size());
    if (axes_ == 1) return apply_grid_to_modes_1d(Vx, ax_[0].Cd);
    check_grid(Vy.size());
    std::vector<double> rx = apply_grid_to_modes_2d(Vx, ax_[0].Cd, ax_[1].C);
    std::vector<double> ry = apply_grid_to_modes_2d(Vy, ax_[0].C, ax_[1].Cd);
    for (std::size_t i = 0; i < rx.size(); ++i) rx[i] += ry[i];
    return rx;
  }

  /// Midpoint-rule integral of a grid function.
  double integrate(const std::vector<double>& vals) const {
    check_grid(vals.size());
    double s = 0.0;
    for (double v : vals) s += v;
    return s * cell_weight();
  }

 private:
  struct Axis {
    int M = 0;
    double L = 0.0, h = 0.0;
    std::vector<double> x;       // midpoint nodes
    std::vector<double> lambda;  // per 1D mode
    std::vector<double> C;       // k x M, phi_j(x_m)
    std::vector<double> Cd;      // k x M, phi_j'(x_m)
  };

  void build_axis(int a, double L) {
    Axis& ax = ax_[a];
    ax.M = dom_.oversample * k_;
    ax.L = L;
    ax.h = L / ax.M;
    ax.x.resize(ax.M);
    for (int m = 0; m < ax.M; ++m) ax.x[m] = (m + 0.5) * ax.h;
    ax.lambda.resize(k_);
    ax.C.assign(static_cast<std::size_t>(k_) * ax.M, 0.0);
    ax.Cd.assign(static_cast<std::size_t>(k_) * ax.M, 0.0);
    for (int j = 0; j < k_; ++j) {
      ax.lambda[j] = detail::lambda_1d(j, L);
      for (int m = 0; m < ax.M; ++m) {
        ax.C[static_cast<std::size_t>(j) * ax.M + m] = detail::phi_1d(j, L, ax.x[m]);
        ax.Cd[static_cast<std::size_t>(j) * ax.M + m] = detail::phi_1d_deriv(j, L, ax.x[m]);
      }
    }
  }

  void check_modes(std::size_t sz) const {
    if (sz != static_cast<std::size_t>(modes_)) throw std::invalid_argument("Transform: coefficient size mismatch");
  }
  void check_grid(std::size_t sz) const {
    if (sz != static_cast<std::size_t>(grid_)) throw std::invalid_argument("Transform: grid size mismatch");
  }

  std::vector<double> apply_modes_to_grid_1d(const std::vector<double>& w, const std::vector<double>& A) const {
    const int M = ax_[0].M;
    std::vector<double> out(M, 0.0);
    for (int j = 0; j < k_; ++j) {
      const double wj = w[j];
      if (wj == 0.0) continue;
      const double* row = &A[static_cast<std::size_t>(j) * M];
      for (int m = 0; m < M; ++m) out[m] += wj * row[m];
    }
    return out;
  }

  std::vector<double> apply_grid_to_modes_1d(const std::vector<double>& v, const std::vector<double>& A) const {
    const int M = ax_[0].M;
    std::vector<double> out(k_, 0.0);
    for (int j = 0; j < k_; ++j) {
      const double* row = &A[static_cast<std::size_t>(j) * M];
      double s = 0.0;
      for (int m = 0; m < M; ++m) s += v[m] * row[m];
      out[j] = s * ax_[0].h;
    }
    return out;
  }

  // out[mx, my] = sum_{jx, jy} w[jx, jy] Ax[jx][mx] Ay[jy][my]
  std::vector<double> apply_modes_to_grid_2d(const std::vector<double>& w, const std::vector<double>& Ax,
                                             const std::vector<double>& Ay) const {
    const int Mx = ax_[0].M, My = ax_[1].M;
    std::vector<double> t(static_cast<std::size_t>(k_) * My, 0.0);  // t[jx][my]
    for (int jx = 0; jx < k_; ++jx) {
      double* trow = &t[static_cast<std::size_t>(jx) * My];
      for (int jy = 0; jy < k_; ++jy) {
        const double wj = w[static_cast<std::size_t>(jx) * k_ + jy];
        if (wj == 0.0) continue;
        const double* ay = &Ay[static_cast<std::size_t>(jy) * My];
        for (int my = 0; my < My; ++my) trow[my] += wj * ay[my];
      }
    }
    std::vector<double> out(static_cast<std::size_t>(Mx) * My, 0.0);
    for (int mx = 0; mx < Mx; ++mx) {
      double* orow = &out[static_cast<std::size_t>(mx) * My];
      for (int jx = 0; jx < k_; ++jx) {
        const double axv = Ax[static_cast<std::size_t>(jx) * Mx + mx];
        if (axv == 0.0) continue;
        const double* trow = &t[static_cast<std::size_t>(jx) * My];
        for (int my = 0; my < My; ++my) orow[my] += axv * trow[my];
      }
    }
    return out;
  }

  // out[jx, jy] = hx hy sum_{mx, my} v[mx, my] Ax[jx][mx] Ay[jy][my]
  std::vector<double> apply_grid_to_modes_2d(const std::vector<double>& v, const std::vector<double>& Ax,
                                             const std::vector<double>& Ay) const {
    const int Mx = ax_[0].M, My = ax_[1].M;
    std::vector<double> t(static_cast<std::size_t>(k_) * Mx, 0.0);  // t[jy][mx]
    for (int mx = 0; mx < Mx; ++mx) {
      const double* vrow = &v[static_cast<std::size_t>(mx) * My];
      for (int jy = 0; jy < k_; ++jy) {
        const double* ay = &Ay[static_cast<std::size_t>(jy) * My];
        double s = 0.0;
        for (int my = 0; my < My; ++my) s += vrow[my] * ay[my];
        t[static_cast<std::size_t>(jy) * Mx + mx] = s;
      }
    }
    std::vector<double> out(static_cast<std::size_t>(k_) * k_, 0.0);
    const double wgt = ax_[0].h * ax_[1].h;
    for (int jx = 0; jx < k_; ++jx) {
      const double* axr = &Ax[static_cast<std::size_t>(jx) * Mx];
      for (int jy = 0; jy < k_; ++jy) {
        const double* trow = &t[static_cast<std::size_t>(jy) * Mx];
        double s = 0.0;
        for (int mx = 0; mx < Mx; ++mx) s += axr[mx] * trow[mx];
        out[static_cast<std::size_t>(jx) * k_ + jy] = s * wgt;
      }
    }
    return out;
  }

  Domain dom_;
  int k_ = 0;
  int axes_ = 1;
  int modes_ = 0;
  int grid_ = 0;
  Axis ax_[2];
  std::vector<double> lambda_;
};

// ---------------------------------------------------------------------------
// Field-level convenience API
// ---------------------------------------------------------------------------

inline std::vector<double> to_grid(const SpectralField& f) {
  Transform t(f.domain, f.k);
  auto vals = t.to_grid(f.coeffs);
  f.grid_cache = vals;
  return vals;
}

inline SpectralField from_grid(const Domain& dom, int k, const std::vector<double>& values) {
  Transform t(dom, k);
  SpectralField f;
  f.domain = dom;
  f.k = k;
  f.coeffs = t.from_grid(values);
  return f;
}

/// Project a closed-form sampler onto X_k (evaluates on the quadrature grid).
inline SpectralField from_sampler(const Domain& dom, int k,
                                  const std::function<double(double, double)>& f0) {
  Transform t(dom, k);
  std::vector<double> vals(t.grid_size());
  for (int m = 0; m < t.grid_size(); ++m) {
    auto p = t.grid_point(m);
    vals[m] = f0(p[0], p[1]);
  }
  SpectralField f;
  f.domain = dom;
  f.k = k;
  f.coeffs = t.from_grid(vals);
  return f;
}

enum class DerivKind { Grad, Laplacian, GradLaplacian };

/// Grid samples of the requested derivative; one array per component
/// (gradients have dim() arrays, the Laplacian one).
inline std::vector<std::vector<double>> derivative(const SpectralField& f, DerivKind kind) {
  Transform t(f.domain, f.k);
  std::vector<std::vector<double>> out;
  if (kind == DerivKind::Laplacian) {
    out.push_back(t.to_grid(t.laplacian_coeffs(f.coeffs)));
    return out;
  }
  const std::vector<double> w = (kind == DerivKind::Grad) ? f.coeffs : t.laplacian_coeffs(f.coeffs);
  std::vector<double> gx, gy;
  t.gradient(w, gx, gy);
  out.push_back(std::move(gx));
  if (f.domain.dim() == 2) out.push_back(std::move(gy));
  return out;
}

inline std::vector<double> inner_product_with_grad_basis(const std::vector<double>& Vx,
                                                         const std::vector<double>& Vy,
                                                         const Domain& dom, int k) {
  Transform t(dom, k);
  return t.project_grad(Vx, Vy);
}

// ---------------------------------------------------------------------------
// Snapshot file format: little-endian, magic "XDIF".
// ---------------------------------------------------------------------------

namespace io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("field io: truncated stream");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double read_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("field io: truncated stream");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace io

inline void write_field(std::ostream& os, const SpectralField& f) {
  os.write("XDIF", 4);
  io::write_u32(os, 1u);  // version
  io::write_u32(os, f.domain.shape == Domain::Shape::Interval ? 1u : 2u);
  io::write_u32(os, static_cast<std::uint32_t>(f.k));
  if (f.domain.shape == Domain::Shape::Interval) {
    io::write_f64(os, f.domain.Lx);
  } else {
    io::write_f64(os, f.domain.Lx);
    io::write_f64(os, f.domain.Ly);
  }
  io::write_u32(os, static_cast<std::uint32_t>(f.coeffs.size()));
  for (double c : f.coeffs) io::write_f64(os, c);
}

inline SpectralField read_field(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "XDIF", 4) != 0) throw std::runtime_error("field io: bad magic");
  const std::uint32_t version = io::read_u32(is);
  if (version != 1u) throw std::runtime_error("field io: unsupported version");
  const std::uint32_t tag = io::read_u32(is);
  SpectralField f;
  f.k = static_cast<int>(io::read_u32(is));
  if (tag == 1u) {
    f.domain.shape = Domain::Shape::Interval;
    f.domain.Lx = io::read_f64(is);
  } else if (tag == 2u) {
    f.domain.shape = Domain::Shape::Rectangle;
    f.domain.Lx = io::read_f64(is);
    f.domain.Ly = io::read_f64(is);
  } else {
    throw std::runtime_error("field io: bad shape tag");
  }
  const std::uint32_t n = io::read_u32(is);
  f.coeffs.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) f.coeffs[i] = io::read_f64(is);
  if (f.coeffs.size() != static_cast<std::size_t>(f.modes()))
    throw std::runtime_error("field io: coefficient count mismatch");
  return f;
}

}  // namespace xdif
