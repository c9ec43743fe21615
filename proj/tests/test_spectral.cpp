#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "xdif/spectral.hpp"

using Catch::Approx;
using namespace xdif;

namespace {
constexpr double kPi = std::numbers::pi;

Domain interval(double L, int oversample = 3) {
  Domain d;
  d.shape = Domain::Shape::Interval;
  d.Lx = L;
  d.oversample = oversample;
  return d;
}

Domain rectangle(double Lx, double Ly, int oversample = 3) {
  Domain d;
  d.shape = Domain::Shape::Rectangle;
  d.Lx = Lx;
  d.Ly = Ly;
  return d;
}
}  // namespace

TEST_CASE("eigenpairs of the Neumann cosine basis") {
  Domain d = interval(kPi);
  SECTION("constant mode") {
    Eigenpair e = basis_eigenpair(d, 0);
    CHECK(e.eigenvalue == 0.0);
    CHECK(e.sampler(0.3, 0.0) == Approx(1.0 / std::sqrt(kPi)));
  }
  SECTION("L=pi, j=2") {
    Eigenpair e = basis_eigenpair(d, 2);
    CHECK(e.eigenvalue == Approx(4.0));
    CHECK(e.sampler(0.7, 0.0) == Approx(std::sqrt(2.0 / kPi) * std::cos(2.0 * 0.7)));
  }
  SECTION("2D tensor eigenvalues add") {
    Domain r = rectangle(kPi, 2.0);
    Eigenpair e = basis_eigenpair(r, 1, 3);
    CHECK(e.eigenvalue == Approx(1.0 + std::pow(3.0 * kPi / 2.0, 2)));
  }
}

TEST_CASE("orthonormality by quadrature") {
  Domain d = interval(1.7);
  Transform t(d, 9);
  for (int i = 0; i <= 8; ++i) {
    for (int j = 0; j <= 8; ++j) {
      Eigenpair ei = basis_eigenpair(d, i), ej = basis_eigenpair(d, j);
      std::vector<double> prod(t.grid_size());
      for (int m = 0; m < t.grid_size(); ++m) {
        auto p = t.grid_point(m);
        prod[m] = ei.sampler(p[0], 0.0) * ej.sampler(p[0], 0.0);
      }
      CHECK(t.integrate(prod) == Approx(i == j ? 1.0 : 0.0).margin(1e-12));
    }
  }
}

TEST_CASE("transform round trips and projections") {
  Domain d = interval(2.0);

  SECTION("constant field projects onto mode zero") {
    const double c = 3.25;
    Transform t(d, 8);
    std::vector<double> vals(t.grid_size(), c);
    std::vector<double> w = t.from_grid(vals);
    CHECK(w[0] == Approx(c * std::sqrt(2.0)));
    for (int j = 1; j < 8; ++j) CHECK(std::abs(w[j]) < 1e-13);
  }

  SECTION("round trip of random coefficients, k = 16") {
    Transform t(d, 16);
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> w(16);
    for (double& x : w) x = u(rng);
    std::vector<double> back = t.from_grid(t.to_grid(w));
    for (int j = 0; j < 16; ++j) CHECK(back[j] == Approx(w[j]).margin(1e-13));
  }

  SECTION("projection discards modes beyond the cutoff") {
    SpectralField f = from_sampler(d, 2, [&](double x, double) { return std::cos(3.0 * kPi * x / 2.0); });
    for (double c : f.coeffs) CHECK(std::abs(c) < 1e-13);
  }

  SECTION("Parseval up to k = 64") {
    Transform t(d, 64);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> w(64);
    for (double& x : w) x = u(rng);
    std::vector<double> g = t.to_grid(w);
    std::vector<double> g2(g.size());
    for (std::size_t m = 0; m < g.size(); ++m) g2[m] = g[m] * g[m];
    double coeff_norm2 = 0.0;
    for (double x : w) coeff_norm2 += x * x;
    CHECK(t.integrate(g2) == Approx(coeff_norm2).epsilon(1e-12));
  }

  SECTION("nesting: enlarging k preserves coefficients of bandlimited data") {
    auto f0 = [&](double x, double) {
      return 0.4 + 0.3 * std::cos(kPi * x / 2.0) - 0.2 * std::cos(3.0 * kPi * x / 2.0);
    };
    SpectralField a = from_sampler(d, 8, f0);
    SpectralField b = from_sampler(d, 16, f0);
    for (int j = 0; j < 8; ++j) CHECK(a.coeffs[j] == Approx(b.coeffs[j]).margin(1e-13));
  }
}

TEST_CASE("spectral derivatives") {
  Domain d = interval(kPi);

  SECTION("gradient of a constant vanishes") {
    SpectralField f;
    f.domain = d;
    f.k = 6;
    f.coeffs.assign(6, 0.0);
    f.coeffs[0] = 2.0;
    auto g = derivative(f, DerivKind::Grad);
    for (double v : g[0]) CHECK(v == 0.0);
  }

  SECTION("laplacian acts mode-wise by -lambda_j") {
    Transform t(d, 6);
    std::vector<double> w(6, 0.0);
    w[3] = 1.0;
    std::vector<double> lap = t.laplacian_coeffs(w);
    CHECK(lap[3] == Approx(-9.0));
    for (int j = 0; j < 6; ++j)
      if (j != 3) CHECK(lap[j] == 0.0);
  }

  SECTION("grad laplacian of phi_1 equals -lambda_1 phi_1'") {
    SpectralField f;
    f.domain = d;
    f.k = 8;
    f.coeffs.assign(8, 0.0);
    f.coeffs[1] = 1.0;
    auto gl = derivative(f, DerivKind::GradLaplacian);
    Transform t(d, 8);
    for (int m = 0; m < t.grid_size(); ++m) {
      const double x = t.grid_point(m)[0];
      const double expected = -1.0 * (-std::sqrt(2.0 / kPi) * std::sin(x));
      CHECK(gl[0][m] == Approx(expected).margin(1e-12));
    }
  }
}

TEST_CASE("weak-form projections against the gradient basis") {
  Domain d = interval(1.3);
  const int k = 10;
  Transform t(d, k);

  SECTION("constant vector fields pick up the boundary term only") {
    // int_0^L c phi_i' = c (phi_i(L) - phi_i(0)): zero for even modes, a pure
    // boundary term for odd modes (constants do not satisfy V.nu = 0).
    const double c = 4.2;
    std::vector<double> V(t.grid_size(), c);
    std::vector<double> r = inner_product_with_grad_basis(V, {}, d, k);
    CHECK(std::abs(r[0]) < 1e-12);
    for (int i = 1; i < k; ++i) {
      const double exact = c * std::sqrt(2.0 / d.Lx) * ((i % 2 == 0) ? 0.0 : -2.0);
      if (i % 2 == 0)
        CHECK(std::abs(r[i]) < 1e-12);
      else
        CHECK(r[i] == Approx(exact).epsilon(0.05));  // quadrature error O((i/M)^2)
    }
  }

  SECTION("V = grad phi_1 picks out lambda_1") {
    std::vector<double> w(k, 0.0);
    w[1] = 1.0;
    std::vector<double> gx, gy;
    t.gradient(w, gx, gy);
    std::vector<double> r = t.project_grad(gx, gy);
    const double lambda1 = basis_eigenpair(d, 1).eigenvalue;
    for (int j = 0; j < k; ++j)
      CHECK(r[j] == Approx(j == 1 ? lambda1 : 0.0).margin(1e-11));
  }

  SECTION("2D separable fields reproduce products of 1D results") {
    Domain r2 = rectangle(1.3, 0.9);
    const int kk = 6;
    Transform t2(r2, kk);
    // V = grad(phi_{2,1}); projection must give lambda_{2,1} at (2,1) only
    std::vector<double> w(kk * kk, 0.0);
    w[2 * kk + 1] = 1.0;
    std::vector<double> gx, gy;
    t2.gradient(w, gx, gy);
    std::vector<double> proj = t2.project_grad(gx, gy);
    const double lam = basis_eigenpair(r2, 2, 1).eigenvalue;
    for (int jx = 0; jx < kk; ++jx)
      for (int jy = 0; jy < kk; ++jy) {
        const double want = (jx == 2 && jy == 1) ? lam : 0.0;
        CHECK(proj[jx * kk + jy] == Approx(want).margin(1e-10));
      }
  }
}

TEST_CASE("discrete Neumann behavior at the boundary") {
  // The one-sided difference at the first two grid nodes scales like h * lambda_j
  // times the mode amplitude and halves under grid refinement.
  Domain d3 = interval(kPi, 3);
  Domain d6 = interval(kPi, 6);
  const int k = 8, j = 3;
  auto fd_boundary = [&](const Domain& dom) {
    Transform t(dom, k);
    std::vector<double> w(k, 0.0);
    w[j] = 1.0;
    std::vector<double> g = t.to_grid(w);
    const double h = kPi / t.grid_size();
    return std::abs(g[1] - g[0]) / h;
  };
  const double coarse = fd_boundary(d3);
  const double fine = fd_boundary(d6);
  const double lambda_j = basis_eigenpair(d3, j).eigenvalue;
  const double h3 = kPi / (3 * k);
  CHECK(coarse <= 5.0 * h3 * lambda_j);
  CHECK(fine < 0.7 * coarse);  // first-order decay in h at fixed mode
}

TEST_CASE("field snapshot files round trip") {
  SECTION("interval") {
    SpectralField f;
    f.domain = interval(2.5);
    f.k = 5;
    f.coeffs = {1.0, -0.5, 0.25, 1e-16, 3.75};
    std::stringstream ss;
    write_field(ss, f);
    SpectralField g = read_field(ss);
    CHECK(g.domain.shape == Domain::Shape::Interval);
    CHECK(g.domain.Lx == f.domain.Lx);
    CHECK(g.k == 5);
    for (int i = 0; i < 5; ++i) CHECK(g.coeffs[i] == f.coeffs[i]);
  }
  SECTION("rectangle") {
    SpectralField f;
    f.domain = rectangle(1.0, 2.0);
    f.k = 3;
    f.coeffs.assign(9, 0.125);
    f.coeffs[4] = -2.0;
    std::stringstream ss;
    write_field(ss, f);
    SpectralField g = read_field(ss);
    CHECK(g.domain.shape == Domain::Shape::Rectangle);
    CHECK(g.domain.Ly == 2.0);
    CHECK(g.coeffs[4] == -2.0);
  }
  SECTION("bad magic rejected") {
    std::stringstream ss;
    ss << "NOPE";
    CHECK_THROWS_AS(read_field(ss), std::runtime_error);
  }
}
