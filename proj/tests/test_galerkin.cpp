#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "xdif/galerkin.hpp"

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

ModelParams h1_linear() {
  ModelParams p;  // m = q = 1: constant diffusion, linear sensitivity
  p.kinetics = Kinetics::H1;
  return p;
}

ModelParams h2_unit() {
  ModelParams p;
  p.kinetics = Kinetics::H2;
  p.lambda1 = p.lambda2 = p.mu1 = p.mu2 = p.a1 = p.a2 = 1.0;
  return p;
}

/// Brute-force RK4 reference for the spatially homogeneous two-ODE system
/// u' = f1(u, v), v' = f2(u, v); step size 1e-5 keeps the error far below 1e-12.
std::pair<double, double> ode_reference(double u0, double v0, const ModelParams& p, double t_end,
                                        double dt = 1e-5) {
  auto f1 = [&](double u, double v) { return p.lambda1 * u - p.mu1 * u * u + p.a1 * u * v; };
  auto f2 = [&](double u, double v) { return p.lambda2 * v - p.mu2 * v * v - p.a2 * u * v; };
  double u = u0, v = v0;
  const long n = std::lround(t_end / dt);
  for (long i = 0; i < n; ++i) {
    const double k1u = f1(u, v), k1v = f2(u, v);
    const double k2u = f1(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v),
                 k2v = f2(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v);
    const double k3u = f1(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v),
                 k3v = f2(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v);
    const double k4u = f1(u + dt * k3u, v + dt * k3v), k4v = f2(u + dt * k3u, v + dt * k3v);
    u += dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return {u, v};
}

std::vector<double> constant_coeffs(double value, const Domain& dom, int k) {
  std::vector<double> w(static_cast<std::size_t>(dom.dim() == 1 ? k : k * k), 0.0);
  w[0] = value * std::sqrt(dom.measure());
  return w;
}

}  // namespace

TEST_CASE("rhs of homogeneous states") {
  Domain dom = interval(2.0);
  RegularizationLevel lvl;
  lvl.delta = 1e-3;
  lvl.epsilon = 1e-3;
  lvl.k = 8;

  SECTION("H1: identically zero up to quadrature roundoff, mode 0 exactly zero") {
    CoefficientSet c = build_coefficients(h1_linear(), lvl);
    GalerkinState st;
    st.w = constant_coeffs(1.5, dom, lvl.k);
    st.z = constant_coeffs(0.75, dom, lvl.k);
    std::vector<double> dw, dz;
    assemble_rhs(st, c, dom, dw, dz);
    CHECK(dw[0] == 0.0);
    CHECK(dz[0] == 0.0);
    for (int j = 0; j < lvl.k; ++j) {
      CHECK(std::abs(dw[j]) < 1e-13);
      CHECK(std::abs(dz[j]) < 1e-13);
    }
  }

  SECTION("H2: only the mode-0 source survives, equal to f_i(c, c') sqrt(L)") {
    CoefficientSet c = build_coefficients(h2_unit(), lvl);
    GalerkinState st;
    st.w = constant_coeffs(2.0, dom, lvl.k);
    st.z = constant_coeffs(3.0, dom, lvl.k);
    std::vector<double> dw, dz;
    assemble_rhs(st, c, dom, dw, dz);
    const double sqL = std::sqrt(dom.measure());
    CHECK(dw[0] == Approx(prototype_f(1, h2_unit(), 2.0, 3.0) * sqL).epsilon(1e-13));
    CHECK(dz[0] == Approx(prototype_f(2, h2_unit(), 2.0, 3.0) * sqL).epsilon(1e-13));
    for (int j = 1; j < lvl.k; ++j) {
      CHECK(std::abs(dw[j]) < 1e-12);
      CHECK(std::abs(dz[j]) < 1e-12);
    }
  }
}

TEST_CASE("rhs of a single mode reduces to the eigenrelation") {
  Domain dom = interval(kPi);
  RegularizationLevel lvl;
  lvl.delta = 0.5;
  lvl.epsilon = 0.0;  // second-order diagnostic mode
  lvl.k = 8;
  ModelParams p = h1_linear();  // m1 = 1 so D1 is identically d1
  p.d1 = 1.7;
  CoefficientSet c = build_coefficients(p, lvl);

  GalerkinState st;
  st.w.assign(lvl.k, 0.0);
  st.w[1] = 1.0;
  st.z.assign(lvl.k, 0.0);
  std::vector<double> dw, dz;
  assemble_rhs(st, c, dom, dw, dz);

  const double lambda1 = basis_eigenpair(dom, 1).eigenvalue;
  CHECK(dw[1] == Approx(-p.d1 * lambda1).epsilon(1e-12));
  for (int j = 0; j < lvl.k; ++j) {
    if (j != 1) CHECK(std::abs(dw[j]) < 1e-12);
    // v-equation: -S2d(0) grad u . grad phi = -delta * lambda1 at mode 1
    const double expect = (j == 1) ? -lvl.delta * lambda1 : 0.0;
    CHECK(dz[j] == Approx(expect).margin(1e-12));
  }
}

TEST_CASE("integration of homogeneous states") {
  Domain dom = interval(kPi);
  RegularizationLevel lvl;
  lvl.delta = 1e-3;
  lvl.epsilon = 1e-3;
  lvl.k = 8;

  SolverConfig cfg;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-11;
  cfg.dt_init = 1e-4;
  cfg.t_end = 1.0;
  cfg.snapshot_stride = 5;

  SECTION("H1 steady state stays put; mass is conserved bit-exactly") {
    CoefficientSet c = build_coefficients(h1_linear(), lvl);
    const std::vector<double> w0 = constant_coeffs(1.0, dom, lvl.k);
    const std::vector<double> z0 = constant_coeffs(2.0, dom, lvl.k);
    TrajectoryRecord rec = integrate(w0, z0, c, dom, cfg);
    CHECK(rec.termination == Termination::ReachedTEnd);
    for (const Snapshot& s : rec.snapshots) {
      CHECK(s.w[0] == w0[0]);  // mode-0 increments are exactly zero under H1
      CHECK(s.z[0] == z0[0]);
      for (int j = 0; j < lvl.k; ++j) {
        CHECK(std::abs(s.w[j] - w0[j]) < cfg.abs_tol * 100);
        CHECK(std::abs(s.z[j] - z0[j]) < cfg.abs_tol * 100);
      }
    }
  }

  SECTION("H2 homogeneous dynamics matches the two-ODE oracle") {
    CoefficientSet c = build_coefficients(h2_unit(), lvl);
    const std::vector<double> w0 = constant_coeffs(1.0, dom, lvl.k);
    const std::vector<double> z0 = constant_coeffs(1.0, dom, lvl.k);
    SolverConfig cc = cfg;
    cc.capture_times = {0.5};
    TrajectoryRecord rec = integrate(w0, z0, c, dom, cc);
    REQUIRE(rec.termination == Termination::ReachedTEnd);

    const auto [u_ref, v_ref] = ode_reference(1.0, 1.0, h2_unit(), 1.0);
    const double sqL = std::sqrt(dom.measure());
    const Snapshot& last = rec.snapshots.back();
    CHECK(last.t == Approx(1.0));
    CHECK(last.w[0] / sqL == Approx(u_ref).margin(10 * cfg.rel_tol));
    CHECK(last.z[0] / sqL == Approx(v_ref).margin(10 * cfg.rel_tol));

    const auto [u_half, v_half] = ode_reference(1.0, 1.0, h2_unit(), 0.5);
    bool found = false;
    for (const Snapshot& s : rec.snapshots) {
      if (s.t == Approx(0.5).margin(1e-12)) {
        found = true;
        CHECK(s.w[0] / sqL == Approx(u_half).margin(100 * cfg.rel_tol));  // dense output
        CHECK(s.z[0] / sqL == Approx(v_half).margin(100 * cfg.rel_tol));
      }
    }
    CHECK(found);
  }
}

TEST_CASE("termination variants") {
  Domain dom = interval(kPi);
  RegularizationLevel lvl;
  lvl.delta = 1e-2;
  lvl.epsilon = 1e-2;
  lvl.k = 8;

  SECTION("tiny blowup threshold trips the extensibility cap") {
    CoefficientSet c = build_coefficients(h2_unit(), lvl);
    SolverConfig cfg;
    cfg.t_end = 1.0;
    cfg.dt_init = 1e-4;
    cfg.blowup_threshold = 1e-6;
    TrajectoryRecord rec = integrate(constant_coeffs(1.0, dom, lvl.k), constant_coeffs(1.0, dom, lvl.k),
                                     c, dom, cfg);
    CHECK(rec.termination == Termination::BlowupSuspected);
    CHECK(rec.termination_time < 1.0);
  }

  SECTION("fourth-order stability cap below dt_min underflows") {
    RegularizationLevel stiff = lvl;
    stiff.epsilon = 0.9;
    stiff.k = 32;
    CoefficientSet c = build_coefficients(h1_linear(), stiff);
    SolverConfig cfg;
    cfg.t_end = 1.0;
    cfg.dt_init = 1e-2;
    cfg.dt_min = 1e-2;
    TrajectoryRecord rec = integrate(constant_coeffs(1.0, dom, stiff.k),
                                     constant_coeffs(1.0, dom, stiff.k), c, dom, cfg);
    CHECK(rec.termination == Termination::StepUnderflow);
  }

  SECTION("state cap in the alpha = 0 prototype mode") {
    ModelParams p = h2_unit();
    p.lambda1 = 5.0;
    p.mu1 = 0.01;
    CoefficientSet c = build_coefficients(p, lvl);
    SolverConfig cfg;
    cfg.t_end = 5.0;
    cfg.dt_init = 1e-4;
    cfg.state_cap = 2.0;
    TrajectoryRecord rec = integrate(constant_coeffs(1.0, dom, lvl.k), constant_coeffs(1.0, dom, lvl.k),
                                     c, dom, cfg);
    CHECK(rec.termination == Termination::StateCapExceeded);
    CHECK(rec.termination_time < 5.0);
  }
}

TEST_CASE("even-symmetric data stays even-symmetric") {
  Domain dom = interval(kPi);
  RegularizationLevel lvl;
  lvl.delta = 1e-3;
  lvl.epsilon = 1e-3;
  lvl.k = 16;
  CoefficientSet c = build_coefficients(h1_linear(), lvl);

  std::vector<double> w0(lvl.k, 0.0), z0(lvl.k, 0.0);
  w0[0] = 1.4 * std::sqrt(kPi);
  w0[2] = 0.2;
  w0[4] = -0.05;
  z0[0] = 1.1 * std::sqrt(kPi);
  z0[2] = -0.1;

  SolverConfig cfg;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-11;
  cfg.dt_init = 1e-5;
  cfg.t_end = 0.2;
  TrajectoryRecord rec = integrate(w0, z0, c, dom, cfg);
  REQUIRE(rec.termination == Termination::ReachedTEnd);
  for (const Snapshot& s : rec.snapshots)
    for (int j = 1; j < lvl.k; j += 2) {
      CHECK(std::abs(s.w[j]) < 1e-8);
      CHECK(std::abs(s.z[j]) < 1e-8);
    }
}

TEST_CASE("initial data preparation") {
  Domain dom = interval(2.0);

  SECTION("constants are fixed points of the construction") {
    std::vector<double> w =
        prepare_initial_component([](double, double) { return 1.0; }, dom, 8, dom.measure(), 0.1);
    CHECK(w[0] == Approx(std::sqrt(2.0)).epsilon(1e-14));
    for (int j = 1; j < 8; ++j) CHECK(std::abs(w[j]) < 1e-14);
  }

  SECTION("mass hits the target exactly and the grid stays positive") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> amp(0.1, 1.0);
    for (int it = 0; it < 10; ++it) {
      const double a = amp(rng), b = amp(rng);
      auto raw = [&](double x, double) {
        return 0.5 + a * std::exp(-4.0 * (x - 1.0) * (x - 1.0)) + b * x / 2.0;
      };
      const double target = 3.7;
      std::vector<double> w = prepare_initial_component(raw, dom, 16, target, 0.1);
      CHECK(w[0] * std::sqrt(dom.measure()) == Approx(target).epsilon(1e-12));
      Transform tr(dom, 16);
      const std::vector<double> g = tr.to_grid(w);
      for (double v : g) CHECK(v > 0.0);
    }
  }

  SECTION("NaN target keeps the raw mass") {
    auto raw = [](double x, double) { return 1.0 + 0.3 * std::cos(kPi * x / 2.0); };
    std::vector<double> w =
        prepare_initial_component(raw, dom, 16, std::numeric_limits<double>::quiet_NaN(), 0.05);
    CHECK(w[0] * std::sqrt(dom.measure()) == Approx(2.0).epsilon(1e-12));  // int of raw over [0,2]
  }

  SECTION("projection ringing beyond lift/2 aborts") {
    auto step = [](double x, double) { return x < 1.0 ? 2.0 : 0.0; };
    CHECK_THROWS_AS(prepare_initial_component(step, dom, 16, 2.0, 0.1), std::runtime_error);
  }

  SECTION("negative raw data is rejected") {
    auto neg = [](double x, double) { return x - 1.0; };
    CHECK_THROWS_AS(prepare_initial_component(neg, dom, 8, 1.0, 0.1), std::invalid_argument);
  }
}

TEST_CASE("2D rectangle: rhs and integration") {
  Domain dom;
  dom.shape = Domain::Shape::Rectangle;
  dom.Lx = kPi;
  dom.Ly = 2.0;
  dom.oversample = 3;
  RegularizationLevel lvl;
  lvl.delta = 1e-3;
  lvl.epsilon = 1e-3;
  lvl.k = 6;

  SECTION("single tensor mode reduces to the eigenrelation") {
    ModelParams p = h1_linear();
    p.d1 = 0.8;
    RegularizationLevel l2 = lvl;
    l2.epsilon = 0.0;
    l2.delta = 0.5;
    CoefficientSet c = build_coefficients(p, l2);
    GalerkinState st;
    st.w.assign(lvl.k * lvl.k, 0.0);
    st.z.assign(lvl.k * lvl.k, 0.0);
    const int idx = 2 * lvl.k + 1;  // (jx, jy) = (2, 1)
    st.w[idx] = 1.0;
    std::vector<double> dw, dz;
    assemble_rhs(st, c, dom, dw, dz);
    const double lam = basis_eigenpair(dom, 2, 1).eigenvalue;
    CHECK(dw[idx] == Approx(-p.d1 * lam).epsilon(1e-11));
    CHECK(dz[idx] == Approx(-l2.delta * lam).epsilon(1e-11));
    CHECK(dw[0] == 0.0);
  }

  SECTION("homogeneous H2 dynamics matches the two-ODE oracle on a rectangle") {
    ModelParams p = h2_unit();
    p.n = 2;
    CoefficientSet c = build_coefficients(p, lvl);
    std::vector<double> w0(lvl.k * lvl.k, 0.0), z0 = w0;
    const double sqA = std::sqrt(dom.measure());
    w0[0] = sqA;
    z0[0] = sqA;
    SolverConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    cfg.dt_init = 1e-4;
    cfg.t_end = 0.5;
    TrajectoryRecord rec = integrate(w0, z0, c, dom, cfg);
    REQUIRE(rec.termination == Termination::ReachedTEnd);
    const auto [u_ref, v_ref] = ode_reference(1.0, 1.0, p, 0.5);
    CHECK(rec.snapshots.back().w[0] / sqA == Approx(u_ref).margin(1e-8));
    CHECK(rec.snapshots.back().z[0] / sqA == Approx(v_ref).margin(1e-8));
  }

  SECTION("2D initial data preparation keeps mass and positivity") {
    auto raw = [&](double x, double y) {
      return 0.5 + 0.4 * std::exp(-((x - 1.5) * (x - 1.5) + (y - 1.0) * (y - 1.0)) / 0.5);
    };
    std::vector<double> w = prepare_initial_component(raw, dom, 8, 4.0, 0.05);
    CHECK(w[0] * std::sqrt(dom.measure()) == Approx(4.0).epsilon(1e-12));
    Transform tr(dom, 8);
    for (double v : tr.to_grid(w)) CHECK(v > 0.0);
  }
}

TEST_CASE("trajectory files round trip") {
  Domain dom = interval(kPi);
  RegularizationLevel lvl;
  lvl.delta = 1e-3;
  lvl.epsilon = 1e-3;
  lvl.k = 6;
  CoefficientSet c = build_coefficients(h1_linear(), lvl);
  SolverConfig cfg;
  cfg.t_end = 0.05;
  cfg.dt_init = 1e-4;
  cfg.snapshot_stride = 3;
  std::vector<double> w0(6, 0.0), z0(6, 0.0);
  w0[0] = std::sqrt(kPi);
  w0[1] = 0.1;
  z0[0] = std::sqrt(kPi);
  TrajectoryRecord rec = integrate(w0, z0, c, dom, cfg);

  std::stringstream ss;
  write_trajectory(ss, h1_linear(), lvl, dom, cfg, rec);
  LoadedTrajectory back = read_trajectory(ss);
  CHECK(back.level.k == 6);
  CHECK(back.record.snapshots.size() == rec.snapshots.size());
  for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
    CHECK(back.record.snapshots[i].t == rec.snapshots[i].t);
    for (int j = 0; j < 6; ++j) {
      CHECK(back.record.snapshots[i].w[j] == rec.snapshots[i].w[j]);
      CHECK(back.record.snapshots[i].z[j] == rec.snapshots[i].z[j]);
    }
  }
  CHECK(back.record.termination == rec.termination);
}
