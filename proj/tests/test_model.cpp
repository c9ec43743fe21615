#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "xdif/model.hpp"
#include "xdif/quadrature.hpp"

using Catch::Approx;
using namespace xdif;

namespace {

ModelParams h1_params(double m1, double q1, double m2, double q2, double chi1 = 1.0, double chi2 = 1.0) {
  ModelParams p;
  p.m1 = m1;
  p.q1 = q1;
  p.m2 = m2;
  p.q2 = q2;
  p.chi1 = chi1;
  p.chi2 = chi2;
  p.kinetics = Kinetics::H1;
  return p;
}

}  // namespace

TEST_CASE("prototype evaluations match hand computations") {
  ModelParams p;
  p.d1 = 1.0;
  p.m1 = 1.0;
  CHECK(eval_prototype(Prototype::D1, p, 7.0) == Approx(1.0));

  p.chi1 = 2.0;
  p.q1 = 1.0;
  CHECK(eval_prototype(Prototype::S1, p, 3.0) == Approx(6.0));

  ModelParams k;
  k.kinetics = Kinetics::H2;
  k.lambda1 = k.lambda2 = k.mu1 = k.mu2 = k.a1 = k.a2 = 1.0;
  CHECK(eval_prototype(Prototype::F1, k, 2.0, 3.0) == Approx(4.0));     // 2 - 4 + 6
  CHECK(eval_prototype(Prototype::F2, k, 2.0, 3.0) == Approx(-12.0));   // 3 - 9 - 6

  CHECK_THROWS_AS(eval_prototype(Prototype::D1, p, -0.5), std::domain_error);
  CHECK_THROWS_AS(eval_prototype(Prototype::F1, k, 1.0, -1.0), std::domain_error);
}

TEST_CASE("parameter invariants are enforced") {
  ModelParams p;
  p.kinetics = Kinetics::H1;
  p.mu1 = 0.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  ModelParams h2;
  h2.kinetics = Kinetics::H2;
  h2.lambda1 = h2.lambda2 = h2.mu1 = h2.mu2 = h2.a1 = 1.0;
  h2.a2 = 0.0;
  CHECK_THROWS_AS(h2.validate(), std::invalid_argument);

  ModelParams q;
  q.q1 = 1.5;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);

  ModelParams bad_d;
  bad_d.d1 = 0.0;
  CHECK_THROWS_AS(bad_d.validate(), std::invalid_argument);
}

TEST_CASE("coefficient ladder composes prototype, alpha truncation and delta shift") {
  SECTION("alpha truncation of S") {
    ModelParams p = h1_params(1.0, 0.0, 1.0, 0.0);
    RegularizationLevel lvl;
    lvl.alpha = 0.5;
    CoefficientSet c = build_coefficients(p, lvl);
    // chi 1 (1+1)^(-1) / (1 + 0.5*2)^0 = 1/2
    CHECK(c.S1(1.0) == Approx(p.chi1 / 2.0));
  }

  SECTION("delta shift with absolute value") {
    ModelParams p = h1_params(1.0, 1.0, 1.0, 1.0);
    RegularizationLevel lvl;
    lvl.delta = 0.1;
    CoefficientSet c = build_coefficients(p, lvl);
    CHECK(c.S1(-2.0) == Approx(2.1));
  }

  SECTION("cutoff annihilates f beyond 2 alpha^(-1/(4-qmin))") {
    ModelParams p;
    p.kinetics = Kinetics::H2;
    p.lambda1 = p.lambda2 = p.mu1 = p.mu2 = p.a1 = p.a2 = 1.0;
    p.q1 = p.q2 = 0.0;
    RegularizationLevel lvl;
    lvl.alpha = 1e-4;  // alpha^(-1/4) = 10
    CoefficientSet c = build_coefficients(p, lvl);
    CHECK(c.f1(30.0, 1.0) == 0.0);
    CHECK(c.f1(20.0, 1.0) == 0.0);  // exactly at the support edge
    CHECK(c.f2(1.0, 25.0) == 0.0);
    CHECK(c.f1(1.0, 1.0) == Approx(prototype_f(1, p, 1.0, 1.0)));
  }

  SECTION("pointwise convergence f_alpha -> f: cutoff exactly inactive for small alpha") {
    ModelParams p;
    p.kinetics = Kinetics::H2;
    p.lambda1 = p.lambda2 = p.mu1 = p.mu2 = p.a1 = p.a2 = 1.0;
    p.q1 = p.q2 = 0.0;
    RegularizationLevel lvl;
    lvl.alpha = 1e-8;  // states up to 1e2 are below the cutoff onset
    CoefficientSet c = build_coefficients(p, lvl);
    CHECK(c.f1(3.0, 5.0) == prototype_f(1, p, 3.0, 5.0));
    CHECK(c.f2(3.0, 5.0) == prototype_f(2, p, 3.0, 5.0));
  }
}

TEST_CASE("entropy integrands: closed forms") {
  SECTION("q = 1: G'(s) = ln s") {
    ModelParams p = h1_params(1.0, 1.0, 1.0, 1.0);
    RegularizationLevel lvl;
    CoefficientSet c = build_coefficients(p, lvl);
    CHECK(eval_Gprime(1, std::exp(1.0), c) == Approx(1.0).epsilon(1e-12));
    CHECK(eval_G(1, 1.0, c) == 0.0);
    CHECK(eval_Gprime(1, 1.0, c) == 0.0);
    CHECK_THROWS_AS(eval_Gprime(1, 0.0, c), std::domain_error);
    CHECK_THROWS_AS(eval_G(1, -1.0, c), std::domain_error);
  }

  SECTION("q = 0: G'(s) = s - 1 + ln s") {
    ModelParams p = h1_params(1.0, 0.0, 1.0, 0.0);
    RegularizationLevel lvl;
    CoefficientSet c = build_coefficients(p, lvl);
    CHECK(eval_Gprime(1, 2.0, c) == Approx(1.0 + std::log(2.0)).epsilon(1e-12));
    CHECK(eval_G(1, 1.0, c) == 0.0);
    // quadrature cross-check of the antiderivative
    const double oracle = integrate_adaptive([](double s) { return (s + 1.0) / s; }, 1.0, 5.0);
    CHECK(eval_Gprime(1, 5.0, c) == Approx(oracle).epsilon(1e-11));
  }
}

TEST_CASE("entropy integrands: tabulated path against quadrature oracles") {
  ModelParams p = h1_params(1.0, 0.5, 1.0, 0.5, 2.0, 2.0);
  RegularizationLevel lvl;  // alpha = delta = 0, generic q: table path
  CoefficientSet c = build_coefficients(p, lvl);

  auto S = [&](double s) { return prototype_S(1, p, s); };
  auto gp_oracle = [&](double s) {
    return integrate_adaptive([&](double x) { return 1.0 / S(x); }, 1.0, s, 1e-14);
  };

  for (double s : {1e-6, 1e-3, 0.02, 0.5, 1.0, 1.5, 7.0, 120.0, 3.3e4}) {
    const double got = eval_Gprime(1, s, c);
    const double want = gp_oracle(s);
    if (want == 0.0)
      CHECK(std::abs(got) < 1e-12);
    else
      CHECK(got == Approx(want).epsilon(1e-10));
  }

  // G by nested quadrature at a few points
  for (double s : {0.05, 0.8, 3.0, 40.0}) {
    const double want = integrate_adaptive(gp_oracle, 1.0, s, 1e-11);
    CHECK(eval_G(1, s, c) == Approx(want).epsilon(1e-8));
  }

  SECTION("G(1) and G'(1) vanish exactly at every level") {
    for (double alpha : {0.0, 0.3}) {
      for (double delta : {0.0, 0.05}) {
        RegularizationLevel l2;
        l2.alpha = alpha;
        l2.delta = delta;
        CoefficientSet cc = build_coefficients(p, l2);
        CHECK(eval_G(1, 1.0, cc) == 0.0);
        CHECK(eval_Gprime(2, 1.0, cc) == 0.0);
      }
    }
  }
}

TEST_CASE("delta-shifted integrands extend to negative arguments by reflection") {
  ModelParams p = h1_params(1.0, 1.0, 1.0, 1.0);
  RegularizationLevel lvl;
  lvl.delta = 0.5;
  CoefficientSet c = build_coefficients(p, lvl);
  // S(s) = |s| + 1/2; G'(-2) = -ln 15 by direct computation
  CHECK(eval_Gprime(1, -2.0, c) == Approx(-std::log(15.0)).epsilon(1e-9));
  const double g2 = eval_G(1, 2.0, c);
  const double gp0 = eval_Gprime(1, 0.0, c);
  CHECK(eval_G(1, -2.0, c) == Approx(g2 - 2.0 * 2.0 * gp0).epsilon(1e-9));
  CHECK(c.g_on_reals);
}

TEST_CASE("G' is monotone with the right sign pattern at every level") {
  ModelParams p = h1_params(1.2, 0.7, 0.8, -0.4, 1.4, 0.9);
  for (double alpha : {0.0, 0.2}) {
    for (double delta : {0.0, 0.01}) {
      RegularizationLevel lvl;
      lvl.alpha = alpha;
      lvl.delta = delta;
      CoefficientSet c = build_coefficients(p, lvl);
      for (double s : {1e-3, 0.05, 0.4, 0.99}) {
        CHECK(eval_Gprime(1, s, c) <= 0.0);
        CHECK(eval_Gprime(2, s, c) <= 0.0);
      }
      for (double s : {1.01, 2.0, 50.0, 1e4}) {
        CHECK(eval_Gprime(1, s, c) >= 0.0);
        CHECK(eval_Gprime(2, s, c) >= 0.0);
      }
    }
  }
}

TEST_CASE("numerical derivative of G matches G' on a log grid") {
  ModelParams p = h1_params(1.5, 0.3, 1.5, 0.3);
  RegularizationLevel lvl;
  lvl.alpha = 0.1;
  lvl.delta = 0.01;
  CoefficientSet c = build_coefficients(p, lvl);
  for (double s = 1e-3; s <= 1.01e3; s *= 10.0) {
    const double h = 1e-5 * std::max(s, 1.0);
    const double num = (eval_G(1, s + h, c) - eval_G(1, s - h, c)) / (2.0 * h);
    const double gp = eval_Gprime(1, s, c);
    const double scale = std::max(std::abs(gp), 1.0);  // G' vanishes exactly at s = 1
    CHECK(std::abs(num - gp) / scale < 1e-6);
  }
}

TEST_CASE("truncated coefficients respect the B_alpha envelopes") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> qd(-2.0, 1.0), md(-1.0, 3.0), ad(0.01, 0.99), sd(0.0, 50.0);
  for (int it = 0; it < 200; ++it) {
    ModelParams p = h1_params(md(rng), qd(rng), md(rng), qd(rng), 0.5 + ad(rng), 0.5 + ad(rng));
    RegularizationLevel lvl;
    lvl.alpha = ad(rng);
    CoefficientSet c = build_coefficients(p, lvl);
    const double s = sd(rng);
    const double B = eval_B_alpha(s, lvl.alpha);
    CHECK(c.S1(s) <= p.chi1 * std::pow(B, p.q1) + 1e-12);
    CHECK(c.S2(s) <= p.chi2 * std::pow(B, p.q2) + 1e-12);
    CHECK(c.D1(s) >= p.d1 * std::pow(B, p.m1 - 1.0) - 1e-12);
    CHECK(c.D2(s) >= p.d2 * std::pow(B, p.m2 - 1.0) - 1e-12);
    CHECK(c.S1(0.0) == Approx(0.0).margin(1e-15));  // no delta shift here
  }
}

TEST_CASE("B_alpha and L_q definition cases") {
  CHECK(eval_B_alpha(3.7, 0.0) == Approx(4.7));
  for (double s : {0.0, 1.0, 10.0, 1e6}) {
    for (double a : {0.1, 0.5, 0.9}) {
      const double b = eval_B_alpha(s, a);
      CHECK(b <= std::min(s + 1.0, 1.0 / a) + 1e-12);
      CHECK(b > 0.0);
    }
  }
  CHECK(eval_L_q(std::exp(1.0), 1.0) == Approx(1.0));
  CHECK(eval_L_q(std::exp(1.0), 0.5) == Approx(1.0));
  CHECK_THROWS_AS(eval_B_alpha(-1.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(eval_L_q(2.0, 1.5), std::domain_error);
}

TEST_CASE("E is monotone in delta for fixed state (integrand decreases)") {
  ModelParams p = h1_params(1.0, 0.5, 1.0, 0.5);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> sd(0.01, 20.0);
  RegularizationLevel l1, l2;
  l1.delta = 0.01;
  l2.delta = 0.3;
  CoefficientSet c1 = build_coefficients(p, l1);
  CoefficientSet c2 = build_coefficients(p, l2);
  for (int it = 0; it < 50; ++it) {
    const double s = sd(rng);
    CHECK(eval_G(1, s, c2) <= eval_G(1, s, c1) + 1e-12);
  }
}
