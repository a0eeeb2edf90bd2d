#include "hardylab/quadrature.hpp"

#include "hardylab/fields.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace hardylab;

namespace {

PoleConfig two_poles() { return {3, {make_vec({0, 0, 0}), make_vec({2, 0, 0})}}; }

}  // namespace

TEST(SphereMeasure, ClosedForms) {
  EXPECT_NEAR(sphere_surface_measure(2), 2 * std::numbers::pi, 1e-14);
  EXPECT_NEAR(sphere_surface_measure(3), 4 * std::numbers::pi, 1e-14);
  EXPECT_NEAR(sphere_surface_measure(4), 2 * std::numbers::pi * std::numbers::pi, 1e-13);
}

TEST(GaussRules, LegendreIsExactForPolynomials) {
  const GaussRule r = gauss_legendre(6);
  for (int k = 0; k <= 11; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
    const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
    EXPECT_NEAR(s, exact, 1e-14) << k;
  }
}

TEST(GaussRules, GegenbauerMoments) {
  // \int_{-1}^{1} (1 - z^2)^{1/2} dz = pi/2 and \int z^2 (1 - z^2)^{1/2} dz = pi/8.
  const GaussRule r = gauss_gegenbauer(5, 0.5);
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    m0 += r.weights[i];
    m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
  }
  EXPECT_NEAR(m0, std::numbers::pi / 2, 1e-13);
  EXPECT_NEAR(m2, std::numbers::pi / 8, 1e-13);
}

TEST(AngularRule, WeightsAndSecondMoments) {
  for (int dim = 3; dim <= 5; ++dim) {
    const AngularRule r = angular_rule(dim, 6);
    double total = 0.0, x0sq = 0.0;
    for (std::size_t i = 0; i < r.weights.size(); ++i) {
      total += r.weights[i];
      x0sq += r.weights[i] * r.directions[i][0] * r.directions[i][0];
      EXPECT_NEAR(r.directions[i].norm(), 1.0, 1e-14);
    }
    EXPECT_NEAR(total, sphere_surface_measure(dim), 1e-12);
    EXPECT_NEAR(x0sq, sphere_surface_measure(dim) / dim, 1e-12);
  }
}

TEST(Integrability, Threshold) {
  const double ok[] = {1.0, 2.5};
  EXPECT_TRUE(locally_integrable(ok, 3));
  EXPECT_NO_THROW(local_integrability_check(ok, 3));
  const double bad[] = {0.0, 3.0};
  EXPECT_FALSE(locally_integrable(bad, 3));
  try {
    local_integrability_check(bad, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonIntegrableSingularity);
  }
}

TEST(Integrate, Gaussian) {
  const double exps[] = {0.0, 0.0};
  QuadratureSpec spec;
  spec.mc_samples = 8'000'000;
  const IntegralResult r = integrate([](const Vec& x) { return std::exp(-x.squaredNorm()); },
                                     exps, two_poles(), spec);
  EXPECT_LT(std::abs(r.value / std::pow(std::numbers::pi, 1.5) - 1.0), 1e-4);
}

TEST(Integrate, InverseSquareBall) {
  const IntegralResult r = integrate_ball([](const Vec& x) { return 1.0 / x.squaredNorm(); },
                                          Vec::Zero(3), 1.0, 2.0, 24, 8, 12);
  EXPECT_LT(std::abs(r.value / (4 * std::numbers::pi) - 1.0), 1e-4);
}

TEST(Integrate, RejectsNonIntegrable) {
  const double exps[] = {3.0, 0.0};
  try {
    integrate([](const Vec& x) { return std::exp(-x.squaredNorm()) / std::pow(x.norm(), 3); },
              exps, two_poles(), QuadratureSpec{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonIntegrableSingularity);
  }
}

TEST(Integrate, Deterministic) {
  const PoleConfig cfg = two_poles();
  const WeightSpec w = WeightSpec::poly_exp(0.5, 1.0, 2.0);
  const double exps[] = {2.5, 0.5};
  auto field = [&](const Vec& x) { return weight_value(x, cfg, w) / x.squaredNorm(); };
  QuadratureSpec spec;
  spec.mc_samples = 200'000;
  const IntegralResult a = integrate(field, exps, cfg, spec);
  const IntegralResult b = integrate(field, exps, cfg, spec);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  spec.seed = 99;
  EXPECT_NE(integrate(field, exps, cfg, spec).value, a.value);
}

TEST(Integrate, SingularWeightedAgainstMonteCarlo) {
  const PoleConfig cfg = two_poles();
  const WeightSpec w = WeightSpec::poly_exp(0.5, 1.0, 2.0);
  const double exps[] = {2.5, 0.5};
  const IntegralResult r =
      integrate([&](const Vec& x) { return weight_value(x, cfg, w) / x.squaredNorm(); }, exps,
                cfg, QuadratureSpec{});
  const oracle::McResult mc = oracle::weighted_inverse_square(2'000'000, 17);
  EXPECT_LE(std::abs(r.value - mc.mean), 3.0 * std::hypot(r.error(), mc.std_error));
}

TEST(Integrate, RegionAdditivity) {
  const PoleConfig cfg = two_poles();
  const double exps[] = {1.0, 0.0};
  QuadratureSpec spec;
  spec.mc_samples = 400'000;
  auto f1 = [](const Vec& x) { return std::exp(-x.squaredNorm()) / x.norm(); };
  auto f2 = [](const Vec& x) { return std::exp(-(x - make_vec({2, 0, 0})).squaredNorm()); };
  const IntegralResult a = integrate(f1, exps, cfg, spec);
  const IntegralResult b = integrate(f2, exps, cfg, spec);
  const IntegralResult ab =
      integrate([&](const Vec& x) { return f1(x) + f2(x); }, exps, cfg, spec);
  EXPECT_LE(std::abs(ab.value - a.value - b.value), 3.0 * (a.error() + b.error() + ab.error()));
  // \int e^{-|x|^2}/|x| = 2 pi and \int e^{-|x-a|^2} = pi^{3/2}.
  EXPECT_NEAR(a.value, 2 * std::numbers::pi, 3.0 * a.error() + 1e-4);
  EXPECT_NEAR(b.value, std::pow(std::numbers::pi, 1.5), 3.0 * b.error() + 1e-4);
}

TEST(Integrate, ExcisedCoreMatchesClosedForm) {
  // \int_{|x| > rho} e^{-|x|^2} |x|^-3 dx has a log divergence as rho -> 0; compare
  // the excised integral against 4 pi \int_rho^inf e^{-r^2} / r dr = 2 pi E1(rho^2).
  PoleConfig cfg{3, {make_vec({0, 0, 0})}};
  QuadratureSpec spec;
  spec.mc_samples = 2'000'000;
  spec.radial_levels = 20;
  const double exps[] = {3.0};
  const IntegralResult r = integrate(
      [](const Vec& x) { return std::exp(-x.squaredNorm()) / std::pow(x.norm(), 3); }, exps,
      cfg, spec, CoreMode::Excise);
  const double rho = core_radius(spec);
  // E1(z) = -gamma - ln z + z - z^2/4 + ... for small z.
  const double z = rho * rho;
  const double e1 = -0.57721566490153286 - std::log(z) + z - z * z / 4;
  EXPECT_NEAR(r.value, 2 * std::numbers::pi * e1, 3.0 * r.error() + 1e-4 * r.value);
}

TEST(CompensatedSum, RecoversSmallTerms) {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-16);
  s.add(-1.0);
  EXPECT_NEAR(s.value(), 1e-13, 1e-20);
}

TEST(Spec, RejectsOverlappingBalls) {
  QuadratureSpec spec;
  spec.pole_radius = 1.5;
  EXPECT_THROW(validate_spec(spec, two_poles()), Error);
  spec.pole_radius = 0.5;
  spec.radial_levels = kMaxRadialLevels + 1;
  EXPECT_THROW(validate_spec(spec, two_poles(), true), Error);
}
