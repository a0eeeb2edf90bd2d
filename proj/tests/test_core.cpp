#include "hardylab/core.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hardylab;

namespace {

PoleConfig poles3(std::initializer_list<std::initializer_list<double>> pts) {
  PoleConfig cfg;
  cfg.dim = 3;
  for (auto p : pts) cfg.poles.push_back(make_vec(p));
  return cfg;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::ConfigError;
}

}  // namespace

TEST(Validate, AcceptsDistinctPoles) {
  EXPECT_NO_THROW(validate_config(poles3({{0, 0, 0}, {1, 0, 0}}), WeightSpec::unit()));
}

TEST(Validate, RejectsLowDimension) {
  PoleConfig cfg{2, {make_vec({0, 0}), make_vec({1, 0})}};
  EXPECT_EQ(code_of([&] { validate_config(cfg, WeightSpec::unit()); }),
            ErrorCode::DimensionTooSmall);
}

TEST(Validate, RejectsDuplicatePoles) {
  EXPECT_EQ(code_of([] {
              validate_config(poles3({{0, 0, 0}, {0, 0, 0}}), WeightSpec::unit());
            }),
            ErrorCode::DuplicatePoles);
}

TEST(Validate, RejectsMixedDimensions) {
  PoleConfig cfg{3, {make_vec({0, 0, 0}), make_vec({1, 0})}};
  EXPECT_EQ(code_of([&] { validate_config(cfg, WeightSpec::unit()); }),
            ErrorCode::DimensionMismatch);
}

TEST(DeriveParams, TwoPolesInR3) {
  const HardyParams p = derive_params(poles3({{0, 0, 0}, {2, 0, 0}}), 0.0, 0.0);
  EXPECT_DOUBLE_EQ(p.beta, 0.5);
  EXPECT_DOUBLE_EQ(p.c_n_mu, 0.25);
  EXPECT_DOUBLE_EQ(p.c_nn_mu, 0.125);
}

TEST(DeriveParams, SinglePoleGivesClassicalConstant) {
  PoleConfig cfg{4, {make_vec({0, 0, 0, 0})}};
  const HardyParams p = derive_params(cfg, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(p.beta, 2.0);
  EXPECT_DOUBLE_EQ(p.c_n_mu, 4.0);
}

TEST(DeriveParams, RejectsNonpositiveBeta) {
  EXPECT_EQ(code_of([] { derive_params(poles3({{0, 0, 0}, {2, 0, 0}}), -1.0, 0.0); }),
            ErrorCode::NonpositiveBeta);
}

TEST(DeriveParams, IndependentOfPolePositions) {
  std::mt19937_64 rng(5);
  for (int dim = 3; dim <= 5; ++dim) {
    for (int n = 1; n <= 4; ++n) {
      const HardyParams ref = derive_params(oracle::random_instance(rng, dim, n).cfg, 0.25, 0.0);
      for (int k = 0; k < 5; ++k) {
        const HardyParams p = derive_params(oracle::random_instance(rng, dim, n).cfg, 0.25, 0.0);
        EXPECT_EQ(p.beta, ref.beta);
        EXPECT_EQ(p.c_n_mu, ref.c_n_mu);
        EXPECT_EQ(p.c_nn_mu, ref.c_nn_mu);
      }
    }
  }
}

TEST(Coefficient, VanishesAtIdentityBeta) {
  for (int dim = 3; dim <= 6; ++dim) {
    for (int n = 1; n <= 4; ++n) {
      const double b = (dim - 2.0) / n;
      EXPECT_NEAR(inverse_square_coefficient(dim, n, 0.0, b), 0.0, 1e-14);
    }
  }
}

TEST(Geometry, MinPoleGap) {
  EXPECT_DOUBLE_EQ(min_pole_gap(poles3({{0, 0, 0}, {2, 0, 0}})), 1.0);
  EXPECT_DOUBLE_EQ(min_pole_gap(poles3({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}})), 0.5);
  EXPECT_EQ(code_of([] { min_pole_gap(poles3({{0, 0, 0}})); }), ErrorCode::SinglePole);
}

TEST(Geometry, EnclosingRadius) {
  EXPECT_DOUBLE_EQ(enclosing_radius(poles3({{0, 0, 0}, {2, 0, 0}}), 1.0), 3.0);
  EXPECT_DOUBLE_EQ(enclosing_radius(poles3({{0, 0, 0}}), 1.0), 1.0);
  EXPECT_DOUBLE_EQ(enclosing_radius(poles3({{-1, 0, 0}, {1, 0, 0}}), 0.5), 1.5);
}

TEST(Validate, RejectsWeightParameters) {
  const PoleConfig cfg = poles3({{0, 0, 0}, {2, 0, 0}});
  EXPECT_EQ(code_of([&] { validate_config(cfg, WeightSpec::poly_exp(1.0, 0.0, 2.0)); }),
            ErrorCode::GammaOutOfRange);
  EXPECT_EQ(code_of([&] { validate_config(cfg, WeightSpec::poly_exp(0.5, 1.0, 3.0)); }),
            ErrorCode::BadExponentM);
  EXPECT_NO_THROW(validate_config(cfg, WeightSpec::poly_exp(0.5, 1.0, 2.0)));
}
