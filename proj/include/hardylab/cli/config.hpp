#pragma once

// Run configuration: one JSON file describes one problem instance plus the
// parameters of every experiment. Unknown keys are rejected.

#include "hardylab/core.hpp"
#include "hardylab/experiments.hpp"
#include "hardylab/quadrature.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hardylab::cli {

struct BumpSpec {
  std::vector<double> center;
  double width = 1.0;
};

struct VerifySettings {
  std::size_t corpus_size = 10;  // default corpus when no bumps are listed
  std::vector<BumpSpec> bumps;
  double residual_tol = 1e-3;
  double ratio_tol = 0.02;
};

struct OptimalitySettings {
  std::vector<double> eps;  // empty: default grid
  double slope_tol = 0.15;
  double ratio_tol = 0.10;
  double r_squared_min = 0.98;
};

struct BetaSweepSettings {
  double beta_min = 0.01;
  double beta_max = 1.0;
  int count = 100;
  std::optional<BumpSpec> phi;
  double residual_tol = 1e-3;
};

struct SpectralSettings {
  std::size_t generic_count = 20;
  std::uint64_t basis_seed = 7;
  std::vector<double> enrich_eps = {0.2, 0.1, 0.05};
  double lower_tol = 0.02;
  double upper_tol = 0.15;
};

struct CertifySettings {
  H2SampleSpec sample;
};

struct RunConfig {
  PoleConfig poles;
  WeightSpec weight;
  std::optional<double> k_mu;  // empty: "auto", chosen by select_k_mu
  double c_mu = 0.0;
  QuadratureSpec quadrature;
  VerifySettings verify;
  OptimalitySettings optimality;
  BetaSweepSettings beta_sweep;
  SpectralSettings spectral;
  CertifySettings certify;
  std::string output_directory = "hardylab-out";
  bool write_csv = true;
  bool write_json = true;
  std::uint64_t seed = 1;
};

/// Throws Error(ConfigError) with the offending key path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

}  // namespace hardylab::cli
