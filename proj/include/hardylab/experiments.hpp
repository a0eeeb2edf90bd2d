#pragma once

// Runnable experiments: sharpness sweep, beta sweep, spectral bracket and the
// sampling-based certification of the weight hypotheses.

#include "hardylab/core.hpp"
#include "hardylab/fields.hpp"
#include "hardylab/functionals.hpp"
#include "hardylab/quadrature.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hardylab {

// ---------------------------------------------------------------- optimality

struct SweepRecord {
  double eps = 0.0;
  Estimate remainder;
  Estimate hardy_ratio;
  Estimate deficit;        // D + W - c V
  Estimate boundary_flux;  // nonzero only when cores are excised
  bool excised = false;
  double core_radius = 0.0;

  /// |deficit - remainder - flux| <= 3 * combined error.
  bool agrees() const;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::optional<double> predicted_slope;
  std::size_t points = 0;

  /// |slope - predicted| <= tol * |predicted|; false without a prediction.
  bool within(double tol) const;
};

/// Least squares of log(remainder) on log(eps) over points whose remainder
/// exceeds 10x its error. Needs at least 4 such points.
RateFit fit_rate(std::span<const SweepRecord> records, std::optional<double> predicted);

/// Decay exponent g with mu ~ |x|^-g at infinity: 0 for Unit, n*gamma for
/// PolyExp without exponential decay (delta = 0 or m <= 0), none otherwise.
std::optional<double> weight_decay_exponent(const PoleConfig& cfg, const WeightSpec& w);

/// (N + K - 2) + K + g with g from weight_decay_exponent.
std::optional<double> predicted_slope(const PoleConfig& cfg, const WeightSpec& w, double k_mu);

/// Cut-off radius R used by the sweep: max|a_i| + pole_radius.
double sweep_radius(const PoleConfig& cfg, const QuadratureSpec& spec);

/// Largest admissible eps: min(1, R / (2 max|a_i|)), so that every pole lies
/// well inside the region where theta_eps = 1.
double max_admissible_eps(const PoleConfig& cfg, double radius);

/// eps_k = 0.4 * 2^-k for k < count, keeping only admissible values.
std::vector<double> default_eps_grid(const PoleConfig& cfg, double radius, int count = 6);

struct OptimalitySweep {
  std::vector<SweepRecord> records;
  RateFit fit;
  double c_n_mu = 0.0;
  bool remainder_decreasing = false;
  bool ratio_nonincreasing = false;  // up to error bars
};

/// phi_eps = theta_eps f for every eps (strictly decreasing). The far radius is
/// raised to cover the support 2R/eps; cores are excised when the integrands
/// are not locally integrable.
OptimalitySweep optimality_sweep(const PoleConfig& cfg, const WeightSpec& w,
                                 const HardyParams& p, std::span<const double> eps_list,
                                 const QuadratureSpec& spec);

// ---------------------------------------------------------------- beta sweep

struct BetaRow {
  double beta = 0.0;
  double coefficient = 0.0;
  std::optional<Estimate> residual;  // relative residual of the general-beta identity
};

struct BetaSweep {
  std::vector<BetaRow> rows;
  double grid_argmax = 0.0;
  double grid_max = 0.0;
  double refined_argmax = 0.0;  // vertex of the parabola through the top three points
  double grid_step = 0.0;       // local spacing at the argmax
  double formula_argmax = 0.0;  // (N + K - 2) / (2n)
  double formula_max = 0.0;     // (N + K - 2)^2 / (4n)
};

/// count equally spaced betas on [lo, hi].
std::vector<double> beta_grid(double lo, double hi, int count);

/// Coefficient table over betas (increasing); identity residuals when phi is given.
BetaSweep beta_sweep(const PoleConfig& cfg, const WeightSpec& w, double k_mu,
                     std::span<const double> betas, const std::optional<TestFunction>& phi,
                     const QuadratureSpec& spec);

// ---------------------------------------------------------------- spectral

struct GramMatrices {
  Eigen::MatrixXd a;      // \int grad phi_k . grad phi_l dmu + \int W phi_k phi_l dmu
  Eigen::MatrixXd b;      // \int V phi_k phi_l dmu
  Eigen::MatrixXd a_err;  // entrywise error bounds
  Eigen::MatrixXd b_err;
  bool excised = false;
};

GramMatrices assemble_gram(const PoleConfig& cfg, const WeightSpec& w, const HardyParams& p,
                           std::span<const TestFunction> basis, const QuadratureSpec& spec);

struct SpectralResult {
  std::size_t basis_size = 0;
  std::vector<std::size_t> kept;  // indices into the basis that survived screening
  double lambda_min = 0.0;
  double error = 0.0;
  Eigen::VectorXd witness;  // coefficients over `kept`, B-normalised
};

/// Greedy screening: a function is kept when the diagonally scaled B restricted
/// to the kept set stays below the condition cap.
std::vector<std::size_t> screen_basis(const GramMatrices& gram, double condition_cap = 1e10);
std::vector<std::size_t> screen_basis(const GramMatrices& gram,
                                      std::span<const std::size_t> candidates,
                                      double condition_cap = 1e10);

/// Smallest generalized eigenpair of the principal submatrices on `subset`.
SpectralResult smallest_eigenpair(const GramMatrices& gram, std::span<const std::size_t> subset);

SpectralResult spectral_bound(const PoleConfig& cfg, const WeightSpec& w, const HardyParams& p,
                              std::span<const TestFunction> basis, const QuadratureSpec& spec);

/// count Gaussian bumps with deterministic centres in the box [-R, R]^N around
/// the poles and widths cycling through {0.35, 0.7, 1.4} * R/2.
std::vector<TestFunction> generic_bump_basis(const PoleConfig& cfg, std::size_t count,
                                             std::uint64_t seed, double radius);

// ---------------------------------------------------------------- hypotheses

struct H2SampleSpec {
  std::int64_t samples = 100'000;  // far-field points in the base sample
  int approach_levels = 40;        // pole-approach radii r0 2^-k
  int approach_directions = 64;    // directions per approach radius
  double far_radius = 64.0;
  std::uint64_t seed = 1;
};

enum class H2Status { Certified, NotStabilized, UnboundedSuspected };
const char* to_string(H2Status status);

struct H2Report {
  H2Status status = H2Status::Certified;
  double c_mu = 0.0;  // sample supremum of W on the doubled sample
  Vec max_point;
  double scale = 0.0;
  double base_sup = 0.0;  // supremum on the base sample
  double relative_change = 0.0;
  bool k_admissible = true;  // K > 2 - N
  std::int64_t points = 0;
  std::vector<std::vector<double>> approach_sup;  // [pole][level]

  bool certified() const { return status == H2Status::Certified && k_admissible; }
};

H2Report h2_certify(const PoleConfig& cfg, const WeightSpec& w, double beta, double k_mu,
                    const H2SampleSpec& sample);

struct KCandidate {
  double k_mu = 0.0;
  bool beta_positive = false;
  std::optional<H2Report> report;
};

struct KSelection {
  std::vector<KCandidate> candidates;
  std::optional<double> chosen;
};

/// Tries -gamma, -n gamma and the midpoint of (2 - N, -gamma) in order and
/// keeps the first one with beta > 0 that h2_certify accepts.
KSelection select_k_mu(const PoleConfig& cfg, const WeightSpec& w, const H2SampleSpec& sample);

struct H3Pole {
  std::vector<double> radii;
  std::vector<IntegralResult> scaled_mass;  // delta^-2 \int_{B(a_i, delta)} mu
  double log_slope = 0.0;                   // d log(mass) / d log(delta)
  bool pass = false;
};

struct H4Pole {
  double exponent = 0.0;  // (2/n)(N + K - 2) + 2 + gamma
  bool pass = false;
};

struct H3H4Report {
  std::vector<H3Pole> h3;
  bool h3_pass = false;
  std::vector<H4Pole> h4_local;
  bool h4_local_pass = false;
  std::optional<double> decay_exponent;  // g with mu ~ |x|^-g
  double decay_sup = 0.0;                // sup of mu |x|^g on the sampled radii
  double decay_ratio = 0.0;              // outer sup / inner sup
  bool h4_decay_bounded = false;
  bool h4_decay_exponent_pass = false;   // g > -(N + 2K - 2)
  bool h4_far_pass = false;
};

H3H4Report h3_h4_certify(const PoleConfig& cfg, const WeightSpec& w, double k_mu);

// ---------------------------------------------------------------- verify corpus

/// 10 Gaussian bumps placed near and between the poles.
std::vector<TestFunction> default_corpus(const PoleConfig& cfg, std::size_t count = 10);

struct VerifyRecord {
  std::string name;
  Estimate residual;
  std::optional<Estimate> ratio;  // absent when V vanishes
  bool residual_pass = false;
  bool ratio_pass = true;
};

/// identity_residual and hardy_ratio for every function; ratio rows are
/// skipped for a single pole.
std::vector<VerifyRecord> verify_corpus(const PoleConfig& cfg, const WeightSpec& w,
                                        const HardyParams& p,
                                        std::span<const TestFunction> corpus,
                                        const QuadratureSpec& spec, double residual_tol,
                                        double ratio_tol);

}  // namespace hardylab
