#pragma once

// Test functions and the energy functionals of the weighted Hardy identity
//
//   \int |grad phi|^2 dmu = \int |grad(phi/f)|^2 f^2 dmu + c \int V phi^2 dmu
//                           - \int W phi^2 dmu.

#include "hardylab/core.hpp"
#include "hardylab/fields.hpp"
#include "hardylab/quadrature.hpp"

#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace hardylab {

/// exp(-|x - center|^2 / (2 width^2)).
struct GaussianBump {
  Vec center;
  double width = 1.0;
};

/// 1 on |x| < R/eps, 0 on |x| > 2R/eps, cos^2((pi/2)(eps|x|/R - 1)) in between.
struct CutoffTheta {
  double radius = 1.0;
  double eps = 1.0;
};

/// theta_eps * prod_i |x - a_i|^-beta.
struct OptimalityPhi {
  double radius = 1.0;
  double eps = 1.0;
  double beta = 1.0;
};

class TestFunction {
 public:
  using Kind = std::variant<GaussianBump, CutoffTheta, OptimalityPhi>;

  static TestFunction gaussian_bump(Vec center, double width);
  static TestFunction cutoff_theta(double radius, double eps);
  static TestFunction optimality_phi(double radius, double eps, double beta);

  /// Value and gradient; OptimalityPhi throws AtPole at the poles.
  FieldEval eval(const DomainPoint& x, const PoleConfig& cfg) const;

  /// b such that |phi| ~ |x - a_i|^-b near the poles (0 for bounded functions).
  double pole_exponent() const;

  TestFunction scaled(double factor) const;
  double amplitude() const { return amplitude_; }
  const Kind& kind() const { return kind_; }
  bool is_optimality_phi() const { return std::holds_alternative<OptimalityPhi>(kind_); }
  std::string describe() const;

 private:
  explicit TestFunction(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
  double amplitude_ = 1.0;
};

/// phi at x with the Hardy factor of OptimalityPhi taken from the kernel fields
/// at x (pf.beta), so it keeps pole-relative accuracy.
FieldEval evaluate_with_fields(const TestFunction& phi, const DomainPoint& x,
                               const PoleConfig& cfg, const PointFields& pf);

using PointwiseBody =
    std::function<void(const Vec& x, const PointFields& pf, std::span<double> out)>;

/// Sets f.eval and f.eval_near from a body of (x, fields at x). cfg and kernel
/// must outlive f.
void bind_pointwise(Integrand& f, const PoleConfig& cfg, const FieldKernel& kernel,
                    PointwiseBody body);

/// p with |W| <= C |x - a_i|^-p near the poles; 0 when W vanishes identically.
double w_growth_exponent(const WeightSpec& w, double k_mu);

/// theta_eps and its gradient, independent of the poles.
FieldEval cutoff_theta(const DomainPoint& x, double radius, double eps);

struct EnergyReport {
  IntegralResult dirichlet;      // \int |grad phi|^2 dmu
  IntegralResult v_mass;         // \int V phi^2 dmu
  IntegralResult w_mass;         // \int W phi^2 dmu
  IntegralResult l2_mass;        // \int phi^2 dmu
  IntegralResult remainder;      // \int |grad(phi/f)|^2 f^2 dmu
  IntegralResult boundary_flux;  // -sum_i \oint_{|x-a_i|=rho} phi^2 mu grad f/f . n; zero unless excised
  bool excised = false;
  double core_radius = 0.0;
};

enum class CorePolicy {
  Extrapolate,  // refuse non-integrable integrands
  Excise,
  Auto,         // Excise only if some integrand fails the integrability check
};

/// Per-pole growth exponents of the five energy integrands, in EnergyReport order.
std::vector<std::vector<double>> energy_exponents(const TestFunction& phi,
                                                  const PoleConfig& cfg, const WeightSpec& w,
                                                  const HardyParams& p);

CoreMode resolve_core_mode(const std::vector<std::vector<double>>& exponents, int dim,
                           CorePolicy policy);

EnergyReport energy_report(const TestFunction& phi, const PoleConfig& cfg,
                           const WeightSpec& w, const HardyParams& p,
                           const QuadratureSpec& spec,
                           CorePolicy policy = CorePolicy::Extrapolate);

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// (D - remainder - c V + W - flux) / max(D, 1).
Estimate identity_residual(const EnergyReport& report, const HardyParams& p);

/// (D + W) / V; ZeroVMass when V vanishes.
Estimate hardy_ratio(const EnergyReport& report);

/// D + W - c V.
Estimate hardy_deficit(const EnergyReport& report, const HardyParams& p);

struct BetaIdentity {
  double beta = 0.0;
  double coefficient = 0.0;  // beta (N + K - 2) - n beta^2
  IntegralResult dirichlet;
  IntegralResult remainder;
  IntegralResult inverse_square_mass;  // \int sum_i |x - a_i|^-2 phi^2 dmu
  IntegralResult v_mass;
  IntegralResult bracket_mass;  // \int sum_i beta/|x-a_i|^2 [(x-a_i).grad mu/mu - K] phi^2 dmu
  IntegralResult boundary_flux;
  double residual = 0.0;  // D - rem - coef S - beta^2 V - bracket - flux
  double error = 0.0;
};

/// General-beta identity for each beta, sharing one quadrature pass.
std::vector<BetaIdentity> beta_identity_check(const TestFunction& phi,
                                              std::span<const double> betas,
                                              const PoleConfig& cfg, const WeightSpec& w,
                                              double k_mu, const QuadratureSpec& spec,
                                              CorePolicy policy = CorePolicy::Extrapolate);

BetaIdentity beta_identity_check(const TestFunction& phi, double beta, const PoleConfig& cfg,
                                 const WeightSpec& w, double k_mu, const QuadratureSpec& spec,
                                 CorePolicy policy = CorePolicy::Extrapolate);

}  // namespace hardylab
