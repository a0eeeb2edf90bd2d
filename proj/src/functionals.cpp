#include "hardylab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hardylab {
namespace {

struct PhiValue {
  double value = 0.0;
  Vec gradient;
  double theta_grad_sq = 0.0;  // |grad theta|^2 f^2 for OptimalityPhi
};

// phi and grad phi at x. The Hardy factor of OptimalityPhi is rescaled from the
// kernel evaluation (f_b = f_1^b), so it inherits pole-relative accuracy.
PhiValue evaluate_phi(const TestFunction& phi, const DomainPoint& x, const PoleConfig& cfg,
                      const PointFields& pf, double kernel_beta) {
  PhiValue out;
  if (const auto* opt = std::get_if<OptimalityPhi>(&phi.kind())) {
    const FieldEval theta = cutoff_theta(x, opt->radius, opt->eps);
    const double scale = opt->beta / kernel_beta;
    const double f = std::exp(scale * pf.log_f);
    const Vec log_grad = scale * pf.log_grad_f;
    const double a = phi.amplitude();
    out.value = a * theta.value * f;
    out.gradient = a * f * (theta.gradient + theta.value * log_grad);
    out.theta_grad_sq = a * a * theta.gradient.squaredNorm() * f * f;
    return out;
  }
  const FieldEval e = phi.eval(x, cfg);
  out.value = e.value;
  out.gradient = e.gradient;
  return out;
}

double weight_exponent(const WeightSpec& w) { return w.pole_exponent(); }


Integrand flux_integrand(const TestFunction& phi, const PoleConfig& cfg,
                         const FieldKernel& kernel, std::size_t pole, double rho) {
  Integrand f;
  f.components = 1;
  f.pole_exponents = {std::vector<double>(cfg.size(), 0.0)};
  f.eval = [&phi, &cfg, &kernel, pole, rho](const Vec& x, std::span<double> out) {
    const PointFields pf = kernel.evaluate(x);
    const PhiValue v = evaluate_phi(phi, x, cfg, pf, kernel.beta());
    const Vec normal = (x - cfg.poles[pole]) / rho;
    out[0] = v.value * v.value * pf.mu * pf.log_grad_f.dot(normal);
  };
  f.eval_near = [&phi, &cfg, &kernel, rho](std::size_t i, const Vec& offset,
                                           std::span<double> out) {
    const PointFields pf = kernel.evaluate_near(i, offset);
    const PhiValue v = evaluate_phi(phi, cfg.poles[i] + offset, cfg, pf, kernel.beta());
    out[0] = v.value * v.value * pf.mu * pf.log_grad_f.dot(offset / rho);
  };
  return f;
}

// -sum_i \oint_{|x - a_i| = rho} phi^2 mu (grad f/f) . (x - a_i)/rho dS
IntegralResult boundary_flux(const TestFunction& phi, const PoleConfig& cfg,
                             const FieldKernel& kernel, double rho, int angular_order) {
  IntegralResult total;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const Integrand f = flux_integrand(phi, cfg, kernel, i, rho);
    const IntegralResult r = integrate_sphere(f, cfg.poles[i], rho, angular_order, i).front();
    total.value -= r.value;
    total.det_error += r.det_error;
    total.cells += r.cells;
  }
  return total;
}

}  // namespace

double w_growth_exponent(const WeightSpec& w, double k_mu) {
  if (w.is_unit() && k_mu == 0.0) return 0.0;
  double e = 2.0;
  if (!w.is_unit() && w.delta > 0.0 && w.m < 0.0) e = 2.0 - w.m;
  return e;
}

FieldEval evaluate_with_fields(const TestFunction& phi, const DomainPoint& x,
                               const PoleConfig& cfg, const PointFields& pf) {
  const PhiValue v = evaluate_phi(phi, x, cfg, pf, pf.beta);
  return {v.value, v.gradient};
}

void bind_pointwise(Integrand& f, const PoleConfig& cfg, const FieldKernel& kernel,
                    PointwiseBody body) {
  f.eval = [&kernel, body](const Vec& x, std::span<double> out) {
    body(x, kernel.evaluate(x), out);
  };
  f.eval_near = [&cfg, &kernel, body](std::size_t pole, const Vec& offset,
                                      std::span<double> out) {
    body(cfg.poles[pole] + offset, kernel.evaluate_near(pole, offset), out);
  };
}

TestFunction TestFunction::gaussian_bump(Vec center, double width) {
  if (!(width > 0.0)) throw Error(ErrorCode::InvalidArgument, "bump width must be positive");
  return TestFunction(GaussianBump{std::move(center), width});
}

TestFunction TestFunction::cutoff_theta(double radius, double eps) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "cut-off radius must be positive");
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw Error(ErrorCode::EpsilonInadmissible, "eps must lie in (0, 1]");
  }
  return TestFunction(CutoffTheta{radius, eps});
}

TestFunction TestFunction::optimality_phi(double radius, double eps, double beta) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "cut-off radius must be positive");
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw Error(ErrorCode::EpsilonInadmissible, "eps must lie in (0, 1]");
  }
  if (!(beta > 0.0)) throw Error(ErrorCode::NonpositiveBeta, "beta must be positive");
  return TestFunction(OptimalityPhi{radius, eps, beta});
}

FieldEval cutoff_theta(const DomainPoint& x, double radius, double eps) {
  FieldEval out;
  out.gradient = Vec::Zero(x.size());
  const double r = x.norm();
  const double s = eps * r / radius;
  if (s < 1.0) {
    out.value = 1.0;
  } else if (s > 2.0) {
    out.value = 0.0;
  } else {
    const double arg = 0.5 * std::numbers::pi * (s - 1.0);
    const double c = std::cos(arg);
    out.value = c * c;
    // d/ds cos^2(pi/2 (s-1)) = -(pi/2) sin(pi (s-1)), ds/dx = eps x / (R |x|)
    const double dtheta_ds = -0.5 * std::numbers::pi * std::sin(std::numbers::pi * (s - 1.0));
    out.gradient = (dtheta_ds * eps / (radius * r)) * x;
  }
  return out;
}

FieldEval TestFunction::eval(const DomainPoint& x, const PoleConfig& cfg) const {
  validate_point(x, cfg);
  FieldEval out;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GaussianBump>) {
          const Vec d = x - k.center;
          out.value = std::exp(-0.5 * d.squaredNorm() / (k.width * k.width));
          out.gradient = (-out.value / (k.width * k.width)) * d;
        } else if constexpr (std::is_same_v<T, CutoffTheta>) {
          out = hardylab::cutoff_theta(x, k.radius, k.eps);
        } else {
          const FieldEval theta = hardylab::cutoff_theta(x, k.radius, k.eps);
          const HardyFactor h = hardy_factor(x, cfg, k.beta);
          out.value = theta.value * h.value;
          out.gradient = h.value * (theta.gradient + theta.value * h.log_gradient);
        }
      },
      kind_);
  out.value *= amplitude_;
  out.gradient *= amplitude_;
  return out;
}

double TestFunction::pole_exponent() const {
  if (const auto* opt = std::get_if<OptimalityPhi>(&kind_)) return opt->beta;
  return 0.0;
}

TestFunction TestFunction::scaled(double factor) const {
  TestFunction copy = *this;
  copy.amplitude_ *= factor;
  return copy;
}

std::string TestFunction::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GaussianBump>) {
          os << "bump(center=" << k.center.transpose() << ",width=" << k.width << ")";
        } else if constexpr (std::is_same_v<T, CutoffTheta>) {
          os << "theta(R=" << k.radius << ",eps=" << k.eps << ")";
        } else {
          os << "phi_eps(R=" << k.radius << ",eps=" << k.eps << ",beta=" << k.beta << ")";
        }
      },
      kind_);
  if (amplitude_ != 1.0) os << "*" << amplitude_;
  return os.str();
}

std::vector<std::vector<double>> energy_exponents(const TestFunction& phi,
                                                  const PoleConfig& cfg, const WeightSpec& w,
                                                  const HardyParams& p) {
  const double b = phi.pole_exponent();
  const double g = weight_exponent(w);
  const double grad = b > 0.0 ? 2.0 * (b + 1.0) : 0.0;
  const double v = cfg.size() >= 2 ? 2.0 : 0.0;
  const double wf = w_growth_exponent(w, p.k_mu);
  // For OptimalityPhi the remainder integrand is |grad theta|^2 f^2 mu.
  const double rem = phi.is_optimality_phi() ? 2.0 * p.beta + g : 2.0 + 2.0 * b + g;
  const std::size_t n = cfg.size();
  return {
      std::vector<double>(n, grad + g),
      std::vector<double>(n, v + 2.0 * b + g),
      std::vector<double>(n, wf + 2.0 * b + g),
      std::vector<double>(n, 2.0 * b + g),
      std::vector<double>(n, rem),
  };
}

CoreMode resolve_core_mode(const std::vector<std::vector<double>>& exponents, int dim,
                           CorePolicy policy) {
  switch (policy) {
    case CorePolicy::Extrapolate:
      for (const auto& row : exponents) local_integrability_check(row, dim);
      return CoreMode::Extrapolate;
    case CorePolicy::Excise:
      return CoreMode::Excise;
    case CorePolicy::Auto:
      for (const auto& row : exponents) {
        if (!locally_integrable(row, dim)) return CoreMode::Excise;
      }
      return CoreMode::Extrapolate;
  }
  return CoreMode::Extrapolate;
}

EnergyReport energy_report(const TestFunction& phi, const PoleConfig& cfg,
                           const WeightSpec& w, const HardyParams& p,
                           const QuadratureSpec& spec, CorePolicy policy) {
  validate_config(cfg, w);
  const auto exponents = energy_exponents(phi, cfg, w, p);
  const CoreMode mode = resolve_core_mode(exponents, cfg.dim, policy);
  const FieldKernel kernel(cfg, w, p.k_mu, p.beta);
  const bool reduce_remainder = [&] {
    const auto* opt = std::get_if<OptimalityPhi>(&phi.kind());
    return opt != nullptr && opt->beta == p.beta;
  }();

  Integrand f;
  f.components = 5;
  f.pole_exponents = exponents;
  bind_pointwise(f, cfg, kernel, [&](const Vec& x, const PointFields& pf, std::span<double> out) {
    const PhiValue v = evaluate_phi(phi, x, cfg, pf, p.beta);
    const double phi2mu = v.value * v.value * pf.mu;
    out[0] = v.gradient.squaredNorm() * pf.mu;
    out[1] = pf.v * phi2mu;
    out[2] = pf.w() * phi2mu;
    out[3] = phi2mu;
    out[4] = reduce_remainder ? v.theta_grad_sq * pf.mu
                              : (v.gradient - v.value * pf.log_grad_f).squaredNorm() * pf.mu;
  });
  const auto res = integrate(f, cfg, spec, mode);

  EnergyReport report;
  report.dirichlet = res[0];
  report.v_mass = res[1];
  report.w_mass = res[2];
  report.l2_mass = res[3];
  report.remainder = res[4];
  report.core_radius = core_radius(spec);
  report.excised = mode == CoreMode::Excise;
  if (report.excised) {
    report.boundary_flux =
        boundary_flux(phi, cfg, kernel, report.core_radius, spec.angular_order);
  }
  return report;
}

Estimate identity_residual(const EnergyReport& r, const HardyParams& p) {
  const double scale = std::max(r.dirichlet.value, 1.0);
  Estimate e;
  e.value = (r.dirichlet.value - r.remainder.value - p.c_n_mu * r.v_mass.value +
             r.w_mass.value - r.boundary_flux.value) /
            scale;
  e.error = (r.dirichlet.error() + r.remainder.error() + p.c_n_mu * r.v_mass.error() +
             r.w_mass.error() + r.boundary_flux.error()) /
            scale;
  return e;
}

Estimate hardy_ratio(const EnergyReport& r) {
  if (!(r.v_mass.value > 0.0)) {
    throw Error(ErrorCode::ZeroVMass, "V-mass vanishes (single pole or phi supported away from V)");
  }
  Estimate e;
  const double num = r.dirichlet.value + r.w_mass.value;
  e.value = num / r.v_mass.value;
  e.error = (r.dirichlet.error() + r.w_mass.error()) / r.v_mass.value +
            std::abs(e.value) * r.v_mass.error() / r.v_mass.value;
  return e;
}

Estimate hardy_deficit(const EnergyReport& r, const HardyParams& p) {
  Estimate e;
  e.value = r.dirichlet.value + r.w_mass.value - p.c_n_mu * r.v_mass.value;
  e.error = r.dirichlet.error() + r.w_mass.error() + p.c_n_mu * r.v_mass.error();
  return e;
}

std::vector<BetaIdentity> beta_identity_check(const TestFunction& phi,
                                              std::span<const double> betas,
                                              const PoleConfig& cfg, const WeightSpec& w,
                                              double k_mu, const QuadratureSpec& spec,
                                              CorePolicy policy) {
  validate_config(cfg, w);
  for (double b : betas) {
    if (!(b > 0.0)) throw Error(ErrorCode::NonpositiveBeta, "beta must be positive");
  }
  // Unit-beta kernel: grad f_beta / f_beta = beta * grad f_1 / f_1.
  const FieldKernel kernel(cfg, w, k_mu, 1.0);
  const double b = phi.pole_exponent();
  const double g = weight_exponent(w);
  const std::size_t n = cfg.size();
  const double grad = b > 0.0 ? 2.0 * (b + 1.0) : 0.0;
  const double v = n >= 2 ? 2.0 : 0.0;
  const double bracket = w_growth_exponent(w, k_mu);

  const std::size_t nb = betas.size();
  Integrand f;
  f.components = 4 + nb;
  f.pole_exponents = {
      std::vector<double>(n, grad + g),
      std::vector<double>(n, 2.0 + 2.0 * b + g),
      std::vector<double>(n, v + 2.0 * b + g),
      std::vector<double>(n, bracket + 2.0 * b + g),
  };
  for (std::size_t k = 0; k < nb; ++k) f.pole_exponents.emplace_back(n, 2.0 + 2.0 * b + g);
  const CoreMode mode = resolve_core_mode(f.pole_exponents, cfg.dim, policy);

  std::vector<double> beta_list(betas.begin(), betas.end());
  bind_pointwise(f, cfg, kernel, [&](const Vec& x, const PointFields& pf, std::span<double> out) {
    const PhiValue val = evaluate_phi(phi, x, cfg, pf, kernel.beta());
    const double phi2mu = val.value * val.value * pf.mu;
    out[0] = val.gradient.squaredNorm() * pf.mu;
    out[1] = pf.inv_square_sum * phi2mu;
    out[2] = pf.v * phi2mu;
    out[3] = pf.bracket_sum * phi2mu;
    for (std::size_t k = 0; k < beta_list.size(); ++k) {
      out[4 + k] =
          (val.gradient - (val.value * beta_list[k]) * pf.log_grad_f).squaredNorm() * pf.mu;
    }
  });
  const auto res = integrate(f, cfg, spec, mode);

  IntegralResult unit_flux;
  if (mode == CoreMode::Excise) {
    unit_flux = boundary_flux(phi, cfg, kernel, core_radius(spec), spec.angular_order);
  }

  std::vector<BetaIdentity> out;
  out.reserve(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const double beta = beta_list[k];
    BetaIdentity r;
    r.beta = beta;
    r.coefficient =
        inverse_square_coefficient(cfg.dim, static_cast<int>(n), k_mu, beta);
    r.dirichlet = res[0];
    r.inverse_square_mass = res[1];
    r.v_mass = res[2];
    r.bracket_mass = res[3];
    r.bracket_mass.value *= beta;
    r.bracket_mass.std_error *= beta;
    r.bracket_mass.det_error *= beta;
    r.bracket_mass.trunc_bound *= beta;
    r.remainder = res[4 + k];
    r.boundary_flux = unit_flux;
    r.boundary_flux.value *= beta;
    r.boundary_flux.det_error *= beta;
    r.residual = r.dirichlet.value - r.remainder.value -
                 r.coefficient * r.inverse_square_mass.value - beta * beta * r.v_mass.value -
                 r.bracket_mass.value - r.boundary_flux.value;
    r.error = r.dirichlet.error() + r.remainder.error() +
              std::abs(r.coefficient) * r.inverse_square_mass.error() +
              beta * beta * r.v_mass.error() + r.bracket_mass.error() +
              r.boundary_flux.error();
    out.push_back(r);
  }
  return out;
}

BetaIdentity beta_identity_check(const TestFunction& phi, double beta, const PoleConfig& cfg,
                                 const WeightSpec& w, double k_mu, const QuadratureSpec& spec,
                                 CorePolicy policy) {
  const double betas[] = {beta};
  return beta_identity_check(phi, betas, cfg, w, k_mu, spec, policy).front();
}

}  // namespace hardylab
