#include "hardylab/cli/selftest.hpp"

#include "hardylab/fields.hpp"
#include "hardylab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace hardylab::cli {
namespace {

struct Instance {
  PoleConfig cfg;
  Vec x;
};

// Random pole sets for N in {3,4,5}, n in {1,...,4}, and a point at least 0.2
// away from every pole.
std::vector<Instance> random_instances(std::size_t per_shape, std::uint64_t seed,
                                       int min_poles = 1) {
  std::mt19937_64 rng(seed);
  auto u = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Instance> out;
  for (int dim = 3; dim <= 5; ++dim) {
    for (int n = std::max(1, min_poles); n <= 4; ++n) {
      for (std::size_t k = 0; k < per_shape; ++k) {
        Instance inst;
        inst.cfg.dim = dim;
        while (static_cast<int>(inst.cfg.poles.size()) < n) {
          Vec a(dim);
          for (int j = 0; j < dim; ++j) a[j] = 4.0 * u() - 2.0;
          bool far = true;
          for (const Vec& b : inst.cfg.poles) far = far && (a - b).norm() > 0.3;
          if (far) inst.cfg.poles.push_back(a);
        }
        for (;;) {
          Vec x(dim);
          for (int j = 0; j < dim; ++j) x[j] = 5.0 * u() - 2.5;
          bool ok = true;
          for (const Vec& a : inst.cfg.poles) ok = ok && (x - a).norm() > 0.2;
          if (ok) {
            inst.x = x;
            break;
          }
        }
        out.push_back(std::move(inst));
      }
    }
  }
  return out;
}

double log_f(const Vec& x, const PoleConfig& cfg, double beta) {
  double s = 0.0;
  for (const Vec& a : cfg.poles) s -= beta * std::log((x - a).norm());
  return s;
}

double beta_for(const PoleConfig& cfg) { return (cfg.dim - 2.0) / static_cast<double>(cfg.size()); }

SelfTestResult gaussian_case(double tol) {
  PoleConfig cfg{3, {make_vec({0, 0, 0}), make_vec({2, 0, 0})}};
  const double exps[] = {0.0, 0.0};
  QuadratureSpec spec;
  spec.mc_samples = 8'000'000;
  const IntegralResult r =
      integrate([](const Vec& x) { return std::exp(-x.squaredNorm()); }, exps, cfg, spec);
  const double exact = std::pow(std::numbers::pi, 1.5);
  SelfTestResult out{"gaussian", std::abs(r.value / exact - 1.0), tol, 1, false, ""};
  std::ostringstream os;
  os.precision(12);
  os << "integral " << r.value << " vs pi^1.5 = " << exact;
  out.detail = os.str();
  return out;
}

SelfTestResult ball_case(double tol) {
  const IntegralResult r = integrate_ball([](const Vec& x) { return 1.0 / x.squaredNorm(); },
                                          Vec::Zero(3), 1.0, 2.0, 24, 8, 12);
  const double exact = 4.0 * std::numbers::pi;
  SelfTestResult out{"ball_inverse_square", std::abs(r.value / exact - 1.0), tol, 1, false, ""};
  std::ostringstream os;
  os.precision(12);
  os << "integral " << r.value << " vs 4 pi = " << exact;
  out.detail = os.str();
  return out;
}

SelfTestResult cross_term_case(double tol) {
  SelfTestResult out{"cross_term", 0.0, tol, 0, false, "relative gap of the cross-term identity"};
  for (const Instance& inst : random_instances(100, 11, 2)) {
    const CrossTermGap g = cross_term_identity(inst.x, inst.cfg);
    const double scale = std::max({std::abs(g.lhs), std::abs(g.rhs), 1.0});
    out.worst = std::max(out.worst, std::abs(g.gap()) / scale);
    ++out.instances;
  }
  return out;
}

SelfTestResult log_gradient_case(double tol) {
  SelfTestResult out{"log_gradient", 0.0, tol, 0, false, "grad f/f vs central differences"};
  for (const Instance& inst : random_instances(100, 12)) {
    const double beta = beta_for(inst.cfg);
    const HardyFactor h = hardy_factor(inst.x, inst.cfg, beta);
    const double step = 1e-5;
    Vec fd(inst.cfg.dim);
    for (int j = 0; j < inst.cfg.dim; ++j) {
      Vec p = inst.x, m = inst.x;
      p[j] += step;
      m[j] -= step;
      fd[j] = (log_f(p, inst.cfg, beta) - log_f(m, inst.cfg, beta)) / (2.0 * step);
    }
    const double err = (fd - h.log_gradient).norm() / std::max(h.log_gradient.norm(), 1e-300);
    out.worst = std::max(out.worst, err);
    ++out.instances;
  }
  return out;
}

SelfTestResult laplacian_case(double tol) {
  SelfTestResult out{"laplacian_ratio", 0.0, tol, 0, false,
                     "Laplacian f / f vs finite differences of log f"};
  for (const Instance& inst : random_instances(100, 13)) {
    const double beta = beta_for(inst.cfg);
    const double exact = laplacian_ratio(inst.x, inst.cfg, beta);
    const double step = 1e-4;
    const double l0 = log_f(inst.x, inst.cfg, beta);
    double lap_log = 0.0, grad2 = 0.0;
    for (int j = 0; j < inst.cfg.dim; ++j) {
      Vec p = inst.x, m = inst.x;
      p[j] += step;
      m[j] -= step;
      const double lp = log_f(p, inst.cfg, beta), lm = log_f(m, inst.cfg, beta);
      lap_log += (lp - 2.0 * l0 + lm) / (step * step);
      const double g = (lp - lm) / (2.0 * step);
      grad2 += g * g;
    }
    // Laplacian f / f = Laplacian(log f) + |grad log f|^2.
    const double fd = lap_log + grad2;
    const double scale = std::max({std::abs(exact), std::abs(lap_log), grad2});
    out.worst = std::max(out.worst, std::abs(fd - exact) / scale);
    ++out.instances;
  }
  return out;
}

SelfTestResult v_invariance_case(double tol) {
  SelfTestResult out{"v_invariance", 0.0, tol, 0, false,
                     "V under pole permutation, translation and scaling"};
  std::mt19937_64 rng(14);
  for (const Instance& inst : random_instances(100, 14)) {
    const double v = potential_v(inst.x, inst.cfg);
    const double scale = std::max(std::abs(v), 1e-300);

    PoleConfig perm = inst.cfg;
    std::shuffle(perm.poles.begin(), perm.poles.end(), rng);
    double err = std::abs(potential_v(inst.x, perm) - v) / scale;

    PoleConfig moved = inst.cfg;
    Vec t(inst.cfg.dim);
    for (int j = 0; j < inst.cfg.dim; ++j) t[j] = 0.5 + 0.25 * j;
    for (Vec& a : moved.poles) a += t;
    err = std::max(err, std::abs(potential_v(inst.x + t, moved) - v) / scale);

    PoleConfig scaled = inst.cfg;
    const double lambda = 1.75;
    for (Vec& a : scaled.poles) a *= lambda;
    err = std::max(err,
                   std::abs(lambda * lambda * potential_v(lambda * inst.x, scaled) - v) / scale);
    out.worst = std::max(out.worst, err);
    ++out.instances;
  }
  return out;
}

SelfTestResult near_pole_case(double tol) {
  SelfTestResult out{"near_pole_limit", 0.0, tol, 0, false,
                     "|x - a_i|^2 V(x) -> n - 1, Richardson-extrapolated"};
  for (const Instance& inst : random_instances(10, 15, 2)) {
    const PoleConfig& cfg = inst.cfg;
    const double n1 = static_cast<double>(cfg.size()) - 1.0;
    const Vec dir = (inst.x - cfg.poles[0]).normalized();
    double prev = 0.0, limit = 0.0;
    for (int k = 1; k <= 5; ++k) {
      const double d = std::pow(10.0, -k);
      const double q = d * d * potential_v(cfg.poles[0] + d * dir, cfg);
      // q(d) = (n - 1) + O(d): eliminate the linear term between d and 10 d.
      if (k > 1) limit = (10.0 * q - prev) / 9.0;
      prev = q;
    }
    out.worst = std::max(out.worst, std::abs(limit - n1) / n1);
    ++out.instances;
  }
  return out;
}

using CaseFn = std::function<SelfTestResult(double)>;

struct Case {
  const char* name;
  double tolerance;
  CaseFn run;
};

const std::vector<Case>& cases() {
  static const std::vector<Case> all = {
      {"gaussian", 1e-4, gaussian_case},
      {"ball_inverse_square", 1e-4, ball_case},
      {"cross_term", 1e-10, cross_term_case},
      {"log_gradient", 1e-6, log_gradient_case},
      {"laplacian_ratio", 1e-4, laplacian_case},
      {"v_invariance", 1e-10, v_invariance_case},
      {"near_pole_limit", 1e-2, near_pole_case},
  };
  return all;
}

}  // namespace

std::vector<std::string> selftest_names() {
  std::vector<std::string> out;
  for (const Case& c : cases()) out.emplace_back(c.name);
  return out;
}

std::vector<SelfTestResult> run_selftest(const std::string& filter, double tolerance_scale) {
  std::vector<SelfTestResult> out;
  for (const Case& c : cases()) {
    if (!filter.empty() && std::string(c.name).find(filter) == std::string::npos) continue;
    SelfTestResult r = c.run(c.tolerance * tolerance_scale);
    r.pass = std::isfinite(r.worst) && r.worst < r.tolerance && r.instances > 0;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace hardylab::cli
