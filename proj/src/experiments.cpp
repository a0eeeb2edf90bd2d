#include "hardylab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace hardylab {
namespace {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double u53(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec random_direction(std::mt19937_64& rng, int dim) {
  Vec d(dim);
  // Box-Muller on u53 draws keeps the stream platform independent.
  for (int j = 0; j < dim; ++j) {
    const double u1 = 1.0 - u53(rng);
    const double u2 = u53(rng);
    d[j] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  const double n = d.norm();
  if (!(n > 0.0)) return unit_vec(dim, 0);
  return d / n;
}

void require_multipole(const PoleConfig& cfg, const char* what) {
  if (cfg.size() < 2) {
    throw Error(ErrorCode::SinglePole, std::string(what) + " needs at least two poles (V = 0)");
  }
}

}  // namespace

// ---------------------------------------------------------------- optimality

bool SweepRecord::agrees() const {
  const double gap = deficit.value - remainder.value - boundary_flux.value;
  return std::abs(gap) <= 3.0 * (deficit.error + remainder.error + boundary_flux.error);
}

bool RateFit::within(double tol) const {
  if (!predicted_slope) return false;
  return std::abs(slope - *predicted_slope) <= tol * std::abs(*predicted_slope);
}

RateFit fit_rate(std::span<const SweepRecord> records, std::optional<double> predicted) {
  std::vector<double> xs, ys;
  for (const SweepRecord& r : records) {
    if (r.remainder.value > 10.0 * r.remainder.error && r.remainder.value > 0.0) {
      xs.push_back(std::log(r.eps));
      ys.push_back(std::log(r.remainder.value));
    }
  }
  if (xs.size() < 4) {
    throw Error(ErrorCode::InvalidArgument,
                "rate fit needs 4 resolved points, got " + std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RateFit fit;
  fit.points = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.predicted_slope = predicted;
  return fit;
}

std::optional<double> weight_decay_exponent(const PoleConfig& cfg, const WeightSpec& w) {
  if (w.is_unit()) return 0.0;
  if (w.delta > 0.0 && w.m > 0.0) return std::nullopt;
  return static_cast<double>(cfg.size()) * w.gamma;
}

std::optional<double> predicted_slope(const PoleConfig& cfg, const WeightSpec& w,
                                      double k_mu) {
  const auto g = weight_decay_exponent(cfg, w);
  if (!g) return std::nullopt;
  return (cfg.dim + k_mu - 2.0) + k_mu + *g;
}

double sweep_radius(const PoleConfig& cfg, const QuadratureSpec& spec) {
  return enclosing_radius(cfg, spec.pole_radius);
}

double max_admissible_eps(const PoleConfig& cfg, double radius) {
  const double amax = max_pole_norm(cfg);
  if (amax == 0.0) return 1.0;
  return std::min(1.0, radius / (2.0 * amax));
}

std::vector<double> default_eps_grid(const PoleConfig& cfg, double radius, int count) {
  const double bound = max_admissible_eps(cfg, radius);
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    const double e = std::ldexp(0.4, -k);
    if (e <= bound) out.push_back(e);
  }
  return out;
}

OptimalitySweep optimality_sweep(const PoleConfig& cfg, const WeightSpec& w,
                                 const HardyParams& p, std::span<const double> eps_list,
                                 const QuadratureSpec& spec) {
  validate_config(cfg, w);
  require_multipole(cfg, "optimality sweep");
  const double radius = sweep_radius(cfg, spec);
  const double bound = max_admissible_eps(cfg, radius);
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    const double e = eps_list[k];
    if (!(e > 0.0 && e <= bound)) {
      std::ostringstream os;
      os << "eps = " << e << " outside (0, " << bound << "]";
      throw Error(ErrorCode::EpsilonInadmissible, os.str());
    }
    if (k > 0 && !(e < eps_list[k - 1])) {
      throw Error(ErrorCode::InvalidArgument, "eps list must be strictly decreasing");
    }
  }

  OptimalitySweep sweep;
  sweep.c_n_mu = p.c_n_mu;
  for (double eps : eps_list) {
    QuadratureSpec s = spec;
    s.far_radius = std::max(spec.far_radius, 2.0 * radius / eps * (1.0 + 1e-9));
    const TestFunction phi = TestFunction::optimality_phi(radius, eps, p.beta);
    const EnergyReport rep = energy_report(phi, cfg, w, p, s, CorePolicy::Auto);
    SweepRecord r;
    r.eps = eps;
    r.remainder = {rep.remainder.value, rep.remainder.error()};
    r.hardy_ratio = hardy_ratio(rep);
    r.deficit = hardy_deficit(rep, p);
    r.boundary_flux = {rep.boundary_flux.value, rep.boundary_flux.error()};
    r.excised = rep.excised;
    r.core_radius = rep.core_radius;
    sweep.records.push_back(r);
  }

  sweep.remainder_decreasing = true;
  sweep.ratio_nonincreasing = true;
  for (std::size_t k = 1; k < sweep.records.size(); ++k) {
    const SweepRecord& a = sweep.records[k - 1];
    const SweepRecord& b = sweep.records[k];
    if (!(b.remainder.value < a.remainder.value)) sweep.remainder_decreasing = false;
    if (b.hardy_ratio.value > a.hardy_ratio.value + a.hardy_ratio.error + b.hardy_ratio.error) {
      sweep.ratio_nonincreasing = false;
    }
  }
  sweep.fit = fit_rate(sweep.records, predicted_slope(cfg, w, p.k_mu));
  return sweep;
}

// ---------------------------------------------------------------- beta sweep

std::vector<double> beta_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi > lo) || count < 3) {
    throw Error(ErrorCode::InvalidArgument, "beta grid needs 0 < lo < hi and at least 3 points");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  }
  return out;
}

BetaSweep beta_sweep(const PoleConfig& cfg, const WeightSpec& w, double k_mu,
                     std::span<const double> betas, const std::optional<TestFunction>& phi,
                     const QuadratureSpec& spec) {
  validate_config(cfg, w);
  if (betas.size() < 3) throw Error(ErrorCode::InvalidArgument, "beta sweep needs 3 betas");
  std::vector<double> grid(betas.begin(), betas.end());
  for (double b : grid) {
    if (!(b > 0.0)) throw Error(ErrorCode::NonpositiveBeta, "every beta must be positive");
  }
  std::sort(grid.begin(), grid.end());
  const int n = static_cast<int>(cfg.size());
  const double s = cfg.dim + k_mu - 2.0;

  BetaSweep out;
  out.formula_argmax = s / (2.0 * n);
  out.formula_max = s * s / (4.0 * n);
  out.rows.resize(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.rows[i].beta = grid[i];
    out.rows[i].coefficient = inverse_square_coefficient(cfg.dim, n, k_mu, grid[i]);
    if (out.rows[i].coefficient > out.rows[best].coefficient) best = i;
  }
  out.grid_argmax = grid[best];
  out.grid_max = out.rows[best].coefficient;
  const std::size_t lo = best == 0 ? 0 : best - 1;
  const std::size_t hi = std::min(best + 1, grid.size() - 1);
  out.grid_step = std::max(grid[best] - grid[lo], grid[hi] - grid[best]);
  out.refined_argmax = out.grid_argmax;
  if (best > 0 && best + 1 < grid.size()) {
    const double x0 = grid[best - 1], x1 = grid[best], x2 = grid[best + 1];
    const double y0 = out.rows[best - 1].coefficient, y1 = out.rows[best].coefficient,
                 y2 = out.rows[best + 1].coefficient;
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if (den != 0.0) out.refined_argmax = x1 - 0.5 * num / den;
  }

  if (phi) {
    const auto checks = beta_identity_check(*phi, grid, cfg, w, k_mu, spec, CorePolicy::Auto);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double scale = std::max(checks[i].dirichlet.value, 1.0);
      out.rows[i].residual = Estimate{checks[i].residual / scale, checks[i].error / scale};
    }
  }
  return out;
}

// ---------------------------------------------------------------- spectral

GramMatrices assemble_gram(const PoleConfig& cfg, const WeightSpec& w, const HardyParams& p,
                           std::span<const TestFunction> basis, const QuadratureSpec& spec) {
  validate_config(cfg, w);
  require_multipole(cfg, "spectral bound");
  const std::size_t k = basis.size();
  if (k == 0 || k > 200) throw Error(ErrorCode::InvalidArgument, "basis size must be 1..200");
  const std::size_t n = cfg.size();
  const double g = w.pole_exponent();
  const double wf = w_growth_exponent(w, p.k_mu);

  // Upper-triangle entries in row-major order; A block then B block.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) pairs.emplace_back(i, j);
  }
  const std::size_t m = pairs.size();

  Integrand f;
  f.components = 2 * m;
  f.pole_exponents.resize(2 * m);
  for (std::size_t e = 0; e < m; ++e) {
    const double bi = basis[pairs[e].first].pole_exponent();
    const double bj = basis[pairs[e].second].pole_exponent();
    const double gi = bi > 0.0 ? bi + 1.0 : 0.0;
    const double gj = bj > 0.0 ? bj + 1.0 : 0.0;
    f.pole_exponents[e].assign(n, std::max(gi + gj, wf + bi + bj) + g);
    f.pole_exponents[m + e].assign(n, 2.0 + bi + bj + g);
  }
  const CoreMode mode = resolve_core_mode(f.pole_exponents, cfg.dim, CorePolicy::Auto);

  QuadratureSpec s = spec;
  double support = 0.0;
  for (const TestFunction& phi : basis) {
    if (const auto* opt = std::get_if<OptimalityPhi>(&phi.kind())) {
      support = std::max(support, 2.0 * opt->radius / opt->eps * (1.0 + 1e-9));
    }
  }
  s.far_radius = std::max(s.far_radius, support);

  const FieldKernel kernel(cfg, w, p.k_mu, p.beta);
  bind_pointwise(f, cfg, kernel, [&](const Vec& x, const PointFields& pf, std::span<double> out) {
    std::vector<FieldEval> ev(k);
    for (std::size_t i = 0; i < k; ++i) ev[i] = evaluate_with_fields(basis[i], x, cfg, pf);
    const double wmu = pf.w() * pf.mu;
    const double vmu = pf.v * pf.mu;
    for (std::size_t e = 0; e < m; ++e) {
      const FieldEval& a = ev[pairs[e].first];
      const FieldEval& b = ev[pairs[e].second];
      out[e] = a.gradient.dot(b.gradient) * pf.mu + wmu * a.value * b.value;
      out[m + e] = vmu * a.value * b.value;
    }
  });
  const auto res = integrate(f, cfg, s, mode);

  GramMatrices gm;
  gm.excised = mode == CoreMode::Excise;
  gm.a.resize(k, k);
  gm.b.resize(k, k);
  gm.a_err.resize(k, k);
  gm.b_err.resize(k, k);
  for (std::size_t e = 0; e < m; ++e) {
    const auto [i, j] = pairs[e];
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    gm.a(ii, jj) = gm.a(jj, ii) = res[e].value;
    gm.b(ii, jj) = gm.b(jj, ii) = res[m + e].value;
    gm.a_err(ii, jj) = gm.a_err(jj, ii) = res[e].error();
    gm.b_err(ii, jj) = gm.b_err(jj, ii) = res[m + e].error();
  }
  return gm;
}

namespace {

Eigen::MatrixXd principal(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      out(i, j) = m(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                    static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

double scaled_condition(const Eigen::MatrixXd& b) {
  const Eigen::VectorXd d = b.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd s = d.asDiagonal() * b * d.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

std::vector<std::size_t> screen_basis(const GramMatrices& gram, double condition_cap) {
  std::vector<std::size_t> all(static_cast<std::size_t>(gram.b.rows()));
  std::iota(all.begin(), all.end(), std::size_t{0});
  return screen_basis(gram, all, condition_cap);
}

std::vector<std::size_t> screen_basis(const GramMatrices& gram,
                                      std::span<const std::size_t> candidates,
                                      double condition_cap) {
  std::vector<std::size_t> kept;
  for (std::size_t c : candidates) {
    const auto i = static_cast<Eigen::Index>(c);
    if (i >= gram.b.rows()) throw Error(ErrorCode::InvalidArgument, "basis index out of range");
    const double bii = gram.b(i, i);
    if (!(bii > 0.0) || !std::isfinite(bii) || !std::isfinite(gram.a(i, i))) continue;
    kept.push_back(c);
    if (scaled_condition(principal(gram.b, kept)) > condition_cap) kept.pop_back();
  }
  if (kept.empty()) {
    throw Error(ErrorCode::SingularGram, "no basis function has a positive V-mass");
  }
  return kept;
}

SpectralResult smallest_eigenpair(const GramMatrices& gram,
                                  std::span<const std::size_t> subset) {
  if (subset.empty()) throw Error(ErrorCode::InvalidArgument, "empty subset");
  const Eigen::MatrixXd a = principal(gram.a, subset);
  const Eigen::MatrixXd b = principal(gram.b, subset);
  const Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularGram, "V-Gram matrix is not positive definite");
  }
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      a, b, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularGram, "generalized eigensolver failed");
  }
  SpectralResult r;
  r.basis_size = subset.size();
  r.kept.assign(subset.begin(), subset.end());
  r.lambda_min = es.eigenvalues()(0);
  r.witness = es.eigenvectors().col(0);
  const Eigen::VectorXd av = r.witness.cwiseAbs();
  const double bnorm = r.witness.dot(b * r.witness);
  const double aerr = av.dot(principal(gram.a_err, subset) * av);
  const double berr = av.dot(principal(gram.b_err, subset) * av);
  r.error = (aerr + std::abs(r.lambda_min) * berr) / bnorm;
  return r;
}

SpectralResult spectral_bound(const PoleConfig& cfg, const WeightSpec& w, const HardyParams& p,
                              std::span<const TestFunction> basis, const QuadratureSpec& spec) {
  const GramMatrices gram = assemble_gram(cfg, w, p, basis, spec);
  const auto kept = screen_basis(gram);
  SpectralResult r = smallest_eigenpair(gram, kept);
  r.basis_size = basis.size();
  return r;
}

std::vector<TestFunction> generic_bump_basis(const PoleConfig& cfg, std::size_t count,
                                             std::uint64_t seed, double radius) {
  std::mt19937_64 rng(seed);
  Vec centroid = Vec::Zero(cfg.dim);
  for (const Vec& a : cfg.poles) centroid += a;
  centroid /= static_cast<double>(std::max<std::size_t>(cfg.size(), 1));
  constexpr double kWidths[] = {0.35, 0.7, 1.4};
  std::vector<TestFunction> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vec c(cfg.dim);
    for (int j = 0; j < cfg.dim; ++j) c[j] = centroid[j] + radius * (2.0 * u53(rng) - 1.0);
    out.push_back(TestFunction::gaussian_bump(c, kWidths[k % 3] * radius / 2.0));
  }
  return out;
}

// ---------------------------------------------------------------- hypotheses

const char* to_string(H2Status status) {
  switch (status) {
    case H2Status::Certified: return "certified";
    case H2Status::NotStabilized: return "not_stabilized";
    case H2Status::UnboundedSuspected: return "unbounded_suspected";
  }
  return "unknown";
}

namespace {

struct H2Pass {
  double sup = -std::numeric_limits<double>::infinity();
  Vec argmax;
  double scale = 0.0;
  std::int64_t points = 0;
  std::vector<std::vector<double>> approach;
};

void h2_observe(H2Pass& pass, double w, const Vec& x) {
  ++pass.points;
  if (w > pass.sup) {
    pass.sup = w;
    pass.argmax = x;
  }
}

H2Pass h2_pass(const PoleConfig& cfg, const FieldKernel& kernel, const H2SampleSpec& sample,
               int multiplier, std::uint32_t tag) {
  H2Pass pass;
  const int dim = cfg.dim;
  const double beta = kernel.beta();
  const double k_mu = kernel.k_mu();
  std::seed_seq seq{static_cast<std::uint32_t>(sample.seed),
                    static_cast<std::uint32_t>(sample.seed >> 32), tag};
  std::mt19937_64 rng(seq);
  const double r_enc = 2.0 * (max_pole_norm(cfg) + 1.0);
  const double r_far = std::max(sample.far_radius, 2.0 * r_enc);
  const std::int64_t total = sample.samples * multiplier;
  PointFields pf;
  for (std::int64_t s = 0; s < total; ++s) {
    // Half the strata fill B(0, r_enc) uniformly in volume, half are log-spaced out to r_far.
    const double u = (static_cast<double>(s / 2) + u53(rng)) / static_cast<double>((total + 1) / 2);
    const double r = (s % 2 == 0) ? r_enc * std::pow(u, 1.0 / dim)
                                  : r_enc * std::pow(r_far / r_enc, u);
    const Vec x = r * random_direction(rng, dim);
    if (!kernel.try_evaluate(x, pf)) continue;
    h2_observe(pass, pf.w(), x);
    double mag = 0.0;
    for (const Vec& a : cfg.poles) {
      const Vec d = x - a;
      mag += beta / d.squaredNorm() * (std::abs(d.dot(pf.log_grad_mu)) + std::abs(k_mu));
    }
    pass.scale = std::max(pass.scale, mag);
  }

  const double r0 = cfg.size() >= 2 ? std::min(1.0, min_pole_gap(cfg)) : 1.0;
  const int ndir = sample.approach_directions * multiplier;
  std::vector<Vec> dirs;
  for (int j = 0; j < dim; ++j) {
    dirs.push_back(unit_vec(dim, j));
    dirs.push_back(unit_vec(dim, j, -1.0));
  }
  for (int j = 0; j < ndir; ++j) dirs.push_back(random_direction(rng, dim));
  pass.approach.assign(cfg.size(), {});
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (int k = 0; k < sample.approach_levels; ++k) {
      const double r = std::ldexp(r0, -k);
      double level_sup = -std::numeric_limits<double>::infinity();
      for (const Vec& d : dirs) {
        if (!kernel.try_evaluate_near(i, r * d, pf)) continue;
        const double w = pf.w();
        level_sup = std::max(level_sup, w);
        h2_observe(pass, w, cfg.poles[i] + r * d);
      }
      pass.approach[i].push_back(level_sup);
    }
  }
  return pass;
}

}  // namespace

H2Report h2_certify(const PoleConfig& cfg, const WeightSpec& w, double beta, double k_mu,
                    const H2SampleSpec& sample) {
  validate_config(cfg, w);
  if (!(beta > 0.0)) throw Error(ErrorCode::NonpositiveBeta, "beta must be positive");
  if (sample.samples < 1000 || sample.approach_levels < 8 || sample.approach_directions < 1) {
    throw Error(ErrorCode::InvalidArgument, "h2 sample spec is too small");
  }
  const FieldKernel kernel(cfg, w, k_mu, beta);
  const H2Pass base = h2_pass(cfg, kernel, sample, 1, 1);
  const H2Pass twice = h2_pass(cfg, kernel, sample, 2, 2);

  H2Report rep;
  rep.k_admissible = k_mu > 2.0 - cfg.dim;
  rep.scale = 1.0 + std::max(base.scale, twice.scale);
  rep.base_sup = base.sup;
  rep.c_mu = std::max(base.sup, twice.sup);
  rep.max_point = twice.sup >= base.sup ? twice.argmax : base.argmax;
  rep.points = base.points + twice.points;
  rep.approach_sup = twice.approach;
  rep.relative_change =
      std::abs(twice.sup - base.sup) / std::max(std::abs(twice.sup), 1e-6 * rep.scale);

  // Growth along the approach: the last level far above the middle one.
  bool growth = false;
  for (const auto& levels : twice.approach) {
    const double mid = levels[levels.size() / 2];
    const double last = levels.back();
    if (last > 2.0 * std::max(mid, 0.0) + 1e-6 * rep.scale) growth = true;
  }
  if (growth) {
    rep.status = H2Status::UnboundedSuspected;
  } else if (rep.relative_change < 0.05) {
    rep.status = H2Status::Certified;
  } else {
    rep.status = H2Status::NotStabilized;
  }
  return rep;
}

KSelection select_k_mu(const PoleConfig& cfg, const WeightSpec& w, const H2SampleSpec& sample) {
  const double gamma = w.pole_exponent();
  const double n = static_cast<double>(cfg.size());
  std::vector<double> candidates;
  for (double k : {-gamma, -n * gamma, 0.5 * ((2.0 - cfg.dim) - gamma)}) {
    if (std::find(candidates.begin(), candidates.end(), k) == candidates.end()) {
      candidates.push_back(k);
    }
  }
  KSelection sel;
  for (double k : candidates) {
    KCandidate c;
    c.k_mu = k;
    const double beta = (cfg.dim + k - 2.0) / n;
    c.beta_positive = beta > 0.0;
    if (c.beta_positive) {
      c.report = h2_certify(cfg, w, beta, k, sample);
      if (!sel.chosen && c.report->certified()) sel.chosen = k;
    }
    sel.candidates.push_back(std::move(c));
  }
  return sel;
}

H3H4Report h3_h4_certify(const PoleConfig& cfg, const WeightSpec& w, double k_mu) {
  validate_config(cfg, w);
  H3H4Report rep;
  const int dim = cfg.dim;
  const double n = static_cast<double>(cfg.size());
  const double gamma = w.pole_exponent();

  // H3: delta^-2 \int_{B(a_i, delta)} mu -> 0.
  const double d0 = cfg.size() >= 2 ? std::min(1.0, min_pole_gap(cfg)) : 1.0;
  rep.h3_pass = true;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    H3Pole pole;
    const auto mu = [&](const Vec& x) { return weight_value(x, cfg, w); };
    for (int k = 1; k <= 10; ++k) {
      const double delta = std::ldexp(d0, -k);
      IntegralResult r = integrate_ball(mu, cfg.poles[i], delta, gamma, 20, 8, 12);
      const double s = 1.0 / (delta * delta);
      r.value *= s;
      r.det_error *= s;
      r.trunc_bound *= s;
      pole.radii.push_back(delta);
      pole.scaled_mass.push_back(r);
    }
    double mx = 0.0, my = 0.0;
    const double cnt = static_cast<double>(pole.radii.size());
    for (std::size_t k = 0; k < pole.radii.size(); ++k) {
      mx += std::log(pole.radii[k]) / cnt;
      my += std::log(pole.scaled_mass[k].value) / cnt;
    }
    double sxx = 0.0, sxy = 0.0;
    bool monotone = true;
    for (std::size_t k = 0; k < pole.radii.size(); ++k) {
      const double dx = std::log(pole.radii[k]) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(pole.scaled_mass[k].value) - my);
      if (k > 0 && !(pole.scaled_mass[k].value < pole.scaled_mass[k - 1].value)) {
        monotone = false;
      }
    }
    pole.log_slope = sxy / sxx;
    pole.pass = monotone && pole.log_slope > 0.0;
    rep.h3_pass = rep.h3_pass && pole.pass;
    rep.h3.push_back(std::move(pole));
  }

  // H4 i): local exponent bookkeeping.
  rep.h4_local_pass = true;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    H4Pole pole;
    pole.exponent = (2.0 / n) * (dim + k_mu - 2.0) + 2.0 + gamma;
    pole.pass = pole.exponent < dim;
    rep.h4_local_pass = rep.h4_local_pass && pole.pass;
    rep.h4_local.push_back(pole);
  }

  // H4 ii): mu |x|^g bounded at infinity and g > -(N + 2K - 2).
  rep.decay_exponent = weight_decay_exponent(cfg, w);
  if (!rep.decay_exponent) {
    rep.h4_decay_bounded = true;
    rep.h4_decay_exponent_pass = true;
  } else {
    const double g = *rep.decay_exponent;
    std::mt19937_64 rng(0x4834);
    const double base = max_pole_norm(cfg) + 1.0;
    constexpr int kLevels = 24;
    double inner = 0.0, outer = 0.0;
    for (int k = 1; k <= kLevels; ++k) {
      const double r = std::ldexp(base, k);
      for (int j = 0; j < 32; ++j) {
        const Vec x = r * random_direction(rng, dim);
        const double v = weight_value(x, cfg, w) * std::pow(x.norm(), g);
        if (k <= kLevels / 2) {
          inner = std::max(inner, v);
        } else {
          outer = std::max(outer, v);
        }
      }
    }
    rep.decay_sup = std::max(inner, outer);
    rep.decay_ratio = inner > 0.0 ? outer / inner : std::numeric_limits<double>::infinity();
    rep.h4_decay_bounded = std::isfinite(rep.decay_sup) && rep.decay_ratio <= 2.0;
    rep.h4_decay_exponent_pass = g > -(dim + 2.0 * k_mu - 2.0);
  }
  rep.h4_far_pass = rep.h4_decay_bounded && rep.h4_decay_exponent_pass;
  return rep;
}

// ---------------------------------------------------------------- verify corpus

std::vector<TestFunction> default_corpus(const PoleConfig& cfg, std::size_t count) {
  std::mt19937_64 rng(20240917);
  const double spread = max_pole_norm(cfg) + 0.5;
  Vec centroid = Vec::Zero(cfg.dim);
  for (const Vec& a : cfg.poles) centroid += a;
  centroid /= static_cast<double>(std::max<std::size_t>(cfg.size(), 1));
  std::vector<TestFunction> out;
  for (std::size_t k = 0; k < count; ++k) {
    Vec c(cfg.dim);
    for (int j = 0; j < cfg.dim; ++j) c[j] = centroid[j] + spread * (2.0 * u53(rng) - 1.0);
    out.push_back(TestFunction::gaussian_bump(c, 0.4 + 0.6 * u53(rng)));
  }
  return out;
}

std::vector<VerifyRecord> verify_corpus(const PoleConfig& cfg, const WeightSpec& w,
                                        const HardyParams& p,
                                        std::span<const TestFunction> corpus,
                                        const QuadratureSpec& spec, double residual_tol,
                                        double ratio_tol) {
  std::vector<VerifyRecord> out;
  for (const TestFunction& phi : corpus) {
    const EnergyReport rep = energy_report(phi, cfg, w, p, spec, CorePolicy::Auto);
    VerifyRecord r;
    r.name = phi.describe();
    r.residual = identity_residual(rep, p);
    r.residual_pass = std::abs(r.residual.value) < residual_tol;
    if (cfg.size() >= 2) {
      r.ratio = hardy_ratio(rep);
      r.ratio_pass = r.ratio->value >= p.c_n_mu * (1.0 - ratio_tol);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace hardylab
