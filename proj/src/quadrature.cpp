#include "hardylab/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>

namespace hardylab {
namespace {

constexpr std::size_t kCellsPerChunk = 1024;

double smooth_step_down(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

// Partition-of-unity weight of the ball around a pole: 1 on B(a, r0/2), 0 outside B(a, r0).
double ball_weight(double r, double r0) { return smooth_step_down((r - 0.5 * r0) / (0.5 * r0)); }

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::mt19937_64 chunk_generator(std::uint64_t seed, std::uint64_t chunk, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32),
                    tag};
  return std::mt19937_64(seq);
}

// Shell [lo, hi] around center: Gauss-Legendre in t = log r.
struct ShellSums {
  std::vector<double> high;
  std::vector<double> low;
};

void accumulate_shell(const Integrand& f, std::size_t pole, const Vec& center, double lo,
                      double hi,
                      const GaussRule& radial, const AngularRule& ang, double blend_r0,
                      std::vector<double>& sums, std::vector<double>& scratch) {
  const int dim = static_cast<int>(center.size());
  const double t_lo = std::log(lo);
  const double t_hi = std::log(hi);
  const double half = 0.5 * (t_hi - t_lo);
  const double mid = 0.5 * (t_hi + t_lo);
  std::fill(sums.begin(), sums.end(), 0.0);
  Vec x(dim);
  for (std::size_t q = 0; q < radial.nodes.size(); ++q) {
    const double r = std::exp(mid + half * radial.nodes[q]);
    double radial_w = half * radial.weights[q] * std::pow(r, dim);
    if (blend_r0 > 0.0) radial_w *= ball_weight(r, blend_r0);
    if (radial_w == 0.0) continue;
    for (std::size_t a = 0; a < ang.directions.size(); ++a) {
      if (f.eval_near) {
        f.eval_near(pole, r * ang.directions[a], scratch);
      } else {
        x = center + r * ang.directions[a];
        f.eval(x, scratch);
      }
      const double w = radial_w * ang.weights[a];
      for (std::size_t c = 0; c < sums.size(); ++c) sums[c] += w * scratch[c];
    }
  }
}

void direction_from_angles(std::span<const double> cos_t, std::span<const double> sin_t,
                           double phi, Vec& dir) {
  const int dim = static_cast<int>(dir.size());
  double prod = 1.0;
  for (int j = 0; j < dim - 2; ++j) {
    dir[j] = prod * cos_t[j];
    prod *= sin_t[j];
  }
  dir[dim - 2] = prod * std::cos(phi);
  dir[dim - 1] = prod * std::sin(phi);
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

int worker_count() {
  if (const char* env = std::getenv("HARDYLAB_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          task(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double sphere_surface_measure(int dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "sphere measure needs N >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

GaussRule gauss_gegenbauer(int order, double alpha) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "Gauss rule order must be positive");
  if (!(alpha > -1.0)) throw Error(ErrorCode::InvalidArgument, "Gegenbauer alpha must exceed -1");
  const double ab = 2.0 * alpha;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) {
    const double kk = k;
    const double s = 2.0 * kk + ab;
    sub[k - 1] = std::sqrt(4.0 * kk * (kk + alpha) * (kk + alpha) * (kk + ab) /
                           (s * s * (s + 1.0) * (s - 1.0)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) *
                     std::tgamma(alpha + 1.0) / std::tgamma(ab + 2.0);
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

GaussRule gauss_legendre(int order) { return gauss_gegenbauer(order, 0.0); }

AngularRule angular_rule(int dim, int order) {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "angular rule needs N >= 2");
  std::vector<GaussRule> polar;
  for (int j = 1; j <= dim - 2; ++j) {
    const int power = dim - 1 - j;
    polar.push_back(gauss_gegenbauer(order, 0.5 * (power - 1)));
  }
  const int n_phi = 2 * order;
  AngularRule rule;
  std::vector<int> idx(polar.size(), 0);
  std::vector<double> cos_t(polar.size()), sin_t(polar.size());
  Vec dir(dim);
  while (true) {
    double w = 1.0;
    for (std::size_t j = 0; j < polar.size(); ++j) {
      cos_t[j] = polar[j].nodes[idx[j]];
      sin_t[j] = std::sqrt(std::max(0.0, 1.0 - cos_t[j] * cos_t[j]));
      w *= polar[j].weights[idx[j]];
    }
    for (int k = 0; k < n_phi; ++k) {
      const double phi = 2.0 * std::numbers::pi * (k + 0.5) / n_phi;
      direction_from_angles(cos_t, sin_t, phi, dir);
      rule.directions.push_back(dir);
      rule.weights.push_back(w * 2.0 * std::numbers::pi / n_phi);
    }
    std::size_t j = 0;
    for (; j < idx.size(); ++j) {
      if (++idx[j] < order) break;
      idx[j] = 0;
    }
    if (j == idx.size()) break;
  }
  return rule;
}

void validate_spec(const QuadratureSpec& spec, const PoleConfig& cfg, bool pole_relative) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (!(spec.pole_radius > 0.0)) fail("pole_radius must be positive");
  if (cfg.size() >= 2 && spec.pole_radius > min_pole_gap(cfg) * (1.0 + 1e-12)) {
    fail("pole_radius exceeds half the minimal pole distance; pole balls would overlap");
  }
  if (spec.radial_levels < 4) fail("radial_levels must be at least 4");
  if (spec.mc_samples < 1000) fail("mc_samples must be at least 1000");
  if (!(spec.tail_exponent > 0.0)) fail("tail_exponent must be positive");
  if (spec.radial_order < 2) fail("radial_order must be at least 2");
  if (spec.angular_order < 2) fail("angular_order must be at least 2");
  if (!(spec.far_radius > max_pole_norm(cfg) + spec.pole_radius)) {
    fail("far_radius must exceed the enclosing radius of the pole balls");
  }
  if (spec.radial_levels > kMaxRadialLevels) {
    fail("radial_levels must be at most " + std::to_string(kMaxRadialLevels));
  }
  if (!pole_relative && !(core_radius(spec) > 1e3 * 1e-12 * (1.0 + max_pole_norm(cfg)))) {
    fail("radial_levels too large: innermost shell reaches the pole guard");
  }
}

double core_radius(const QuadratureSpec& spec) {
  return std::ldexp(spec.pole_radius, -spec.radial_levels);
}

bool locally_integrable(std::span<const double> exponents, int dim) {
  return std::all_of(exponents.begin(), exponents.end(), [dim](double p) { return p < dim; });
}

void local_integrability_check(std::span<const double> exponents, int dim) {
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (!(exponents[i] < dim)) {
      std::ostringstream os;
      os << "pole " << i << ": integrand grows like r^-" << exponents[i]
         << ", not integrable in dimension " << dim;
      throw Error(ErrorCode::NonIntegrableSingularity, os.str());
    }
  }
}

std::vector<IntegralResult> integrate(const Integrand& integrand, const PoleConfig& cfg,
                                      const QuadratureSpec& spec, CoreMode mode) {
  validate_spec(spec, cfg, static_cast<bool>(integrand.eval_near));
  const std::size_t ncomp = integrand.components;
  const std::size_t npoles = cfg.size();
  const int dim = cfg.dim;
  if (integrand.pole_exponents.size() != ncomp) {
    throw Error(ErrorCode::InvalidArgument, "pole_exponents must list every component");
  }
  for (const auto& row : integrand.pole_exponents) {
    if (row.size() != npoles) {
      throw Error(ErrorCode::InvalidArgument, "pole_exponents must list every pole");
    }
    if (mode == CoreMode::Extrapolate) local_integrability_check(row, dim);
  }

  const GaussRule radial_hi = gauss_legendre(spec.radial_order);
  const GaussRule radial_lo = gauss_legendre(std::max(1, spec.radial_order / 2));
  const AngularRule ang = angular_rule(dim, spec.angular_order);

  const double r0 = spec.pole_radius;
  const double r_enc = enclosing_radius(cfg, r0);
  const double r_far = spec.far_radius;
  const int levels = spec.radial_levels;

  // Stratified grid: m_r radial strata (half inside r_enc, half outside), m_a per angle.
  const std::int64_t cells_target = std::max<std::int64_t>(spec.mc_samples / 4, 1);
  std::int64_t m_a = std::max<std::int64_t>(
      2, static_cast<std::int64_t>(std::floor(std::pow(cells_target / 4.0, 1.0 / dim))));
  std::int64_t m_r = 4 * m_a;
  const std::int64_t total_cells = m_r * ipow(m_a, dim - 1);

  const std::int64_t shell_evals = static_cast<std::int64_t>(npoles) * levels *
                                   (spec.radial_order + spec.radial_order / 2) *
                                   static_cast<std::int64_t>(ang.directions.size());
  const std::int64_t evals = shell_evals + 4 * total_cells +
                             static_cast<std::int64_t>(ang.directions.size());
  if (evals > spec.max_evaluations) {
    throw Error(ErrorCode::BudgetExceeded, "quadrature needs " + std::to_string(evals) +
                                               " evaluations, cap is " +
                                               std::to_string(spec.max_evaluations));
  }

  // (a) graded shells around each pole.
  const std::size_t shell_tasks = npoles * static_cast<std::size_t>(levels);
  std::vector<ShellSums> shells(shell_tasks);
  parallel_for(shell_tasks, [&](std::size_t task) {
    const std::size_t i = task / levels;
    const int k = static_cast<int>(task % levels);
    const double hi = std::ldexp(r0, -k);
    const double lo = 0.5 * hi;
    std::vector<double> scratch(ncomp);
    ShellSums& out = shells[task];
    out.high.assign(ncomp, 0.0);
    out.low.assign(ncomp, 0.0);
    const double blend = (k == 0) ? r0 : 0.0;
    accumulate_shell(integrand, i, cfg.poles[i], lo, hi, radial_hi, ang, blend, out.high, scratch);
    accumulate_shell(integrand, i, cfg.poles[i], lo, hi, radial_lo, ang, blend, out.low, scratch);
  });

  // (b) stratified Monte Carlo over the rest of B(0, r_far).
  struct ChunkSums {
    std::vector<CompensatedSum> value;
    std::vector<double> variance;
  };
  const std::size_t chunks =
      static_cast<std::size_t>((total_cells + kCellsPerChunk - 1) / kCellsPerChunk);
  std::vector<ChunkSums> chunk_sums(chunks);
  const double cell_volume = 1.0 / static_cast<double>(total_cells);
  const double log_span = std::log(r_far / r_enc);
  const double r_enc_pow = std::pow(r_enc, dim);

  parallel_for(chunks, [&](std::size_t chunk) {
    ChunkSums& out = chunk_sums[chunk];
    out.value.assign(ncomp, CompensatedSum{});
    out.variance.assign(ncomp, 0.0);
    std::mt19937_64 rng = chunk_generator(spec.seed, chunk, 0x51u);
    std::vector<double> scratch(ncomp), pair1(ncomp), pair2(ncomp);
    std::vector<double> cos_t(std::max(dim - 2, 0)), sin_t(std::max(dim - 2, 0));
    std::array<std::int64_t, kMaxDim> index{};
    std::array<double, kMaxDim> xi{}, u{};
    Vec dir(dim), x(dim);

    // Adds jac * partition weight * integrand at grid coordinates u into acc.
    auto sample = [&](std::vector<double>& acc) {
      double jac;
      double r;
      if (u[0] < 0.5) {
        r = r_enc * std::pow(2.0 * u[0], 1.0 / dim);
        jac = 2.0 * r_enc_pow / dim;
      } else {
        r = r_enc * std::exp((2.0 * u[0] - 1.0) * log_span);
        jac = 2.0 * std::pow(r, dim) * log_span;
      }
      for (int j = 0; j < dim - 2; ++j) {
        const double theta = std::numbers::pi * u[j + 1];
        cos_t[j] = std::cos(theta);
        sin_t[j] = std::sin(theta);
        jac *= std::numbers::pi * std::pow(sin_t[j], dim - 2 - j);
      }
      const double phi = 2.0 * std::numbers::pi * u[dim - 1];
      jac *= 2.0 * std::numbers::pi;
      direction_from_angles(cos_t, sin_t, phi, dir);
      x = r * dir;
      double partition = 1.0;
      for (std::size_t i = 0; i < npoles; ++i) {
        const double d = (x - cfg.poles[i]).norm();
        if (d < r0) partition -= ball_weight(d, r0);
      }
      const double w = jac * partition;
      if (w == 0.0) return;
      integrand.eval(x, scratch);
      for (std::size_t c = 0; c < ncomp; ++c) acc[c] += w * scratch[c];
    };

    const std::int64_t first = static_cast<std::int64_t>(chunk * kCellsPerChunk);
    const std::int64_t last = std::min<std::int64_t>(first + kCellsPerChunk, total_cells);
    for (std::int64_t cell = first; cell < last; ++cell) {
      std::int64_t rest = cell;
      index[0] = rest % m_r;
      rest /= m_r;
      for (int d = 1; d < dim; ++d) {
        index[d] = rest % m_a;
        rest /= m_a;
      }
      for (auto* pair : {&pair1, &pair2}) {
        std::fill(pair->begin(), pair->end(), 0.0);
        for (int d = 0; d < dim; ++d) xi[d] = uniform01(rng);
        for (int side = 0; side < 2; ++side) {
          for (int d = 0; d < dim; ++d) {
            const double m = (d == 0) ? static_cast<double>(m_r) : static_cast<double>(m_a);
            const double jitter = side == 0 ? xi[d] : 1.0 - xi[d];
            u[d] = (static_cast<double>(index[d]) + jitter) / m;
          }
          sample(*pair);
        }
      }
      for (std::size_t c = 0; c < ncomp; ++c) {
        const double p1 = 0.5 * pair1[c];
        const double p2 = 0.5 * pair2[c];
        out.value[c].add(cell_volume * 0.5 * (p1 + p2));
        const double diff = cell_volume * (p1 - p2);
        out.variance[c] += 0.25 * diff * diff;
      }
    }
  });

  // (c) tail beyond r_far from the sphere average and the declared decay.
  std::vector<double> tail(ncomp, 0.0);
  {
    std::vector<double> scratch(ncomp);
    Vec x(dim);
    for (std::size_t a = 0; a < ang.directions.size(); ++a) {
      x = r_far * ang.directions[a];
      integrand.eval(x, scratch);
      for (std::size_t c = 0; c < ncomp; ++c) tail[c] += ang.weights[a] * scratch[c];
    }
    for (double& t : tail) t *= std::pow(r_far, dim) / spec.tail_exponent;
  }

  std::vector<IntegralResult> results(ncomp);
  for (std::size_t c = 0; c < ncomp; ++c) {
    IntegralResult& res = results[c];
    CompensatedSum total;
    double det = 0.0;
    double trunc = std::abs(tail[c]);
    for (std::size_t i = 0; i < npoles; ++i) {
      for (int k = 0; k < levels; ++k) {
        const ShellSums& s = shells[i * levels + k];
        total.add(s.high[c]);
        det += std::abs(s.high[c] - s.low[c]);
      }
      if (mode == CoreMode::Extrapolate) {
        const double innermost = shells[i * levels + levels - 1].high[c];
        const double p = integrand.pole_exponents[c][i];
        const double core = innermost / (std::pow(2.0, dim - p) - 1.0);
        total.add(core);
        trunc += std::abs(core);
      }
    }
    double variance = 0.0;
    for (const ChunkSums& cs : chunk_sums) {
      total.add(cs.value[c].value());
      variance += cs.variance[c];
    }
    res.value = total.value();
    res.std_error = std::sqrt(variance);
    res.det_error = det;
    res.trunc_bound = trunc;
    res.cells = total_cells + static_cast<std::int64_t>(shell_tasks);
  }
  return results;
}

IntegralResult integrate(const std::function<double(const Vec&)>& field,
                         std::span<const double> pole_exponents, const PoleConfig& cfg,
                         const QuadratureSpec& spec, CoreMode mode) {
  Integrand f;
  f.components = 1;
  f.eval = [&field](const Vec& x, std::span<double> out) { out[0] = field(x); };
  f.pole_exponents = {std::vector<double>(pole_exponents.begin(), pole_exponents.end())};
  return integrate(f, cfg, spec, mode).front();
}

std::vector<IntegralResult> integrate_sphere(const Integrand& integrand, const Vec& center,
                                             double radius, int angular_order,
                                             std::optional<std::size_t> pole) {
  const int dim = static_cast<int>(center.size());
  const std::size_t ncomp = integrand.components;
  const bool near = pole.has_value() && static_cast<bool>(integrand.eval_near);
  auto run = [&](int order) {
    const AngularRule ang = angular_rule(dim, order);
    std::vector<double> scratch(ncomp);
    std::vector<CompensatedSum> sums(ncomp);
    Vec x(dim);
    const double scale = std::pow(radius, dim - 1);
    for (std::size_t a = 0; a < ang.directions.size(); ++a) {
      if (near) {
        integrand.eval_near(*pole, radius * ang.directions[a], scratch);
      } else {
        x = center + radius * ang.directions[a];
        integrand.eval(x, scratch);
      }
      for (std::size_t c = 0; c < ncomp; ++c) sums[c].add(scale * ang.weights[a] * scratch[c]);
    }
    std::vector<double> out(ncomp);
    for (std::size_t c = 0; c < ncomp; ++c) out[c] = sums[c].value();
    return out;
  };
  const auto hi = run(angular_order);
  const auto lo = run(std::max(2, angular_order / 2 + 1));
  std::vector<IntegralResult> results(ncomp);
  for (std::size_t c = 0; c < ncomp; ++c) {
    results[c].value = hi[c];
    results[c].det_error = std::abs(hi[c] - lo[c]);
    results[c].cells = 1;
  }
  return results;
}

IntegralResult integrate_ball(const std::function<double(const Vec&)>& field,
                              const Vec& center, double radius, double exponent,
                              int levels, int radial_order, int angular_order) {
  const int dim = static_cast<int>(center.size());
  if (!(exponent < dim)) {
    const double e[] = {exponent};
    local_integrability_check(e, dim);
  }
  Integrand f;
  f.components = 1;
  f.eval = [&field](const Vec& x, std::span<double> out) { out[0] = field(x); };
  const GaussRule radial_hi = gauss_legendre(radial_order);
  const GaussRule radial_lo = gauss_legendre(std::max(1, radial_order / 2));
  const AngularRule ang = angular_rule(dim, angular_order);
  std::vector<double> hi(1), lo(1), scratch(1);
  CompensatedSum total;
  double det = 0.0;
  double innermost = 0.0;
  for (int k = 0; k < levels; ++k) {
    const double top = std::ldexp(radius, -k);
    accumulate_shell(f, 0, center, 0.5 * top, top, radial_hi, ang, 0.0, hi, scratch);
    accumulate_shell(f, 0, center, 0.5 * top, top, radial_lo, ang, 0.0, lo, scratch);
    total.add(hi[0]);
    det += std::abs(hi[0] - lo[0]);
    innermost = hi[0];
  }
  const double core = innermost / (std::pow(2.0, dim - exponent) - 1.0);
  total.add(core);
  IntegralResult res;
  res.value = total.value();
  res.det_error = det;
  res.trunc_bound = std::abs(core);
  res.cells = levels;
  return res;
}

}  // namespace hardylab
