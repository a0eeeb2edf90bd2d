#pragma once

// Integration over R^N of integrands with point singularities at the poles.
//
// The domain is split with a smooth partition of unity:
//   (a) ball B(a_i, r0) around each pole, integrated in spherical coordinates
//       centred at a_i on geometric shells [r0 2^-(k+1), r0 2^-k], Gauss-Legendre
//       in log r times a product Gauss-Gegenbauer/trapezoid angular rule; the core
//       below the last shell is extrapolated from the declared exponent or excised;
//   (b) the rest of B(0, far_radius), by jittered stratified Monte Carlo with
//       antithetic pairs in origin-centred spherical coordinates;
//   (c) the tail beyond far_radius, bounded analytically from the declared decay
//       rate into trunc_bound.
//
// Results are bit-reproducible for a fixed spec: work is cut into chunks that
// depend only on the spec, every chunk has its own seeded generator, and partial
// sums are reduced in chunk order with compensated summation.

#include "hardylab/core.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hardylab {

struct QuadratureSpec {
  double pole_radius = 1.0;
  double far_radius = 8.0;
  int radial_levels = 24;
  std::int64_t mc_samples = 1'000'000;
  std::uint64_t seed = 1;
  double tail_exponent = 1.0;
  int radial_order = 8;
  int angular_order = 12;
  std::int64_t max_evaluations = 4'000'000'000;
};

/// Checks the spec against a configuration (ball disjointness, minimal sizes).
/// Without pole-relative evaluation the core must stay well above the pole guard.
void validate_spec(const QuadratureSpec& spec, const PoleConfig& cfg,
                   bool pole_relative = false);

/// Deepest radial_levels accepted with pole-relative evaluation.
inline constexpr int kMaxRadialLevels = 96;

struct IntegralResult {
  double value = 0.0;
  double std_error = 0.0;    // Monte Carlo part
  double det_error = 0.0;    // two-level difference of the deterministic rules
  double trunc_bound = 0.0;  // pole cores and far tail
  std::int64_t cells = 0;

  double error() const { return std_error + det_error + trunc_bound; }
};

enum class CoreMode {
  Extrapolate,  // integrands must be locally integrable; cores are extrapolated
  Excise,       // integrate over R^N minus B(a_i, core_radius); cores omitted
};

/// Vector-valued integrand. pole_exponents[c][i] = p means component c grows no
/// faster than |x - a_i|^-p near pole i.
struct Integrand {
  std::size_t components = 1;
  std::function<void(const Vec& x, std::span<double> out)> eval;
  std::vector<std::vector<double>> pole_exponents;
  /// Optional: evaluation at a_i + offset from the offset alone. When present the
  /// pole shells use it, and cores may shrink far below the absolute rounding scale.
  std::function<void(std::size_t pole, const Vec& offset, std::span<double> out)> eval_near;
};

/// Radius of the excised/extrapolated core around each pole.
double core_radius(const QuadratureSpec& spec);

/// ok iff p_i < N for every pole; otherwise NonIntegrableSingularity naming the pole.
void local_integrability_check(std::span<const double> exponents, int dim);
bool locally_integrable(std::span<const double> exponents, int dim);

std::vector<IntegralResult> integrate(const Integrand& integrand, const PoleConfig& cfg,
                                      const QuadratureSpec& spec,
                                      CoreMode mode = CoreMode::Extrapolate);

IntegralResult integrate(const std::function<double(const Vec&)>& field,
                         std::span<const double> pole_exponents, const PoleConfig& cfg,
                         const QuadratureSpec& spec, CoreMode mode = CoreMode::Extrapolate);

/// omega_N = 2 pi^(N/2) / Gamma(N/2), the area of the unit sphere in R^N.
double sphere_surface_measure(int dim);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Jacobi rule on [-1, 1] for the symmetric weight (1 - z^2)^alpha (Golub-Welsch).
GaussRule gauss_gegenbauer(int order, double alpha);
GaussRule gauss_legendre(int order);

/// Product rule on the unit sphere S^(N-1); weights sum to omega_N.
struct AngularRule {
  std::vector<Vec> directions;
  std::vector<double> weights;
};
AngularRule angular_rule(int dim, int order);

/// Surface integral of every component over the sphere |x - center| = radius.
/// With a pole index and integrand.eval_near set, center must be that pole.
std::vector<IntegralResult> integrate_sphere(const Integrand& integrand, const Vec& center,
                                             double radius, int angular_order,
                                             std::optional<std::size_t> pole = {});

/// Integral over B(center, radius) on graded shells with core extrapolation,
/// for a scalar field growing like |x - center|^-p.
IntegralResult integrate_ball(const std::function<double(const Vec&)>& field,
                              const Vec& center, double radius, double exponent,
                              int levels, int radial_order, int angular_order);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Worker count: HARDYLAB_WORKERS if set, else the hardware concurrency.
int worker_count();

/// Runs task(i) for i in [0, count) on worker_count() threads. Tasks must only
/// write to their own output slot.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

}  // namespace hardylab
