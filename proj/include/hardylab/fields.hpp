#pragma once

// Closed-form pointwise kernels: the weight mu and its log-gradient, the
// multipolar potential V, the weight correction W, the Hardy factor
// f = prod_i |x - a_i|^-beta with its log-gradient and Laplacian ratio, and
// the vector field F = -(grad f / f) mu.
//
// Every kernel refuses to evaluate within pole_guard(cfg) of a pole
// (ErrorCode::AtPole) instead of returning huge or infinite values.

#include "hardylab/core.hpp"

namespace hardylab {

struct FieldEval {
  double value = 0.0;
  Vec gradient;
};

/// f(x) and grad f / f.
struct HardyFactor {
  double value = 0.0;
  Vec log_gradient;
};

double pole_guard(const PoleConfig& cfg);

double weight_value(const DomainPoint& x, const PoleConfig& cfg, const WeightSpec& w);
Vec weight_log_grad(const DomainPoint& x, const PoleConfig& cfg, const WeightSpec& w);

/// V(x) = 1/2 sum_{i != j} |a_i - a_j|^2 / (|x - a_i|^2 |x - a_j|^2).
double potential_v(const DomainPoint& x, const PoleConfig& cfg);

/// W(x) = -sum_i beta/|x - a_i|^2 [(x - a_i) . grad mu/mu - K_mu].
double potential_w(const DomainPoint& x, const PoleConfig& cfg, const WeightSpec& w,
                   const HardyParams& p);

HardyFactor hardy_factor(const DomainPoint& x, const PoleConfig& cfg, double beta);

/// Delta f / f = sum_i (n beta^2 - beta (N - 2)) / |x - a_i|^2 - beta^2 V.
double laplacian_ratio(const DomainPoint& x, const PoleConfig& cfg, double beta);

Vec vector_field_f(const DomainPoint& x, const PoleConfig& cfg, const WeightSpec& w,
                   double beta);

/// LHS - RHS of
///   sum_{i != j} (x-a_i).(x-a_j) / (|x-a_i|^2 |x-a_j|^2)
///     = (n - 1) sum_i |x-a_i|^-2 - V.
struct CrossTermGap {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap() const { return lhs - rhs; }
};
CrossTermGap cross_term_identity(const DomainPoint& x, const PoleConfig& cfg);
double cross_term_identity_gap(const DomainPoint& x, const PoleConfig& cfg);

/// Everything the energy integrands need at one point, from a single pass over the poles.
struct PointFields {
  double mu = 1.0;
  Vec log_grad_mu;
  double log_f = 0.0;     // log f for the kernel's beta
  Vec log_grad_f;         // grad f / f
  double v = 0.0;
  double inv_square_sum = 0.0;  // sum_i |x - a_i|^-2
  double bracket_sum = 0.0;     // sum_i |x - a_i|^-2 [(x - a_i) . grad mu/mu - K_mu]
  double w() const;             // -beta * bracket_sum
  double beta = 0.0;
};

/// Reusable evaluator bound to one (cfg, w, K_mu, beta). Cheap to copy.
class FieldKernel {
 public:
  FieldKernel(PoleConfig cfg, WeightSpec w, double k_mu, double beta);

  PointFields evaluate(const DomainPoint& x) const;
  /// Same as evaluate() but returns false instead of throwing when x is at a pole.
  bool try_evaluate(const DomainPoint& x, PointFields& out) const;

  /// Evaluation at a_pole + offset with every distance formed from the offset, so
  /// offsets far below the rounding scale of the absolute coordinates stay exact.
  PointFields evaluate_near(std::size_t pole, const Vec& offset) const;
  bool try_evaluate_near(std::size_t pole, const Vec& offset, PointFields& out) const;

  const PoleConfig& config() const { return cfg_; }
  const WeightSpec& weight() const { return w_; }
  double beta() const { return beta_; }
  double k_mu() const { return k_mu_; }

 private:
  PoleConfig cfg_;
  WeightSpec w_;
  double k_mu_;
  double beta_;
  template <class Diff>
  bool fill(const Diff& diff, PointFields& out) const;

  double guard2_;
  std::vector<double> pair_dist2_;  // row-major n x n
};

}  // namespace hardylab
