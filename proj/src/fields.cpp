#include "hardylab/fields.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <string>

namespace hardylab {
namespace {

// Per-pole scratch values; heap only for large pole sets.
class InvSquares {
 public:
  explicit InvSquares(std::size_t n) : n_(n) {
    if (n > small_.size()) large_.resize(n);
  }
  double& operator[](std::size_t i) { return n_ > small_.size() ? large_[i] : small_[i]; }
  double operator[](std::size_t i) const {
    return n_ > small_.size() ? large_[i] : small_[i];
  }

 private:
  std::size_t n_;
  std::array<double, 32> small_{};
  std::vector<double> large_;
};

[[noreturn]] void throw_at_pole(const DomainPoint& x, std::size_t i) {
  std::ostringstream os;
  os << "point (" << x.transpose() << ") is within the guard radius of pole " << i;
  throw Error(ErrorCode::AtPole, os.str());
}

// Fills inv[i] = 1/|x - a_i|^2; returns the index of a pole closer than the guard, or -1.
long fill_inverse_squares(const DomainPoint& x, const PoleConfig& cfg, double guard2,
                          InvSquares& inv) {
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const double r2 = (x - cfg.poles[i]).squaredNorm();
    if (!(r2 > guard2)) return static_cast<long>(i);
    inv[i] = 1.0 / r2;
  }
  return -1;
}

double pair_sum_v(const PoleConfig& cfg, const InvSquares& inv) {
  double v = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.size(); ++j) {
      v += (cfg.poles[i] - cfg.poles[j]).squaredNorm() * inv[i] * inv[j];
    }
  }
  return v;
}

bool weight_singular_at_poles(const WeightSpec& w) {
  return !w.is_unit() && (w.gamma != 0.0 || (w.delta > 0.0 && w.m < 0.0));
}

}  // namespace

double pole_guard(const PoleConfig& cfg) { return 1e-12 * (1.0 + max_pole_norm(cfg)); }

double weight_value(const DomainPoint& x, const PoleConfig& cfg, const WeightSpec& w) {
  validate_point(x, cfg);
  if (w.is_unit()) return 1.0;
  const double guard = pole_guard(cfg);
  double log_mu = 0.0;
  for (std::size_t j = 0; j < cfg.size(); ++j) {
    const double r2 = (x - cfg.poles[j]).squaredNorm();
    if (r2 <= guard * guard) {
      if (weight_singular_at_poles(w)) throw_at_pole(x, j);
      if (w.m == 0.0) log_mu -= w.delta;
      continue;
    }
    log_mu -= 0.5 * w.gamma * std::log(r2);
    if (w.delta != 0.0) log_mu -= w.delta * std::pow(r2, 0.5 * w.m);
  }
  return std::exp(log_mu);
}

Vec weight_log_grad(const DomainPoint& x, const PoleConfig& cfg, const WeightSpec& w) {
  validate_point(x, cfg);
  Vec g = Vec::Zero(cfg.dim);
  if (w.is_unit()) return g;
  const double guard2 = pole_guard(cfg) * pole_guard(cfg);
  for (std::size_t j = 0; j < cfg.size(); ++j) {
    const Vec d = x - cfg.poles[j];
    const double r2 = d.squaredNorm();
    if (!(r2 > guard2)) throw_at_pole(x, j);
    double coef = -w.gamma / r2;
    if (w.delta != 0.0) coef -= w.delta * w.m * std::pow(r2, 0.5 * w.m - 1.0);
    g += coef * d;
  }
  return g;
}

double potential_v(const DomainPoint& x, const PoleConfig& cfg) {
  validate_point(x, cfg);
  InvSquares inv(cfg.size());
  const double guard = pole_guard(cfg);
  if (long i = fill_inverse_squares(x, cfg, guard * guard, inv); i >= 0) {
    throw_at_pole(x, static_cast<std::size_t>(i));
  }
  return pair_sum_v(cfg, inv);
}

double potential_w(const DomainPoint& x, const PoleConfig& cfg, const WeightSpec& w,
                   const HardyParams& p) {
  return FieldKernel(cfg, w, p.k_mu, p.beta).evaluate(x).w();
}

HardyFactor hardy_factor(const DomainPoint& x, const PoleConfig& cfg, double beta) {
  validate_point(x, cfg);
  const double guard2 = pole_guard(cfg) * pole_guard(cfg);
  HardyFactor out;
  out.log_gradient = Vec::Zero(cfg.dim);
  double log_f = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const Vec d = x - cfg.poles[i];
    const double r2 = d.squaredNorm();
    if (!(r2 > guard2)) throw_at_pole(x, i);
    log_f -= 0.5 * beta * std::log(r2);
    out.log_gradient -= (beta / r2) * d;
  }
  out.value = std::exp(log_f);
  return out;
}

double laplacian_ratio(const DomainPoint& x, const PoleConfig& cfg, double beta) {
  validate_point(x, cfg);
  InvSquares inv(cfg.size());
  const double guard = pole_guard(cfg);
  if (long i = fill_inverse_squares(x, cfg, guard * guard, inv); i >= 0) {
    throw_at_pole(x, static_cast<std::size_t>(i));
  }
  const auto n = static_cast<double>(cfg.size());
  double inv_sum = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) inv_sum += inv[i];
  const double coef = n * beta * beta - beta * (cfg.dim - 2.0);
  return coef * inv_sum - beta * beta * pair_sum_v(cfg, inv);
}

Vec vector_field_f(const DomainPoint& x, const PoleConfig& cfg, const WeightSpec& w,
                   double beta) {
  const double mu = weight_value(x, cfg, w);
  const double guard2 = pole_guard(cfg) * pole_guard(cfg);
  Vec field = Vec::Zero(cfg.dim);
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const Vec d = x - cfg.poles[i];
    const double r2 = d.squaredNorm();
    if (!(r2 > guard2)) throw_at_pole(x, i);
    field += (beta / r2) * d;
  }
  return field * mu;
}

CrossTermGap cross_term_identity(const DomainPoint& x, const PoleConfig& cfg) {
  if (cfg.size() < 2) {
    throw Error(ErrorCode::SinglePole, "cross-term identity needs at least two poles");
  }
  validate_point(x, cfg);
  const double guard2 = pole_guard(cfg) * pole_guard(cfg);
  const std::size_t n = cfg.size();
  std::vector<Vec> d(n);
  std::vector<double> r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = x - cfg.poles[i];
    r2[i] = d[i].squaredNorm();
    if (!(r2[i] > guard2)) throw_at_pole(x, i);
  }
  CrossTermGap out;
  double inv_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    inv_sum += 1.0 / r2[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out.lhs += d[i].dot(d[j]) / (r2[i] * r2[j]);
    }
  }
  // V already carries the 1/2 of the symmetric double sum.
  out.rhs = (static_cast<double>(n) - 1.0) * inv_sum - potential_v(x, cfg);
  return out;
}

double cross_term_identity_gap(const DomainPoint& x, const PoleConfig& cfg) {
  return cross_term_identity(x, cfg).gap();
}

double PointFields::w() const { return -beta * bracket_sum; }

FieldKernel::FieldKernel(PoleConfig cfg, WeightSpec w, double k_mu, double beta)
    : cfg_(std::move(cfg)), w_(w), k_mu_(k_mu), beta_(beta) {
  const double guard = pole_guard(cfg_);
  guard2_ = guard * guard;
  const std::size_t n = cfg_.size();
  pair_dist2_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pair_dist2_[i * n + j] = (cfg_.poles[i] - cfg_.poles[j]).squaredNorm();
    }
  }
}

template <class Diff>
bool FieldKernel::fill(const Diff& diff, PointFields& out) const {
  const std::size_t n = cfg_.size();
  const int dim = cfg_.dim;
  InvSquares inv(n);
  InvSquares self_proj(n);  // (x - a_j) . (coef_j (x - a_j)), formed without cancellation
  InvSquares coef(n);
  out.beta = beta_;
  out.log_grad_mu = Vec::Zero(dim);
  out.log_grad_f = Vec::Zero(dim);
  double log_mu = 0.0;
  double sum_log_r2 = 0.0;
  out.inv_square_sum = 0.0;
  const bool poly = !w_.is_unit();
  double bracket = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Vec d = diff(j);
    const double r2 = d.squaredNorm();
    if (!(r2 > 0.0) || !std::isfinite(r2)) return false;
    inv[j] = 1.0 / r2;
    const double log_r2 = std::log(r2);
    sum_log_r2 += log_r2;
    out.inv_square_sum += inv[j];
    out.log_grad_f -= (beta_ * inv[j]) * d;
    if (poly) {
      log_mu -= 0.5 * w_.gamma * log_r2;
      coef[j] = -w_.gamma * inv[j];
      self_proj[j] = -w_.gamma;
      if (w_.delta != 0.0) {
        const double rm = std::exp(0.5 * w_.m * log_r2);
        log_mu -= w_.delta * rm;
        coef[j] -= w_.delta * w_.m * rm * inv[j];
        self_proj[j] -= w_.delta * w_.m * rm;
      }
      out.log_grad_mu += coef[j] * d;
    }
  }
  out.mu = poly ? std::exp(log_mu) : 1.0;
  out.log_f = -0.5 * beta_ * sum_log_r2;

  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) v += pair_dist2_[i * n + j] * inv[i] * inv[j];
  }
  out.v = v;

  for (std::size_t i = 0; i < n; ++i) {
    double proj = 0.0;
    if (poly) {
      const Vec di = diff(i);
      proj = self_proj[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) proj += coef[j] * di.dot(diff(j));
      }
    }
    bracket += inv[i] * (proj - k_mu_);
  }
  out.bracket_sum = bracket;
  return true;
}

bool FieldKernel::try_evaluate(const DomainPoint& x, PointFields& out) const {
  for (const Vec& a : cfg_.poles) {
    if (!((x - a).squaredNorm() > guard2_)) return false;
  }
  return fill([&](std::size_t j) -> Vec { return x - cfg_.poles[j]; }, out);
}

bool FieldKernel::try_evaluate_near(std::size_t pole, const Vec& offset,
                                    PointFields& out) const {
  if (pole >= cfg_.size()) return false;
  return fill(
      [&](std::size_t j) -> Vec {
        if (j == pole) return offset;
        return (cfg_.poles[pole] - cfg_.poles[j]) + offset;
      },
      out);
}

PointFields FieldKernel::evaluate_near(std::size_t pole, const Vec& offset) const {
  if (pole >= cfg_.size()) throw Error(ErrorCode::InvalidArgument, "pole index out of range");
  if (offset.size() != cfg_.dim) {
    throw Error(ErrorCode::DimensionMismatch, "offset has the wrong dimension");
  }
  PointFields out;
  if (!try_evaluate_near(pole, offset, out)) {
    throw Error(ErrorCode::AtPole, "offset " + std::to_string(offset.norm()) +
                                       " from pole " + std::to_string(pole) +
                                       " is not resolvable");
  }
  return out;
}

PointFields FieldKernel::evaluate(const DomainPoint& x) const {
  validate_point(x, cfg_);
  PointFields out;
  if (!try_evaluate(x, out)) {
    for (std::size_t i = 0; i < cfg_.size(); ++i) {
      if (!((x - cfg_.poles[i]).squaredNorm() > guard2_)) throw_at_pole(x, i);
    }
  }
  return out;
}

}  // namespace hardylab
