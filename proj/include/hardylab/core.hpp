#pragma once

// Pole configurations, weights and the constants of the weighted multipolar
// Hardy inequality
//
//   c * \int V phi^2 dmu <= \int |grad phi|^2 dmu + \int W phi^2 dmu,
//
// with beta = (N + K - 2)/n and c = (N + K - 2)^2 / n^2.

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardylab {

inline constexpr int kMaxDim = 8;

/// Point or vector in R^N, N <= kMaxDim. Stack allocated.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using DomainPoint = Vec;

enum class ErrorCode {
  DuplicatePoles,
  DimensionTooSmall,
  DimensionMismatch,
  GammaOutOfRange,
  BadExponentM,
  NonpositiveBeta,
  SinglePole,
  InvalidArgument,
  AtPole,
  NonIntegrableSingularity,
  BudgetExceeded,
  ZeroVMass,
  EpsilonInadmissible,
  SingularGram,
  UnboundedSuspected,
  ConfigError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct PoleConfig {
  int dim = 3;
  std::vector<Vec> poles;

  std::size_t size() const { return poles.size(); }
};

enum class WeightKind { Unit, PolyExp };

/// mu(x) = prod_i |x - a_i|^-gamma * exp(-delta * sum_j |x - a_j|^m), or mu = 1.
struct WeightSpec {
  WeightKind kind = WeightKind::Unit;
  double gamma = 0.0;
  double delta = 0.0;
  double m = 2.0;

  static WeightSpec unit() { return {}; }
  static WeightSpec poly_exp(double gamma, double delta, double m) {
    return {WeightKind::PolyExp, gamma, delta, m};
  }
  bool is_unit() const { return kind == WeightKind::Unit; }
  /// Exponent p such that mu ~ |x - a_i|^-p near every pole.
  double pole_exponent() const { return is_unit() ? 0.0 : gamma; }
};

struct HardyParams {
  int dim = 3;
  int poles = 1;
  double k_mu = 0.0;
  double c_mu = 0.0;
  double beta = 0.0;
  double c_n_mu = 0.0;   // (N + K - 2)^2 / n^2
  double c_nn_mu = 0.0;  // (N + K - 2)^2 / (4 n)
};

/// Throws Error naming the first violated invariant.
void validate_config(const PoleConfig& cfg, const WeightSpec& w);
void validate_point(const DomainPoint& x, const PoleConfig& cfg);

HardyParams derive_params(const PoleConfig& cfg, double k_mu, double c_mu);

/// Coefficient beta(N + K - 2) - n beta^2 of sum_i |x - a_i|^-2 in the general-beta identity.
double inverse_square_coefficient(int dim, int n, double k_mu, double beta);

/// min_{i<j} |a_i - a_j| / 2.
double min_pole_gap(const PoleConfig& cfg);

/// Smallest R with |a_i| + r0 <= R for every pole.
double enclosing_radius(const PoleConfig& cfg, double r0);

double max_pole_norm(const PoleConfig& cfg);

Vec make_vec(std::initializer_list<double> values);
Vec unit_vec(int dim, int axis, double scale = 1.0);

}  // namespace hardylab
