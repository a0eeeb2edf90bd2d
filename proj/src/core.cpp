#include "hardylab/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hardylab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicatePoles: return "DuplicatePoles";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GammaOutOfRange: return "GammaOutOfRange";
    case ErrorCode::BadExponentM: return "BadExponentM";
    case ErrorCode::NonpositiveBeta: return "NonpositiveBeta";
    case ErrorCode::SinglePole: return "SinglePole";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AtPole: return "AtPole";
    case ErrorCode::NonIntegrableSingularity: return "NonIntegrableSingularity";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ZeroVMass: return "ZeroVMass";
    case ErrorCode::EpsilonInadmissible: return "EpsilonInadmissible";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::UnboundedSuspected: return "UnboundedSuspected";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

void validate_config(const PoleConfig& cfg, const WeightSpec& w) {
  if (cfg.dim < 3) {
    throw Error(ErrorCode::DimensionTooSmall,
                "dimension " + std::to_string(cfg.dim) + " < 3");
  }
  if (cfg.dim > kMaxDim) {
    throw Error(ErrorCode::InvalidArgument,
                "dimension " + std::to_string(cfg.dim) + " exceeds " + std::to_string(kMaxDim));
  }
  if (cfg.poles.empty()) {
    throw Error(ErrorCode::InvalidArgument, "at least one pole is required");
  }
  for (std::size_t i = 0; i < cfg.poles.size(); ++i) {
    const Vec& a = cfg.poles[i];
    if (a.size() != cfg.dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "pole " + std::to_string(i) + " has " + std::to_string(a.size()) +
                      " components, expected " + std::to_string(cfg.dim));
    }
    if (!a.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "pole " + std::to_string(i) + " is not finite");
    }
  }
  for (std::size_t i = 0; i < cfg.poles.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.poles.size(); ++j) {
      if ((cfg.poles[i] - cfg.poles[j]).squaredNorm() == 0.0) {
        throw Error(ErrorCode::DuplicatePoles,
                    "poles " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
    }
  }
  if (w.kind == WeightKind::PolyExp) {
    if (!std::isfinite(w.gamma) || w.gamma >= cfg.dim - 2) {
      std::ostringstream os;
      os << "gamma = " << w.gamma << " must satisfy gamma < N - 2 = " << cfg.dim - 2;
      throw Error(ErrorCode::GammaOutOfRange, os.str());
    }
    if (!std::isfinite(w.delta) || w.delta < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "delta must be finite and nonnegative");
    }
    if (!std::isfinite(w.m) || w.m > 2.0) {
      std::ostringstream os;
      os << "m = " << w.m << " must satisfy m <= 2";
      throw Error(ErrorCode::BadExponentM, os.str());
    }
  }
}

void validate_point(const DomainPoint& x, const PoleConfig& cfg) {
  if (x.size() != cfg.dim) {
    throw Error(ErrorCode::DimensionMismatch, "point dimension does not match configuration");
  }
  if (!x.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "point has non-finite components");
  }
}

HardyParams derive_params(const PoleConfig& cfg, double k_mu, double c_mu) {
  const double shift = cfg.dim + k_mu - 2.0;
  if (!(shift > 0.0)) {
    std::ostringstream os;
    os << "N + K_mu - 2 = " << shift << " must be positive";
    throw Error(ErrorCode::NonpositiveBeta, os.str());
  }
  const auto n = static_cast<double>(cfg.size());
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "no poles");
  HardyParams p;
  p.dim = cfg.dim;
  p.poles = static_cast<int>(cfg.size());
  p.k_mu = k_mu;
  p.c_mu = c_mu;
  p.beta = shift / n;
  p.c_n_mu = shift * shift / (n * n);
  p.c_nn_mu = shift * shift / (4.0 * n);
  return p;
}

double inverse_square_coefficient(int dim, int n, double k_mu, double beta) {
  return beta * (dim + k_mu - 2.0) - n * beta * beta;
}

double min_pole_gap(const PoleConfig& cfg) {
  if (cfg.size() < 2) {
    throw Error(ErrorCode::SinglePole, "pole gap is undefined for a single pole");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.size(); ++j) {
      best = std::min(best, (cfg.poles[i] - cfg.poles[j]).norm());
    }
  }
  return best / 2.0;
}

double enclosing_radius(const PoleConfig& cfg, double r0) {
  if (!(r0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "r0 must be positive");
  if (cfg.size() >= 2 && r0 > min_pole_gap(cfg)) {
    throw Error(ErrorCode::InvalidArgument, "r0 exceeds the minimal pole gap");
  }
  return max_pole_norm(cfg) + r0;
}

double max_pole_norm(const PoleConfig& cfg) {
  double m = 0.0;
  for (const Vec& a : cfg.poles) m = std::max(m, a.norm());
  return m;
}

Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Vec unit_vec(int dim, int axis, double scale) {
  Vec v = Vec::Zero(dim);
  v[axis] = scale;
  return v;
}

}  // namespace hardylab
