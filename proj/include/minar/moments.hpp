#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "minar/bivariate_poisson.hpp"
#include "minar/errors.hpp"
#include "minar/thinning.hpp"

namespace minar {

struct StationaryMoments {
  Eigen::VectorXd mu;
  Eigen::MatrixXd gamma0;
  bool converged = false;
  int iterations = 0;
  /// Max entrywise change of each fixed-point step.
  std::vector<double> step_changes;
};

struct FixedPointOptions {
  double tolerance = 1e-12;
  int max_iterations = 10000;
};

namespace detail {

inline void require_stationary(const ThinningMatrix& P) {
  const double rho = spectral_radius(P);
  if (!(rho < 1.0)) {
    throw StationarityError("spectral radius " + std::to_string(rho) + " >= 1: no stationary moments");
  }
}

inline void require_dim(const ThinningMatrix& P, Eigen::Index n, const char* what) {
  if (static_cast<Eigen::Index>(P.dim()) != n) throw DimensionError(std::string(what) + " dimension does not match P");
}

}  // namespace detail

/// mu = (I - P)^{-1} lambda.
inline Eigen::VectorXd stationary_mean(const ThinningMatrix& P, const Eigen::VectorXd& lambda) {
  detail::require_dim(P, lambda.size(), "innovation mean");
  detail::require_stationary(P);
  const auto d = static_cast<Eigen::Index>(P.dim());
  return (Eigen::MatrixXd::Identity(d, d) - P.matrix()).partialPivLu().solve(lambda);
}

/// gamma(0) as the fixed point of Z <- P Z P' + diag(V mu) + Lambda, started
/// from the identity. The step change contracts at rate spectral_radius(P)^2.
inline StationaryMoments stationary_cov(const ThinningMatrix& P, const Eigen::VectorXd& lambda,
                                        const Eigen::MatrixXd& Lambda, const FixedPointOptions& options = {}) {
  detail::require_dim(P, Lambda.rows(), "innovation covariance");
  if (Lambda.rows() != Lambda.cols()) throw DimensionError("innovation covariance must be square");
  if (!Lambda.isApprox(Lambda.transpose(), 1e-12)) throw DomainError("innovation covariance must be symmetric");
  StationaryMoments out;
  out.mu = stationary_mean(P, lambda);
  const Eigen::MatrixXd forcing =
      Eigen::MatrixXd((P.bernoulli_variances() * out.mu).asDiagonal()) + Lambda;
  const auto d = static_cast<Eigen::Index>(P.dim());
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(d, d);
  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::MatrixXd next = P.matrix() * z * P.matrix().transpose() + forcing;
    next = 0.5 * (next + next.transpose());
    const double change = (next - z).cwiseAbs().maxCoeff();
    out.step_changes.push_back(change);
    z = std::move(next);
    if (change < options.tolerance) {
      out.gamma0 = z;
      out.converged = true;
      out.iterations = it;
      return out;
    }
  }
  throw NumericalError("stationary covariance fixed point did not converge within " +
                       std::to_string(options.max_iterations) + " iterations");
}

inline StationaryMoments stationary_cov(const ThinningMatrix& P, const BivPoissonParams& innov,
                                        const FixedPointOptions& options = {}) {
  const auto m = bp_moments(innov);
  return stationary_cov(P, Eigen::VectorXd(m.mean), Eigen::MatrixXd(m.cov), options);
}

/// gamma(h) = cov(N_t, N_{t-h}) = P^h gamma(0).
inline Eigen::MatrixXd autocov(const Eigen::MatrixXd& gamma0, const ThinningMatrix& P, int h) {
  if (h < 0) throw DomainError("autocovariance lag must be >= 0");
  detail::require_dim(P, gamma0.rows(), "gamma(0)");
  Eigen::MatrixXd out = gamma0;
  for (int k = 0; k < h; ++k) out = P.matrix() * out;
  return out;
}

/// Contemporaneous, lag-1 auto and lag-1 cross correlations of a bivariate
/// stationary process.
struct CorrelationSummary {
  double contemporaneous = 0.0;  // cor(N1_t, N2_t)
  double auto1 = 0.0;            // cor(N1_t, N1_{t-1})
  double auto2 = 0.0;            // cor(N2_t, N2_{t-1})
  double cross12 = 0.0;          // cor(N1_t, N2_{t-1})
};

inline CorrelationSummary correlation_summary(const Eigen::MatrixXd& gamma0, const ThinningMatrix& P) {
  if (P.dim() != 2) throw DimensionError("correlation summary is defined for bivariate processes");
  const Eigen::MatrixXd g1 = autocov(gamma0, P, 1);
  const double scale = std::sqrt(gamma0(0, 0) * gamma0(1, 1));
  CorrelationSummary c;
  c.contemporaneous = gamma0(0, 1) / scale;
  c.auto1 = g1(0, 0) / gamma0(0, 0);
  c.auto2 = g1(1, 1) / gamma0(1, 1);
  c.cross12 = g1(0, 1) / scale;
  return c;
}

inline CorrelationSummary correlation_summary(const ThinningMatrix& P, const Eigen::VectorXd& lambda,
                                              const Eigen::MatrixXd& Lambda) {
  return correlation_summary(stationary_cov(P, lambda, Lambda).gamma0, P);
}

inline CorrelationSummary correlation_summary(const ThinningMatrix& P, const BivPoissonParams& innov) {
  return correlation_summary(stationary_cov(P, innov).gamma0, P);
}

}  // namespace minar
