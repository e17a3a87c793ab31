#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "minar/count_series.hpp"
#include "minar/errors.hpp"
#include "minar/math.hpp"
#include "minar/random.hpp"

namespace minar {

/// Common-shock bivariate Poisson innovation (M1 + M0, M2 + M0) with
/// M1 ~ P(lambda1 - phi), M2 ~ P(lambda2 - phi), M0 ~ P(phi).
struct BivPoissonParams {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double phi = 0.0;

  void validate() const {
    if (!(lambda1 > 0.0) || !std::isfinite(lambda1)) throw DomainError("lambda1 must be finite and > 0");
    if (!(lambda2 > 0.0) || !std::isfinite(lambda2)) throw DomainError("lambda2 must be finite and > 0");
    if (!(phi >= 0.0 && phi <= std::min(lambda1, lambda2))) {
      throw DomainError("phi must lie in [0, min(lambda1, lambda2)]");
    }
  }

  friend bool operator==(const BivPoissonParams&, const BivPoissonParams&) = default;
};

/// log P(eps = (k1, k2)). The Kocherlakota series
///   e^{-(l1+l2-phi)} a^k1/k1! b^k2/k2! sum_i C(k1,i) C(k2,i) i! (phi/(a b))^i,
/// a = l1 - phi, b = l2 - phi, is summed in log space with each term
/// rewritten as a^(k1-i) b^(k2-i) phi^i so that a = 0 or b = 0 stays finite.
inline double bp_logpmf(Count k1, Count k2, const BivPoissonParams& params) {
  params.validate();
  if (k1 < 0 || k2 < 0) return kNegInf;
  const double a = params.lambda1 - params.phi;
  const double b = params.lambda2 - params.phi;
  const double base = -(params.lambda1 + params.lambda2 - params.phi) - log_factorial(k1) - log_factorial(k2);
  LogSum sum;
  const Count top = std::min(k1, k2);
  for (Count i = 0; i <= top; ++i) {
    if ((a == 0.0 && k1 - i > 0) || (b == 0.0 && k2 - i > 0) || (params.phi == 0.0 && i > 0)) continue;
    const double term = log_choose(k1, i) + log_choose(k2, i) + log_factorial(i) +
                        xlogy(static_cast<double>(k1 - i), a) + xlogy(static_cast<double>(k2 - i), b) +
                        xlogy(static_cast<double>(i), params.phi);
    sum.add(term);
  }
  return base + sum.value();
}

inline double bp_pmf(Count k1, Count k2, const BivPoissonParams& params) {
  return std::exp(bp_logpmf(k1, k2, params));
}

inline CountVector bp_sample(const BivPoissonParams& params, RandomSource& rng) {
  params.validate();
  const Count m1 = sample_poisson(params.lambda1 - params.phi, rng);
  const Count m2 = sample_poisson(params.lambda2 - params.phi, rng);
  const Count m0 = sample_poisson(params.phi, rng);
  return {m1 + m0, m2 + m0};
}

struct InnovationMoments {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};

/// lambda = (l1, l2) and Lambda = [[l1, phi], [phi, l2]].
inline InnovationMoments bp_moments(const BivPoissonParams& params) {
  params.validate();
  InnovationMoments m;
  m.mean << params.lambda1, params.lambda2;
  m.cov << params.lambda1, params.phi, params.phi, params.lambda2;
  return m;
}

/// Sampler callable for simulate_minar.
class BivPoissonSampler {
 public:
  explicit BivPoissonSampler(BivPoissonParams params) : params_(params) { params_.validate(); }
  CountVector operator()(RandomSource& rng) const { return bp_sample(params_, rng); }
  [[nodiscard]] const BivPoissonParams& params() const noexcept { return params_; }

 private:
  BivPoissonParams params_;
};

/// Independent Poisson innovations in any dimension.
class IndependentPoissonSampler {
 public:
  explicit IndependentPoissonSampler(std::vector<double> means) : means_(std::move(means)) {
    for (double m : means_) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("Poisson means must be finite and >= 0");
    }
  }
  CountVector operator()(RandomSource& rng) const {
    CountVector out(means_.size());
    for (std::size_t i = 0; i < means_.size(); ++i) out[i] = sample_poisson(means_[i], rng);
    return out;
  }

 private:
  std::vector<double> means_;
};

}  // namespace minar
