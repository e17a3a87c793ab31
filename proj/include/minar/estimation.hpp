#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "minar/bivariate_poisson.hpp"
#include "minar/count_series.hpp"
#include "minar/errors.hpp"
#include "minar/likelihood.hpp"
#include "minar/optimize.hpp"
#include "minar/thinning.hpp"

namespace minar {

/// Canonical parameter order: p11, p12, p21, p22, lambda1, lambda2, phi.
inline constexpr std::size_t kParamCount = 7;
using ParamVector = std::array<double, kParamCount>;
inline constexpr std::array<const char*, kParamCount> kParamNames{"p11", "p12", "p21", "p22",
                                                                  "lambda1", "lambda2", "phi"};
inline constexpr double kPhiSlack = 1e-12;
inline constexpr double kRestrictedStart = 1e-12;
inline constexpr std::size_t kMinFitLength = 30;

enum class Rung { IndependentPoisson, DependentPoisson, IndependentInar, DiagonalBinar, FullBinar };

/// Which entries of P and whether phi are free; lambda1 and lambda2 are
/// always free.
struct ModelSpec {
  std::string name;
  std::array<bool, 4> free_p{};
  bool free_phi = false;

  [[nodiscard]] bool is_free(std::size_t k) const {
    if (k < 4) return free_p[k];
    if (k < 6) return true;
    return free_phi;
  }
  [[nodiscard]] int free_count() const {
    int n = 0;
    for (std::size_t k = 0; k < kParamCount; ++k) n += is_free(k);
    return n;
  }
  /// True when every free parameter of *this is also free in `other`.
  [[nodiscard]] bool nested_in(const ModelSpec& other) const {
    for (std::size_t k = 0; k < kParamCount; ++k) {
      if (is_free(k) && !other.is_free(k)) return false;
    }
    return true;
  }
  bool operator==(const ModelSpec& o) const { return free_p == o.free_p && free_phi == o.free_phi; }
};

inline ModelSpec model_spec(Rung rung) {
  switch (rung) {
    case Rung::IndependentPoisson:
      return {"independent-poisson", {false, false, false, false}, false};
    case Rung::DependentPoisson:
      return {"dependent-poisson", {false, false, false, false}, true};
    case Rung::IndependentInar:
      return {"independent-inar", {true, false, false, true}, false};
    case Rung::DiagonalBinar:
      return {"diagonal-binar", {true, false, false, true}, true};
    case Rung::FullBinar:
      return {"full-binar", {true, true, true, true}, true};
  }
  throw UsageError("unknown rung");
}

inline const std::array<Rung, 5> kLadder{Rung::IndependentPoisson, Rung::DependentPoisson, Rung::IndependentInar,
                                         Rung::DiagonalBinar, Rung::FullBinar};

inline Rung parse_rung(const std::string& name) {
  for (Rung r : kLadder) {
    if (model_spec(r).name == name) return r;
  }
  throw UsageError("unknown model '" + name + "'");
}

inline ParamVector to_params(const ThinningMatrix& P, const BivPoissonParams& innov) {
  if (P.dim() != 2) throw DimensionError("bivariate parameters need a 2x2 thinning matrix");
  return {P(0, 0), P(0, 1), P(1, 0), P(1, 1), innov.lambda1, innov.lambda2, innov.phi};
}

inline ThinningMatrix params_matrix(const ParamVector& t) { return ThinningMatrix{{t[0], t[1]}, {t[2], t[3]}}; }
inline BivPoissonParams params_innov(const ParamVector& t) { return {t[4], t[5], t[6]}; }

namespace detail {

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double phi_cap(double l1, double l2) { return std::min(l1, l2) * (1.0 - kPhiSlack); }

}  // namespace detail

/// Maps the free natural parameters of `spec` to unconstrained reals: logit
/// for p, log for lambda, a logit of phi / (min(lambda) (1 - 1e-12)) for phi.
inline Eigen::VectorXd to_unconstrained(const ParamVector& theta, const ModelSpec& spec) {
  Eigen::VectorXd z(spec.free_count());
  Eigen::Index i = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (spec.free_p[k]) z(i++) = detail::logit(theta[k]);
  }
  z(i++) = std::log(theta[4]);
  z(i++) = std::log(theta[5]);
  if (spec.free_phi) z(i++) = detail::logit(theta[6] / detail::phi_cap(theta[4], theta[5]));
  return z;
}

/// Inverse of to_unconstrained; restricted parameters are zero.
inline ParamVector from_unconstrained(const Eigen::VectorXd& z, const ModelSpec& spec) {
  if (z.size() != spec.free_count()) throw DimensionError("unconstrained vector does not match the model");
  ParamVector t{};
  Eigen::Index i = 0;
  for (std::size_t k = 0; k < 4; ++k) t[k] = spec.free_p[k] ? detail::logistic(z(i++)) : 0.0;
  t[4] = std::exp(z(i++));
  t[5] = std::exp(z(i++));
  t[6] = spec.free_phi ? detail::phi_cap(t[4], t[5]) * detail::logistic(z(i++)) : 0.0;
  return t;
}

/// Domain check on the natural scale, restricted entries included.
inline bool params_valid(const ParamVector& t, const ModelSpec& spec) {
  for (std::size_t k = 0; k < kParamCount; ++k) {
    if (!std::isfinite(t[k])) return false;
    if (!spec.is_free(k) && t[k] != 0.0) return false;
  }
  for (std::size_t k = 0; k < 4; ++k) {
    if (t[k] < 0.0 || t[k] > 1.0) return false;
  }
  if (!(t[4] > 0.0) || !(t[5] > 0.0)) return false;
  return t[6] >= 0.0 && t[6] <= std::min(t[4], t[5]);
}

/// Method-of-moments start for `spec`.
inline ParamVector moment_start(const CountSeries& series, const ModelSpec& spec) {
  const std::size_t n = series.size();
  std::array<double, 2> mean{}, var{}, acf{};
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t t = 0; t < n; ++t) mean[j] += static_cast<double>(series(t, j));
    mean[j] /= static_cast<double>(n);
    double lag = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double d = static_cast<double>(series(t, j)) - mean[j];
      var[j] += d * d;
      if (t > 0) lag += d * (static_cast<double>(series(t - 1, j)) - mean[j]);
    }
    acf[j] = var[j] > 0.0 ? lag / var[j] : 0.0;
  }
  ParamVector t{};
  t[0] = spec.free_p[0] ? std::clamp(acf[0], 0.01, 0.9) : 0.0;
  t[1] = spec.free_p[1] ? 0.01 : 0.0;
  t[2] = spec.free_p[2] ? 0.01 : 0.0;
  t[3] = spec.free_p[3] ? std::clamp(acf[1], 0.01, 0.9) : 0.0;
  t[4] = std::max(mean[0] - t[0] * mean[0] - t[1] * mean[1], 0.1 * mean[0]);
  t[5] = std::max(mean[1] - t[2] * mean[0] - t[3] * mean[1], 0.1 * mean[1]);
  if (spec.free_phi) {
    // Cross-covariance of the lag-1 residuals N_t - P N_{t-1}.
    std::vector<double> e1, e2;
    for (std::size_t s = 1; s < n; ++s) {
      e1.push_back(static_cast<double>(series(s, 0)) - t[0] * static_cast<double>(series(s - 1, 0)) -
                   t[1] * static_cast<double>(series(s - 1, 1)));
      e2.push_back(static_cast<double>(series(s, 1)) - t[2] * static_cast<double>(series(s - 1, 0)) -
                   t[3] * static_cast<double>(series(s - 1, 1)));
    }
    double m1 = 0.0, m2 = 0.0, c = 0.0;
    for (std::size_t s = 0; s < e1.size(); ++s) {
      m1 += e1[s];
      m2 += e2[s];
    }
    m1 /= static_cast<double>(e1.size());
    m2 /= static_cast<double>(e2.size());
    for (std::size_t s = 0; s < e1.size(); ++s) c += (e1[s] - m1) * (e2[s] - m2);
    c /= static_cast<double>(e1.size());
    const double cap = std::min(t[4], t[5]);
    t[6] = std::clamp(c, 0.001 * cap, 0.9 * cap);
  }
  return t;
}

/// Lifts an estimate of a nested model into `spec`, setting newly freed
/// parameters to a small positive value.
inline ParamVector embed_params(ParamVector t, const ModelSpec& spec) {
  for (std::size_t k = 0; k < 4; ++k) {
    if (spec.free_p[k]) {
      t[k] = std::clamp(t[k], kRestrictedStart, 1.0 - 1e-9);
    } else {
      t[k] = 0.0;
    }
  }
  if (spec.free_phi) {
    t[6] = std::clamp(t[6], kRestrictedStart * std::min(t[4], t[5]), detail::phi_cap(t[4], t[5]) * (1.0 - 1e-9));
  } else {
    t[6] = 0.0;
  }
  return t;
}

inline std::uint64_t series_fingerprint(const CountSeries& series) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(series.dim());
  for (Count c : series.data()) mix(static_cast<std::uint64_t>(c));
  return h;
}

enum class OptimizerMethod { NelderMead, Bfgs };

struct FitOptions {
  OptimizerMethod method = OptimizerMethod::NelderMead;
  OptimizerOptions optimizer;
  /// Extra natural-scale starting points; each is embedded into the model.
  std::vector<ParamVector> starts;
  bool moment_start = true;
  bool std_errors = true;
  double fd_step = 1e-4;
  double boundary_tolerance = 1e-6;
};

struct FitResult {
  ModelSpec model;
  ParamVector params{};
  double loglik = -std::numeric_limits<double>::infinity();
  /// NaN for restricted parameters or when the information matrix is not
  /// invertible there.
  ParamVector std_errors{};
  std::array<bool, kParamCount> at_boundary{};
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  std::size_t transitions = 0;
  std::uint64_t data_fingerprint = 0;

  [[nodiscard]] ThinningMatrix P() const { return params_matrix(params); }
  [[nodiscard]] BivPoissonParams innov() const { return params_innov(params); }
  [[nodiscard]] bool any_boundary() const {
    return std::any_of(at_boundary.begin(), at_boundary.end(), [](bool b) { return b; });
  }
};

namespace detail {

inline double loglik_at(const TransitionLikelihood& lik, const ParamVector& t, const ModelSpec& spec) {
  if (!params_valid(t, spec)) return -std::numeric_limits<double>::infinity();
  try {
    const double v = lik(params_matrix(t), params_innov(t));
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  } catch (const DomainError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

inline void require_fit_data(const CountSeries& series) {
  if (series.dim() != 2) throw DimensionError("fitting needs a bivariate series");
  if (series.size() < kMinFitLength) {
    throw EstimationError("fitting needs at least " + std::to_string(kMinFitLength) + " observations, got " +
                          std::to_string(series.size()));
  }
  for (std::size_t j = 0; j < 2; ++j) {
    bool any = false;
    for (std::size_t t = 0; t < series.size() && !any; ++t) any = series(t, j) > 0;
    if (!any) throw EstimationError("series " + std::to_string(j + 1) + " is identically zero");
  }
}

/// Observed information on the natural scale by finite differences of the
/// log-likelihood; one-sided stencils where a central step leaves the domain.
inline Eigen::MatrixXd observed_information(const TransitionLikelihood& lik, const ParamVector& theta,
                                            const ModelSpec& spec, double h) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < kParamCount; ++k) {
    if (spec.is_free(k)) idx.push_back(k);
  }
  const auto m = idx.size();
  // Per-parameter stencil offsets (lo, hi) in units of h.
  std::vector<std::pair<double, double>> off(m);
  for (std::size_t a = 0; a < m; ++a) {
    ParamVector lo = theta, hi = theta;
    lo[idx[a]] -= h;
    hi[idx[a]] += h;
    const bool lo_ok = params_valid(lo, spec), hi_ok = params_valid(hi, spec);
    off[a] = lo_ok && hi_ok ? std::pair{-1.0, 1.0} : (hi_ok ? std::pair{0.0, 1.0} : std::pair{-1.0, 0.0});
  }
  auto at = [&](std::size_t a, double da, std::size_t b, double db) {
    ParamVector t = theta;
    t[idx[a]] += da * h;
    t[idx[b]] += db * h;
    return loglik_at(lik, t, spec);
  };
  const double f0 = loglik_at(lik, theta, spec);
  Eigen::MatrixXd H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a) {
    const auto [lo, hi] = off[a];
    double d2;
    if (lo < 0 && hi > 0) {
      d2 = (at(a, 1, a, 0) - 2 * f0 + at(a, -1, a, 0)) / (h * h);
    } else if (hi > 0) {
      d2 = (at(a, 2, a, 0) - 2 * at(a, 1, a, 0) + f0) / (h * h);
    } else {
      d2 = (at(a, -2, a, 0) - 2 * at(a, -1, a, 0) + f0) / (h * h);
    }
    H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = d2;
    for (std::size_t b = 0; b < a; ++b) {
      const auto [blo, bhi] = off[b];
      const double v = (at(a, hi, b, bhi) - at(a, hi, b, blo) - at(a, lo, b, bhi) + at(a, lo, b, blo)) /
                       ((hi - lo) * h * (bhi - blo) * h);
      H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      H(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  return -H;
}

}  // namespace detail

/// Conditional maximum likelihood for one model of the ladder. The optimum
/// over all starting points (method of moments plus options.starts) is kept.
inline FitResult fit_cmle(const CountSeries& series, const ModelSpec& spec, const FitOptions& options = {}) {
  detail::require_fit_data(series);
  const TransitionLikelihood lik(series);
  std::vector<ParamVector> starts;
  if (options.moment_start || options.starts.empty()) starts.push_back(moment_start(series, spec));
  for (const auto& s : options.starts) starts.push_back(embed_params(s, spec));

  const Objective objective = [&](const Eigen::VectorXd& z) {
    return -detail::loglik_at(lik, from_unconstrained(z, spec), spec);
  };
  FitResult best;
  best.model = spec;
  bool have = false;
  for (const auto& s : starts) {
    const Eigen::VectorXd z0 = to_unconstrained(s, spec);
    const OptimizerResult r = options.method == OptimizerMethod::NelderMead ? nelder_mead(objective, z0, options.optimizer)
                                                                            : bfgs(objective, z0, options.optimizer);
    best.evaluations += r.evaluations;
    best.iterations += r.iterations;
    if (!have || -r.value > best.loglik) {
      best.params = from_unconstrained(r.x, spec);
      best.loglik = -r.value;
      best.converged = r.converged;
      have = true;
    }
  }
  best.transitions = lik.transitions();
  best.data_fingerprint = series_fingerprint(series);
  if (!std::isfinite(best.loglik)) throw EstimationError("no starting point has finite likelihood");

  const auto& t = best.params;
  const double tol = options.boundary_tolerance;
  for (std::size_t k = 0; k < 4; ++k) {
    best.at_boundary[k] = spec.free_p[k] && (t[k] < tol || t[k] > 1.0 - tol);
  }
  best.at_boundary[6] = spec.free_phi && (t[6] < tol || t[6] > std::min(t[4], t[5]) - tol);

  best.std_errors.fill(std::numeric_limits<double>::quiet_NaN());
  if (options.std_errors) {
    const Eigen::MatrixXd info = detail::observed_information(lik, t, spec, options.fd_step);
    if (info.allFinite()) {
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
      if (lu.isInvertible()) {
        const Eigen::MatrixXd cov = lu.inverse();
        Eigen::Index i = 0;
        for (std::size_t k = 0; k < kParamCount; ++k) {
          if (!spec.is_free(k)) continue;
          const double v = cov(i, i);
          best.std_errors[k] = v > 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
          ++i;
        }
      }
    }
  }
  return best;
}

inline FitResult fit_cmle(const CountSeries& series, Rung rung, const FitOptions& options = {}) {
  return fit_cmle(series, model_spec(rung), options);
}

/// Fits several models on one series in increasing size, warm-starting each
/// from every already fitted model nested in it, so the log-likelihood never
/// decreases along a nesting chain. Results follow the order of `specs`.
inline std::vector<FitResult> fit_nested(const CountSeries& series, const std::vector<ModelSpec>& specs,
                                         const FitOptions& options = {}) {
  std::vector<std::size_t> order(specs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return specs[a].free_count() < specs[b].free_count(); });
  std::vector<std::optional<FitResult>> fits(specs.size());
  for (std::size_t i : order) {
    FitOptions o = options;
    for (std::size_t j = 0; j < specs.size(); ++j) {
      if (fits[j] && specs[j].nested_in(specs[i])) o.starts.push_back(fits[j]->params);
    }
    fits[i] = fit_cmle(series, specs[i], o);
  }
  std::vector<FitResult> out;
  for (auto& f : fits) out.push_back(std::move(*f));
  return out;
}

inline std::vector<FitResult> fit_ladder(const CountSeries& series, const FitOptions& options = {}) {
  std::vector<ModelSpec> specs;
  for (Rung r : kLadder) specs.push_back(model_spec(r));
  return fit_nested(series, specs, options);
}

}  // namespace minar
