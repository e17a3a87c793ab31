#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "minar/count_series.hpp"
#include "minar/errors.hpp"
#include "minar/random.hpp"

namespace minar {

/// Square matrix of survival probabilities p_ij; row i collects the
/// survivors feeding component i from each component j.
class ThinningMatrix {
 public:
  ThinningMatrix() : ThinningMatrix(Eigen::MatrixXd::Zero(1, 1)) {}

  explicit ThinningMatrix(Eigen::MatrixXd entries) : p_(std::move(entries)) {
    if (p_.rows() == 0 || p_.rows() != p_.cols()) throw DimensionError("thinning matrix must be square, d >= 1");
    for (Eigen::Index i = 0; i < p_.rows(); ++i) {
      for (Eigen::Index j = 0; j < p_.cols(); ++j) {
        const double v = p_(i, j);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw DomainError("thinning probability p(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                            ") outside [0,1]");
        }
      }
    }
  }

  ThinningMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : ThinningMatrix(from_rows(rows)) {}

  static ThinningMatrix zeros(std::size_t d) {
    return ThinningMatrix(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  }
  static ThinningMatrix diagonal(std::span<const double> diag) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(diag.size()),
                                              static_cast<Eigen::Index>(diag.size()));
    for (std::size_t i = 0; i < diag.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
    return ThinningMatrix(m);
  }

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(p_.rows()); }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
    return p_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return p_; }

  /// Entries p_ij (1 - p_ij): the per-unit Bernoulli variances.
  [[nodiscard]] Eigen::MatrixXd bernoulli_variances() const { return p_.cwiseProduct((1.0 - p_.array()).matrix()); }

  [[nodiscard]] bool is_diagonal() const {
    for (Eigen::Index i = 0; i < p_.rows(); ++i) {
      for (Eigen::Index j = 0; j < p_.cols(); ++j) {
        if (i != j && p_(i, j) != 0.0) return false;
      }
    }
    return true;
  }

  friend bool operator==(const ThinningMatrix& a, const ThinningMatrix& b) { return a.p_ == b.p_; }

 private:
  static Eigen::MatrixXd from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const auto d = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(d, d);
    Eigen::Index i = 0;
    for (const auto& r : rows) {
      if (static_cast<Eigen::Index>(r.size()) != d) throw DimensionError("thinning matrix must be square");
      Eigen::Index j = 0;
      for (double v : r) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  Eigen::MatrixXd p_;
};

/// p o n: number of survivors among n independent Bernoulli(p) trials.
inline Count binomial_thin(double p, Count n, RandomSource& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("thinning probability outside [0,1]");
  if (n < 0) throw DomainError("cannot thin a negative count");
  return sample_binomial(n, p, rng);
}

/// [P o N]_i = sum_j p_ij o N_j with all d*d thinnings independent.
inline CountVector matrix_thin(const ThinningMatrix& P, std::span<const Count> n, RandomSource& rng) {
  if (n.size() != P.dim()) throw DimensionError("count vector dimension does not match thinning matrix");
  CountVector out(P.dim(), 0);
  for (std::size_t i = 0; i < P.dim(); ++i) {
    for (std::size_t j = 0; j < P.dim(); ++j) out[i] += binomial_thin(P(i, j), n[j], rng);
  }
  return out;
}

/// Largest eigenvalue modulus. Closed form for d <= 2; power iteration on
/// the shifted matrix P + I otherwise, with an eigen-solver fallback when
/// the iteration stalls.
inline double spectral_radius(const ThinningMatrix& P) {
  const auto& m = P.matrix();
  if (P.dim() == 1) return std::abs(m(0, 0));
  if (P.dim() == 2) {
    const double tr = m(0, 0) + m(1, 1);
    const double disc = (m(0, 0) - m(1, 1)) * (m(0, 0) - m(1, 1)) + 4.0 * m(0, 1) * m(1, 0);
    // Nonnegative entries keep the discriminant >= 0.
    return 0.5 * (std::abs(tr) + std::sqrt(std::max(disc, 0.0)));
  }
  const auto d = m.rows();
  const Eigen::MatrixXd shifted = m + Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));
  double estimate = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd w = shifted * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = v.dot(shifted * v);
    if (it > 0 && std::abs(next - estimate) < 1e-12 && (w - v).norm() < 1e-9) return next - 1.0;
    estimate = next;
    v = w;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// N_t = P o N_{t-1} + eps_t for `steps` steps after N0. The sampler is any
/// callable RandomSource& -> CountVector.
template <class InnovationSampler>
CountSeries simulate_minar(const ThinningMatrix& P, InnovationSampler&& sampler, std::span<const Count> n0,
                           std::size_t steps, RandomSource& rng) {
  if (n0.size() != P.dim()) throw DimensionError("initial count vector dimension does not match P");
  std::vector<Count> data;
  data.reserve((steps + 1) * P.dim());
  for (Count c : n0) {
    if (c < 0) throw DomainError("initial counts must be nonnegative");
  }
  data.insert(data.end(), n0.begin(), n0.end());
  CountVector current(n0.begin(), n0.end());
  for (std::size_t t = 0; t < steps; ++t) {
    CountVector next = matrix_thin(P, current, rng);
    const CountVector eps = sampler(rng);
    if (eps.size() != P.dim()) throw DimensionError("innovation dimension does not match P");
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += eps[i];
    data.insert(data.end(), next.begin(), next.end());
    current = std::move(next);
  }
  return CountSeries(P.dim(), std::move(data));
}

/// Smallest H with ||P^H||_inf below `tol`. Requires a stationary P.
inline std::size_t inma_truncation(const ThinningMatrix& P, double tol = 1e-8) {
  if (spectral_radius(P) >= 1.0) throw StationarityError("moving-average representation needs spectral radius < 1");
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(P.matrix().rows(), P.matrix().cols());
  for (std::size_t h = 0; h < 100000; ++h) {
    if (power.cwiseAbs().rowwise().sum().maxCoeff() < tol) return h;
    power = power * P.matrix();
  }
  throw NumericalError("moving-average truncation did not reach tolerance");
}

/// Draws `steps` rows from the truncated moving-average representation
/// N_t = sum_{h<=H} P^h o eps_{t-h}, where P^h o is applied as h successive
/// independent matrix thinnings. Rows share innovations but redraw their
/// thinnings, so each row has the stationary marginal law while the joint
/// path law differs from simulate_minar.
template <class InnovationSampler>
CountSeries simulate_inma(const ThinningMatrix& P, InnovationSampler&& sampler, std::size_t steps,
                          RandomSource& rng, double tol = 1e-8) {
  const std::size_t horizon = inma_truncation(P, tol);
  const auto d = P.dim();
  std::vector<CountVector> eps;
  eps.reserve(steps + horizon);
  for (std::size_t t = 0; t < steps + horizon; ++t) {
    eps.push_back(sampler(rng));
    if (eps.back().size() != d) throw DimensionError("innovation dimension does not match P");
  }
  std::vector<Count> data;
  data.reserve(steps * d);
  for (std::size_t t = 0; t < steps; ++t) {
    CountVector row(d, 0);
    const std::size_t now = t + horizon;
    for (std::size_t h = 0; h <= horizon; ++h) {
      CountVector part = eps[now - h];
      for (std::size_t k = 0; k < h; ++k) part = matrix_thin(P, part, rng);
      for (std::size_t i = 0; i < d; ++i) row[i] += part[i];
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return CountSeries(d, std::move(data));
}

}  // namespace minar
