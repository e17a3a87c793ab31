#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "minar/bivariate_poisson.hpp"
#include "minar/errors.hpp"
#include "minar/parallel.hpp"
#include "minar/random.hpp"
#include "minar/thinning.hpp"

namespace minar {

namespace detail {

inline Eigen::VectorXd to_vector(std::span<const Count> n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 0) throw DomainError("counts must be nonnegative");
    v(static_cast<Eigen::Index>(i)) = static_cast<double>(n[i]);
  }
  return v;
}

// E(N_{t+h} | N_t = x) for real x.
inline Eigen::VectorXd forecast_mean_real(const Eigen::MatrixXd& P, const Eigen::VectorXd& lambda,
                                          Eigen::VectorXd x, int h) {
  for (int k = 0; k < h; ++k) x = P * x + lambda;
  return x;
}

}  // namespace detail

/// P^h N_t + (I + P + ... + P^{h-1}) lambda; h = 0 returns N_t.
inline Eigen::VectorXd forecast_mean(const ThinningMatrix& P, const Eigen::VectorXd& lambda, std::span<const Count> n_t,
                                     int h) {
  if (h < 0) throw DomainError("forecast horizon must be >= 0");
  if (static_cast<std::size_t>(lambda.size()) != P.dim() || n_t.size() != P.dim()) {
    throw DimensionError("forecast inputs do not match the dimension of P");
  }
  return detail::forecast_mean_real(P.matrix(), lambda, detail::to_vector(n_t), h);
}

/// var(N_{t+h} | N_t). The recursion V_h(N) = E[V_{h-1}(P o N + eps) | N]
/// + P^{h-1} [diag(V N) + Lambda] P^{h-1}' unrolls, because V_h is affine in
/// N, into sum_{k<h} P^k [diag(V m_{h-1-k}) + Lambda] P^k' with
/// m_j = E(N_{t+j} | N_t). h = 0 gives the zero matrix.
inline Eigen::MatrixXd forecast_var(const ThinningMatrix& P, const Eigen::VectorXd& lambda,
                                    const Eigen::MatrixXd& Lambda, std::span<const Count> n_t, int h) {
  if (h < 0) throw DomainError("forecast horizon must be >= 0");
  const auto d = static_cast<Eigen::Index>(P.dim());
  if (lambda.size() != d || Lambda.rows() != d || Lambda.cols() != d || static_cast<Eigen::Index>(n_t.size()) != d) {
    throw DimensionError("forecast inputs do not match the dimension of P");
  }
  const Eigen::MatrixXd V = P.bernoulli_variances();
  std::vector<Eigen::VectorXd> means{detail::to_vector(n_t)};
  for (int j = 1; j < h; ++j) means.push_back(P.matrix() * means.back() + lambda);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd Pk = Eigen::MatrixXd::Identity(d, d);
  for (int k = 0; k < h; ++k) {
    const Eigen::MatrixXd one_step =
        Eigen::MatrixXd((V * means[static_cast<std::size_t>(h - 1 - k)]).asDiagonal()) + Lambda;
    out += Pk * one_step * Pk.transpose();
    Pk = P.matrix() * Pk;
  }
  return 0.5 * (out + out.transpose());
}

inline Eigen::MatrixXd forecast_var(const ThinningMatrix& P, const BivPoissonParams& innov, std::span<const Count> n_t,
                                    int h) {
  const auto m = bp_moments(innov);
  return forecast_var(P, Eigen::VectorXd(m.mean), Eigen::MatrixXd(m.cov), n_t, h);
}

enum class ForecastMethod { Analytic, MonteCarlo };

struct ForecastResult {
  int horizon = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  ForecastMethod method = ForecastMethod::Analytic;
};

inline std::vector<ForecastResult> forecast(const ThinningMatrix& P, const BivPoissonParams& innov,
                                            std::span<const Count> n_t, const std::vector<int>& horizons) {
  const auto m = bp_moments(innov);
  std::vector<ForecastResult> out;
  for (int h : horizons) {
    out.push_back({h, forecast_mean(P, Eigen::VectorXd(m.mean), n_t, h),
                   forecast_var(P, Eigen::VectorXd(m.mean), Eigen::MatrixXd(m.cov), n_t, h), ForecastMethod::Analytic});
  }
  return out;
}

/// Monte Carlo estimates of P(sum_{k=1..T} (N_1k + N_2k) >= n | N_0).
struct TailTable {
  std::vector<Count> thresholds;
  std::vector<int> horizons;
  /// probabilities[i][j] for thresholds[i], horizons[j].
  std::vector<std::vector<double>> probabilities;
  std::vector<std::vector<double>> std_errors;
  std::size_t paths = 0;
  std::uint64_t seed = 0;

  bool operator==(const TailTable&) const = default;
};

struct TailOptions {
  std::size_t paths = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Path i draws from RandomSource(seed, i), so the table does not depend on
/// the thread count.
inline TailTable mc_tail_table(const ThinningMatrix& P, const BivPoissonParams& innov, std::span<const Count> n0,
                               std::vector<int> horizons, std::vector<Count> thresholds, const TailOptions& options = {}) {
  if (P.dim() != 2 || n0.size() != 2) throw DimensionError("tail tables are defined for bivariate processes");
  if (options.paths < 1) throw DomainError("tail table needs at least one path");
  if (horizons.empty() || thresholds.empty()) throw UsageError("tail table needs horizons and thresholds");
  for (int h : horizons) {
    if (h < 1) throw DomainError("tail-table horizons must be >= 1");
  }
  for (Count c : n0) {
    if (c < 0) throw DomainError("initial counts must be nonnegative");
  }
  innov.validate();
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const int horizon_max = horizons.back();
  const std::size_t nh = horizons.size();
  std::vector<Count> sums(options.paths * nh);
  parallel_for(options.paths, options.threads, [&](std::size_t path) {
    RandomSource rng(options.seed, path);
    CountVector current(n0.begin(), n0.end());
    Count total = 0;
    std::size_t next = 0;
    for (int step = 1; step <= horizon_max; ++step) {
      CountVector n = matrix_thin(P, current, rng);
      const CountVector eps = bp_sample(innov, rng);
      n[0] += eps[0];
      n[1] += eps[1];
      total += n[0] + n[1];
      current = std::move(n);
      if (step == horizons[next]) sums[path * nh + next++] = total;
    }
  });

  TailTable table;
  table.thresholds = thresholds;
  table.horizons = horizons;
  table.paths = options.paths;
  table.seed = options.seed;
  const auto paths = static_cast<double>(options.paths);
  for (Count threshold : thresholds) {
    std::vector<double> prob(nh), se(nh);
    for (std::size_t j = 0; j < nh; ++j) {
      std::size_t hits = 0;
      for (std::size_t path = 0; path < options.paths; ++path) hits += sums[path * nh + j] >= threshold;
      prob[j] = static_cast<double>(hits) / paths;
      se[j] = std::sqrt(prob[j] * (1.0 - prob[j]) / paths);
    }
    table.probabilities.push_back(std::move(prob));
    table.std_errors.push_back(std::move(se));
  }
  return table;
}

namespace detail {

inline void write_grid(std::ostream& os, const TailTable& t, const std::vector<std::vector<double>>& cells) {
  os << "n";
  for (int h : t.horizons) os << ",T=" << h;
  os << '\n';
  char buf[64];
  for (std::size_t i = 0; i < t.thresholds.size(); ++i) {
    os << t.thresholds[i];
    for (double v : cells[i]) {
      std::snprintf(buf, sizeof buf, "%.15g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace detail

/// Rows are thresholds, columns horizons.
inline void write_tail_csv(std::ostream& os, const TailTable& t) { detail::write_grid(os, t, t.probabilities); }
inline void write_tail_se_csv(std::ostream& os, const TailTable& t) { detail::write_grid(os, t, t.std_errors); }

}  // namespace minar
