#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace minar {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimizerOptions {
  int max_evaluations = 20000;
  double rel_tolerance = 1e-8;
  /// Simplex edge length in the unconstrained coordinates.
  double initial_step = 0.5;
  int max_restarts = 5;
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
};

namespace detail {

inline double guarded(const Objective& f, const Eigen::VectorXd& x, int& evals) {
  ++evals;
  const double v = f(x);
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

inline bool close_enough(double a, double b, double rel) {
  return std::abs(a - b) <= rel * (std::abs(a) + std::abs(b)) * 0.5 + 1e-300 ||
         (std::isinf(a) && std::isinf(b) && a == b);
}

}  // namespace detail

/// Nelder-Mead simplex minimisation. A converged run is restarted from its
/// best vertex with a fresh simplex until a restart no longer improves the
/// value, which guards against premature collapse in curved valleys.
inline OptimizerResult nelder_mead(const Objective& f, Eigen::VectorXd x0, const OptimizerOptions& options = {}) {
  const auto n = x0.size();
  OptimizerResult result;
  result.x = x0;
  result.value = detail::guarded(f, x0, result.evaluations);
  bool any_converged = false;

  for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), result.x);
    std::vector<double> vals(static_cast<std::size_t>(n + 1), result.value);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& p = pts[static_cast<std::size_t>(i + 1)];
      p(i) += options.initial_step;
      vals[static_cast<std::size_t>(i + 1)] = detail::guarded(f, p, result.evaluations);
    }
    std::vector<std::size_t> order(pts.size());
    bool converged = false;
    while (result.evaluations < options.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
      const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
      if (detail::close_enough(vals[best], vals[worst], options.rel_tolerance)) {
        converged = true;
        break;
      }
      ++result.iterations;
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (i != worst) centroid += pts[i];
      centroid /= static_cast<double>(n);

      const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
      const double fr = detail::guarded(f, xr, result.evaluations);
      if (fr < vals[best]) {
        const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
        const double fe = detail::guarded(f, xe, result.evaluations);
        if (fe < fr) {
          pts[worst] = xe;
          vals[worst] = fe;
        } else {
          pts[worst] = xr;
          vals[worst] = fr;
        }
        continue;
      }
      if (fr < vals[second]) {
        pts[worst] = xr;
        vals[worst] = fr;
        continue;
      }
      const bool outside = fr < vals[worst];
      const Eigen::VectorXd xc =
          outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
      const double fc = detail::guarded(f, xc, result.evaluations);
      if (fc < (outside ? fr : vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
        continue;
      }
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == best) continue;
        pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
        vals[i] = detail::guarded(f, pts[i], result.evaluations);
      }
    }
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    const double previous = result.value;
    if (vals[best] <= result.value) {
      result.x = pts[best];
      result.value = vals[best];
    }
    if (!converged) break;
    any_converged = true;
    result.restarts = attempt;
    if (attempt > 0 && detail::close_enough(previous, result.value, options.rel_tolerance)) {
      result.converged = true;
      return result;
    }
  }
  result.converged = any_converged && result.evaluations < options.max_evaluations;
  return result;
}

/// Quasi-Newton (BFGS) with central-difference gradients and a backtracking
/// Armijo line search.
inline OptimizerResult bfgs(const Objective& f, Eigen::VectorXd x0, const OptimizerOptions& options = {}) {
  const auto n = x0.size();
  OptimizerResult result;
  result.x = std::move(x0);
  result.value = detail::guarded(f, result.x, result.evaluations);
  auto gradient = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(x(i)));
      Eigen::VectorXd a = x, b = x;
      a(i) += h;
      b(i) -= h;
      g(i) = (detail::guarded(f, a, result.evaluations) - detail::guarded(f, b, result.evaluations)) / (2 * h);
    }
    return g;
  };
  if (!std::isfinite(result.value)) return result;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = gradient(result.x);
  while (result.evaluations < options.max_evaluations) {
    ++result.iterations;
    if (!g.allFinite()) break;
    Eigen::VectorXd dir = -H * g;
    if (dir.dot(g) >= 0) {
      H.setIdentity();
      dir = -g;
    }
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 60 && result.evaluations < options.max_evaluations; ++k) {
      x_new = result.x + step * dir;
      f_new = detail::guarded(f, x_new, result.evaluations);
      if (f_new <= result.value + 1e-4 * step * g.dot(dir)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.converged = g.cwiseAbs().maxCoeff() < 1e-3;
      break;
    }
    const double previous = result.value;
    const Eigen::VectorXd s = x_new - result.x;
    result.x = x_new;
    result.value = f_new;
    const Eigen::VectorXd g_new = gradient(result.x);
    const Eigen::VectorXd y = g_new - g;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (detail::close_enough(previous, result.value, options.rel_tolerance * 1e-2) &&
        s.cwiseAbs().maxCoeff() < 1e-6) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace minar
