#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include <boost/math/special_functions/gamma.hpp>

namespace minar {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_factorial(std::int64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

inline double log_choose(std::int64_t n, std::int64_t k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// k * log(x) with the 0 * log(0) = 0 convention.
inline double xlogy(double k, double x) { return k == 0.0 ? 0.0 : k * std::log(x); }

/// log(sum(exp(terms))); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> terms) {
  double m = kNegInf;
  for (double t : terms) m = std::max(m, t);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

/// Streaming log-sum-exp accumulator.
class LogSum {
 public:
  void add(double log_term) {
    if (log_term == kNegInf) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  [[nodiscard]] double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

/// log Binomial(k; n, p) pmf, -inf off support.
inline double binomial_logpmf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0 || k > n) return kNegInf;
  if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p == 1.0) return k == n ? 0.0 : kNegInf;
  return log_choose(n, k) + static_cast<double>(k) * std::log(p) + static_cast<double>(n - k) * std::log1p(-p);
}

/// log Poisson(k; mean) pmf with mean 0 a point mass at 0.
inline double poisson_logpmf(std::int64_t k, double mean) {
  if (k < 0) return kNegInf;
  if (mean == 0.0) return k == 0 ? 0.0 : kNegInf;
  return -mean + static_cast<double>(k) * std::log(mean) - log_factorial(k);
}

/// Upper tail of the chi-square distribution; df = 0 is a point mass at 0.
inline double chi_square_sf(double x, double df) {
  if (df <= 0.0) return x > 0.0 ? 0.0 : 1.0;
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

inline double chi_square_cdf(double x, double df) { return 1.0 - chi_square_sf(x, df); }

inline double chi_square_quantile(double prob, double df) { return 2.0 * boost::math::gamma_p_inv(df / 2.0, prob); }

}  // namespace minar
