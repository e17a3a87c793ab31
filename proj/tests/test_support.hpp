#pragma once

// Statistical helpers shared by the test binaries. These are deliberately
// independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "minar/math.hpp"

namespace minar::stats {

struct GofResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Pearson chi-square goodness of fit. `observed[k]` counts draws equal to k,
/// `expected_prob[k]` is the model probability; the remaining mass beyond the
/// last index forms a tail bin. Bins with expected count < 5 are pooled
/// left to right.
inline GofResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected_prob) {
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  std::vector<double> obs_bins, exp_bins;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < expected_prob.size(); ++k) {
    o += k < observed.size() ? observed[k] : 0.0;
    e += expected_prob[k] * n;
    if (e >= 5.0) {
      obs_bins.push_back(o);
      exp_bins.push_back(e);
      o = e = 0.0;
    }
  }
  for (std::size_t k = expected_prob.size(); k < observed.size(); ++k) o += observed[k];
  const double tail = std::max(0.0, 1.0 - std::accumulate(expected_prob.begin(), expected_prob.end(), 0.0));
  e += tail * n;
  if (e > 0.0 || o > 0.0) {
    if (obs_bins.empty() || e >= 5.0) {
      obs_bins.push_back(o);
      exp_bins.push_back(e);
    } else {
      obs_bins.back() += o;
      exp_bins.back() += e;
    }
  }
  GofResult r;
  for (std::size_t i = 0; i < obs_bins.size(); ++i) {
    if (exp_bins[i] > 0.0) r.statistic += (obs_bins[i] - exp_bins[i]) * (obs_bins[i] - exp_bins[i]) / exp_bins[i];
  }
  r.df = static_cast<int>(obs_bins.size()) - 1;
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

/// Two-sample chi-square homogeneity test on integer samples, pooling
/// sparse categories until each pooled cell has >= 5 expected counts in both
/// samples.
inline GofResult chi_square_two_sample(const std::vector<long long>& a, const std::vector<long long>& b) {
  std::map<long long, std::pair<double, double>> cells;
  for (auto v : a) cells[v].first += 1.0;
  for (auto v : b) cells[v].second += 1.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  std::vector<std::pair<double, double>> pooled;
  std::pair<double, double> acc{0.0, 0.0};
  for (const auto& [k, c] : cells) {
    acc.first += c.first;
    acc.second += c.second;
    const double tot = acc.first + acc.second;
    if (tot * na / n >= 5.0 && tot * nb / n >= 5.0) {
      pooled.push_back(acc);
      acc = {0.0, 0.0};
    }
  }
  if (acc.first + acc.second > 0.0) {
    if (pooled.empty()) {
      pooled.push_back(acc);
    } else {
      pooled.back().first += acc.first;
      pooled.back().second += acc.second;
    }
  }
  GofResult r;
  for (const auto& [ca, cb] : pooled) {
    const double tot = ca + cb;
    const double ea = tot * na / n;
    const double eb = tot * nb / n;
    r.statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  r.df = static_cast<int>(pooled.size()) - 1;
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

inline double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double stdev(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

/// Standard error of the mean of a (possibly autocorrelated) sequence by
/// non-overlapping batch means.
inline double batch_means_se(const std::vector<double>& x, std::size_t batches = 100) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += x[i];
    means.push_back(s / static_cast<double>(len));
  }
  return stdev(means) / std::sqrt(static_cast<double>(batches));
}

/// Sample covariance of paired draws and its standard error from the
/// empirical variance of the centered products.
struct CovEstimate {
  double value = 0.0;
  double se = 0.0;
};

inline CovEstimate sample_cov(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  const auto n = static_cast<double>(x.size());
  std::vector<double> prod(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
  CovEstimate c;
  c.value = std::accumulate(prod.begin(), prod.end(), 0.0) / (n - 1.0);
  c.se = stdev(prod) / std::sqrt(n);
  return c;
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF; p-value from
/// the asymptotic Kolmogorov distribution with the Stephens small-sample
/// correction.
template <class Cdf>
double ks_p_value(std::vector<double> x, Cdf cdf, double* d_out = nullptr) {
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  if (d_out) *d_out = d;
  const double sq = std::sqrt(n);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  if (lambda < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-14) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace minar::stats
