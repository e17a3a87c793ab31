#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "minar/bivariate_poisson.hpp"
#include "minar/count_series.hpp"
#include "minar/errors.hpp"
#include "minar/math.hpp"
#include "minar/thinning.hpp"

namespace minar {

using CountPair = std::array<Count, 2>;

/// log P(p_a o X1 + p_b o X2 = n) for (X1, X2) = prev: the convolution of
/// Binomial(prev[0], p_a) and Binomial(prev[1], p_b). Off-support n gives -inf.
inline double thinning_transition_logpmf(Count n, const CountPair& prev, double p_a, double p_b) {
  if (!(p_a >= 0.0 && p_a <= 1.0) || !(p_b >= 0.0 && p_b <= 1.0)) {
    throw DomainError("thinning probability outside [0,1]");
  }
  if (prev[0] < 0 || prev[1] < 0) throw DomainError("previous counts must be nonnegative");
  if (n < 0 || n > prev[0] + prev[1]) return kNegInf;
  LogSum sum;
  for (Count m = std::max<Count>(0, n - prev[1]); m <= std::min(n, prev[0]); ++m) {
    sum.add(binomial_logpmf(m, prev[0], p_a) + binomial_logpmf(n - m, prev[1], p_b));
  }
  return sum.value();
}

namespace detail {

inline void require_bivariate(const ThinningMatrix& P) {
  if (P.dim() != 2) throw DimensionError("bivariate Poisson likelihood needs a 2x2 thinning matrix");
}

}  // namespace detail

/// log pi(n_t | n_prev): sum over innovation counts (k1, k2) of
/// pi1(n1 - k1) pi2(n2 - k2) P(eps = (k1, k2)), entirely in log space.
inline double transition_logprob(const CountPair& n_t, const CountPair& n_prev, const ThinningMatrix& P,
                                 const BivPoissonParams& innov) {
  detail::require_bivariate(P);
  innov.validate();
  if (n_t[0] < 0 || n_t[1] < 0 || n_prev[0] < 0 || n_prev[1] < 0) throw DomainError("counts must be nonnegative");
  const Count total = n_prev[0] + n_prev[1];
  const Count lo1 = std::max<Count>(n_t[0] - total, 0);
  const Count lo2 = std::max<Count>(n_t[1] - total, 0);
  std::vector<double> pi1(static_cast<std::size_t>(n_t[0] - lo1 + 1));
  std::vector<double> pi2(static_cast<std::size_t>(n_t[1] - lo2 + 1));
  for (Count x = 0; x <= n_t[0] - lo1; ++x) pi1[static_cast<std::size_t>(x)] = thinning_transition_logpmf(x, n_prev, P(0, 0), P(0, 1));
  for (Count y = 0; y <= n_t[1] - lo2; ++y) pi2[static_cast<std::size_t>(y)] = thinning_transition_logpmf(y, n_prev, P(1, 0), P(1, 1));
  LogSum sum;
  for (Count k1 = lo1; k1 <= n_t[0]; ++k1) {
    const double a = pi1[static_cast<std::size_t>(n_t[0] - k1)];
    if (a == kNegInf) continue;
    for (Count k2 = lo2; k2 <= n_t[1]; ++k2) {
      const double b = pi2[static_cast<std::size_t>(n_t[1] - k2)];
      if (b == kNegInf) continue;
      sum.add(a + b + bp_logpmf(k1, k2, innov));
    }
  }
  return sum.value();
}

/// Conditional log-likelihood of a bivariate series, precompiled once per
/// series. Identical transitions are evaluated once and weighted by their
/// multiplicity; probabilities are tabulated per parameter point, summed in
/// linear space, and any transition whose linear sum underflows is redone
/// with transition_logprob.
class TransitionLikelihood {
 public:
  explicit TransitionLikelihood(const CountSeries& series) {
    if (series.dim() != 2) throw DimensionError("bivariate likelihood needs a two-column series");
    if (series.size() < 2) throw EstimationError("conditional likelihood needs at least two rows");
    std::map<std::array<Count, 4>, std::size_t> counts;
    for (std::size_t t = 1; t < series.size(); ++t) {
      ++counts[{series(t - 1, 0), series(t - 1, 1), series(t, 0), series(t, 1)}];
    }
    transitions_ = series.size() - 1;
    for (const auto& [key, mult] : counts) {
      if (groups_.empty() || groups_.back().prev != CountPair{key[0], key[1]}) {
        groups_.push_back({{key[0], key[1]}, {}});
      }
      groups_.back().items.push_back({{key[2], key[3]}, static_cast<double>(mult)});
      max_prev_[0] = std::max(max_prev_[0], key[0]);
      max_prev_[1] = std::max(max_prev_[1], key[1]);
      max_cur_[0] = std::max(max_cur_[0], key[2]);
      max_cur_[1] = std::max(max_cur_[1], key[3]);
    }
    const Count top = std::max({max_prev_[0], max_prev_[1], max_cur_[0], max_cur_[1]});
    log_fact_.resize(static_cast<std::size_t>(top + 1));
    for (Count k = 0; k <= top; ++k) log_fact_[static_cast<std::size_t>(k)] = log_factorial(k);
  }

  [[nodiscard]] std::size_t transitions() const noexcept { return transitions_; }
  [[nodiscard]] std::size_t distinct_transitions() const noexcept {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.items.size();
    return n;
  }

  [[nodiscard]] double operator()(const ThinningMatrix& P, const BivPoissonParams& innov) const {
    detail::require_bivariate(P);
    innov.validate();
    const auto b11 = binomial_table(P(0, 0), max_prev_[0]);
    const auto b12 = binomial_table(P(0, 1), max_prev_[1]);
    const auto b21 = binomial_table(P(1, 0), max_prev_[0]);
    const auto b22 = binomial_table(P(1, 1), max_prev_[1]);
    const auto n1 = static_cast<std::size_t>(max_cur_[0] + 1);
    const auto n2 = static_cast<std::size_t>(max_cur_[1] + 1);
    const std::vector<double> shock = innovation_table(innov, n1, n2);

    double total = 0.0;
    std::vector<double> pi1, pi2;
    for (const auto& g : groups_) {
      convolve(b11[static_cast<std::size_t>(g.prev[0])], b12[static_cast<std::size_t>(g.prev[1])], n1, pi1);
      convolve(b21[static_cast<std::size_t>(g.prev[0])], b22[static_cast<std::size_t>(g.prev[1])], n2, pi2);
      const Count reach = g.prev[0] + g.prev[1];
      for (const auto& item : g.items) {
        const Count x1 = item.cur[0];
        const Count x2 = item.cur[1];
        const Count lo1 = std::max<Count>(x1 - reach, 0);
        const Count lo2 = std::max<Count>(x2 - reach, 0);
        double s = 0.0;
        for (Count k1 = lo1; k1 <= x1; ++k1) {
          const double a = pi1[static_cast<std::size_t>(x1 - k1)];
          if (a == 0.0) continue;
          const double* row = &shock[static_cast<std::size_t>(k1) * n2];
          double inner = 0.0;
          for (Count k2 = lo2; k2 <= x2; ++k2) inner += pi2[static_cast<std::size_t>(x2 - k2)] * row[k2];
          s += a * inner;
        }
        const double logp = s > 1e-280 ? std::log(s) : transition_logprob(item.cur, g.prev, P, innov);
        if (logp == kNegInf) return kNegInf;
        total += item.multiplicity * logp;
      }
    }
    return total;
  }

 private:
  struct Item {
    CountPair cur;
    double multiplicity;
  };
  struct Group {
    CountPair prev;
    std::vector<Item> items;
  };

  // table[n][m] = Binomial(m; n, p) for n <= max_n.
  [[nodiscard]] std::vector<std::vector<double>> binomial_table(double p, Count max_n) const {
    std::vector<std::vector<double>> table(static_cast<std::size_t>(max_n + 1));
    const double lp = p > 0.0 ? std::log(p) : kNegInf;
    const double lq = p < 1.0 ? std::log1p(-p) : kNegInf;
    for (Count n = 0; n <= max_n; ++n) {
      auto& row = table[static_cast<std::size_t>(n)];
      row.resize(static_cast<std::size_t>(n + 1));
      for (Count m = 0; m <= n; ++m) {
        double v;
        if (p == 0.0) {
          v = m == 0 ? 1.0 : 0.0;
        } else if (p == 1.0) {
          v = m == n ? 1.0 : 0.0;
        } else {
          v = std::exp(lf(n) - lf(m) - lf(n - m) + static_cast<double>(m) * lp + static_cast<double>(n - m) * lq);
        }
        row[static_cast<std::size_t>(m)] = v;
      }
    }
    return table;
  }

  // Row-major n1 x n2 table of P(eps = (k1, k2)) via the common-shock convolution.
  [[nodiscard]] std::vector<double> innovation_table(const BivPoissonParams& innov, std::size_t n1,
                                                     std::size_t n2) const {
    const auto pa = poisson_table(innov.lambda1 - innov.phi, n1);
    const auto pb = poisson_table(innov.lambda2 - innov.phi, n2);
    const auto p0 = poisson_table(innov.phi, std::min(n1, n2));
    std::vector<double> table(n1 * n2, 0.0);
    for (std::size_t k1 = 0; k1 < n1; ++k1) {
      for (std::size_t k2 = 0; k2 < n2; ++k2) {
        double s = 0.0;
        for (std::size_t i = 0; i <= std::min(k1, k2); ++i) s += pa[k1 - i] * pb[k2 - i] * p0[i];
        table[k1 * n2 + k2] = s;
      }
    }
    return table;
  }

  [[nodiscard]] std::vector<double> poisson_table(double mean, std::size_t n) const {
    std::vector<double> out(n, 0.0);
    if (mean == 0.0) {
      if (n > 0) out[0] = 1.0;
      return out;
    }
    const double lm = std::log(mean);
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = std::exp(-mean + static_cast<double>(k) * lm - lf(static_cast<Count>(k)));
    }
    return out;
  }

  static void convolve(const std::vector<double>& a, const std::vector<double>& b, std::size_t limit,
                       std::vector<double>& out) {
    const std::size_t len = std::min(a.size() + b.size() - 1, limit);
    out.assign(std::max(len, limit), 0.0);
    for (std::size_t i = 0; i < a.size() && i < len; ++i) {
      if (a[i] == 0.0) continue;
      for (std::size_t j = 0; j < b.size() && i + j < len; ++j) out[i + j] += a[i] * b[j];
    }
  }

  [[nodiscard]] double lf(Count k) const { return log_fact_[static_cast<std::size_t>(k)]; }

  std::vector<Group> groups_;
  std::size_t transitions_ = 0;
  CountPair max_prev_{0, 0};
  CountPair max_cur_{0, 0};
  std::vector<double> log_fact_;
};

/// sum_{t>=1} log pi(N_t | N_{t-1}), conditioning on the first row.
inline double conditional_loglik(const CountSeries& series, const ThinningMatrix& P,
                                 const BivPoissonParams& innov) {
  return TransitionLikelihood(series)(P, innov);
}

}  // namespace minar
