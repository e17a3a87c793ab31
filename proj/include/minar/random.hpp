#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "minar/errors.hpp"

namespace minar {

/// Seedable uniform source. A (seed, stream) pair fully determines the draw
/// sequence; distinct stream ids give independent substreams, which is how
/// parallel paths and replications stay reproducible regardless of
/// scheduling.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x4d494e41u};
    engine_.seed(seq);
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  std::uint64_t next_u64() noexcept { return engine_(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

namespace detail {

// Stirling series tail log(k!) - [(k+1/2)log(k+1) - (k+1) + log(sqrt(2 pi))].
inline double stirling_tail(std::int64_t k) {
  static constexpr double kTable[10] = {
      0.08106146679532726, 0.04134069595540929, 0.02767792568499834, 0.02079067210376509,
      0.01664469118982119, 0.01387612882307075, 0.01189670994589177, 0.01041126526197209,
      0.009255462182712733, 0.008330563433362871};
  if (k < 10) return kTable[k];
  const double r = 1.0 / static_cast<double>(k + 1);
  const double r2 = r * r;
  return (1.0 / 12 - (1.0 / 360 - r2 / 1260) * r2) * r;
}

// Sequential-search inversion, p <= 1/2.
inline std::int64_t binomial_inversion(std::int64_t n, double p, RandomSource& rng) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = static_cast<double>(n + 1) * s;
  const double r0 = std::pow(q, static_cast<double>(n));
  for (;;) {
    double r = r0;
    double u = rng.uniform();
    std::int64_t x = 0;
    while (u > r) {
      u -= r;
      ++x;
      if (x > n) break;
      r *= a / static_cast<double>(x) - s;
    }
    if (x <= n) return x;
  }
}

// Transformed rejection with decomposition (Hormann 1993), p <= 1/2, n*p >= 10.
inline std::int64_t binomial_btrd(std::int64_t n, double p, RandomSource& rng) {
  const double nd = static_cast<double>(n);
  const std::int64_t m = static_cast<std::int64_t>(std::floor((nd + 1) * p));
  const double r = p / (1.0 - p);
  const double nr = (nd + 1) * r;
  const double npq = nd * p * (1.0 - p);
  const double sq = std::sqrt(npq);
  const double b = 1.15 + 2.53 * sq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double alpha = (2.83 + 5.1 / b) * sq;
  const double vr = 0.92 - 4.2 / b;
  const double urvr = 0.86 * vr;

  for (;;) {
    double v = rng.uniform();
    double u;
    if (v <= urvr) {
      u = v / vr - 0.43;
      return static_cast<std::int64_t>(std::floor((2 * a / (0.5 - std::abs(u)) + b) * u + c));
    }
    if (v >= vr) {
      u = rng.uniform() - 0.5;
    } else {
      u = v / vr - 0.93;
      u = std::copysign(0.5, u) - u;
      v = rng.uniform() * vr;
    }
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2 * a / us + b) * u + c);
    if (kd < 0 || kd > nd) continue;
    const auto k = static_cast<std::int64_t>(kd);
    v = v * alpha / (a / (us * us) + b);
    const std::int64_t km = k > m ? k - m : m - k;
    if (km <= 15) {
      double f = 1.0;
      if (m < k) {
        for (std::int64_t i = m + 1; i <= k; ++i) f *= nr / static_cast<double>(i) - r;
      } else if (m > k) {
        for (std::int64_t i = k + 1; i <= m; ++i) v *= nr / static_cast<double>(i) - r;
      }
      if (v <= f) return k;
      continue;
    }
    v = std::log(v);
    const double kmd = static_cast<double>(km);
    const double rho = (kmd / npq) * (((kmd / 3.0 + 0.625) * kmd + 1.0 / 6.0) / npq + 0.5);
    const double t = -kmd * kmd / (2 * npq);
    if (v < t - rho) return k;
    if (v > t + rho) continue;
    const double nm = nd - static_cast<double>(m) + 1;
    const double h = (static_cast<double>(m) + 0.5) * std::log((static_cast<double>(m) + 1) / (r * nm)) +
                     stirling_tail(m) + stirling_tail(n - m);
    const double nk = nd - kd + 1;
    if (v <= h + (nd + 1) * std::log(nm / nk) + (kd + 0.5) * std::log(nk * r / (kd + 1)) -
                 stirling_tail(k) - stirling_tail(n - k)) {
      return k;
    }
  }
}

}  // namespace detail

/// Binomial(n, p) draw. p == 0 and p == 1 are resolved without consuming
/// randomness so that streams stay aligned across constrained models.
inline std::int64_t sample_binomial(std::int64_t n, double p, RandomSource& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial probability outside [0,1]");
  if (n < 0) throw DomainError("binomial trial count is negative");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  const bool flip = p > 0.5;
  const double pp = flip ? 1.0 - p : p;
  const std::int64_t k = static_cast<double>(n) * pp < 10.0 ? detail::binomial_inversion(n, pp, rng)
                                                            : detail::binomial_btrd(n, pp, rng);
  return flip ? n - k : k;
}

/// Poisson(mean) draw: inversion below mean 10, PTRS rejection above.
inline std::int64_t sample_poisson(double mean, RandomSource& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    for (;;) {
      double p = std::exp(-mean);
      double u = rng.uniform();
      std::int64_t x = 0;
      while (u > p) {
        u -= p;
        ++x;
        p *= mean / static_cast<double>(x);
        if (p == 0.0 && u > 0.0) break;
      }
      if (u <= p) return x;
    }
  }
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kd);
    if (kd < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <= -mean + kd * log_mean - std::lgamma(kd + 1)) {
      return static_cast<std::int64_t>(kd);
    }
  }
}

}  // namespace minar
