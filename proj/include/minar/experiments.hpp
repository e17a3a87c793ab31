#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "minar/bivariate_poisson.hpp"
#include "minar/estimation.hpp"
#include "minar/granger.hpp"
#include "minar/moments.hpp"
#include "minar/parallel.hpp"
#include "minar/random.hpp"
#include "minar/thinning.hpp"

namespace minar {

struct StudySpec {
  ThinningMatrix P{{0.25, 0.05}, {0.10, 0.40}};
  BivPoissonParams innov{5.0, 3.0, 1.0};
  std::vector<std::size_t> sizes{1000, 10000};
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  /// Steps simulated and discarded before each sample.
  std::size_t burn_in = 200;
  unsigned threads = 0;
  FitOptions fit = [] {
    FitOptions o;
    o.std_errors = false;
    return o;
  }();

  void validate() const {
    if (P.dim() != 2) throw DimensionError("study truth must be bivariate");
    innov.validate();
    if (replications < 2) throw UsageError("study needs at least 2 replications");
    if (sizes.empty()) throw UsageError("study needs at least one sample size");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] < kMinFitLength) {
        throw UsageError("study sample sizes must be at least " + std::to_string(kMinFitLength));
      }
      if (i > 0 && sizes[i] <= sizes[i - 1]) throw UsageError("study sample sizes must be increasing");
    }
    if (spectral_radius(P) >= 1.0) throw StationarityError("study truth must be stationary");
  }
};

/// First parameter set of the convergence study (full P).
inline StudySpec study_set1() { return {}; }

/// Second parameter set (diagonal P).
inline StudySpec study_set2() {
  StudySpec s;
  s.P = ThinningMatrix{{0.25, 0.0}, {0.0, 0.40}};
  return s;
}

struct StudyDraw {
  std::size_t size = 0;
  std::size_t replication = 0;
  ParamVector estimate{};
  double loglik = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  /// Set when the fit threw instead of returning.
  std::string error;
};

struct StudyRow {
  std::size_t size = 0;
  ParamVector mean{};
  ParamVector stdev{};
  std::size_t fits = 0;
  std::size_t excluded = 0;
};

struct StudyResult {
  ParamVector truth{};
  std::vector<StudyRow> rows;
  /// In (size, replication) order.
  std::vector<StudyDraw> draws;

  bool operator==(const StudyResult& o) const {
    if (truth != o.truth || rows.size() != o.rows.size() || draws.size() != o.draws.size()) return false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto &a = rows[i], &b = o.rows[i];
      if (a.size != b.size || a.fits != b.fits || a.excluded != b.excluded || a.mean != b.mean || a.stdev != b.stdev)
        return false;
    }
    for (std::size_t i = 0; i < draws.size(); ++i) {
      if (draws[i].estimate != o.draws[i].estimate || draws[i].converged != o.draws[i].converged) return false;
    }
    return true;
  }
};

/// One sample of `size` observations after a burn-in started at the rounded
/// stationary mean.
inline CountSeries simulate_sample(const ThinningMatrix& P, const BivPoissonParams& innov, std::size_t size,
                                   std::size_t burn_in, RandomSource& rng) {
  const auto m = bp_moments(innov);
  const Eigen::VectorXd mu = stationary_mean(P, m.mean);
  const CountVector n0{std::llround(mu(0)), std::llround(mu(1))};
  const BivPoissonSampler sampler(innov);
  const CountSeries path = simulate_minar(P, sampler, n0, burn_in + size - 1, rng);
  return path.slice(burn_in, burn_in + size);
}

inline std::uint64_t study_stream(std::size_t size_index, std::size_t replication) {
  return (static_cast<std::uint64_t>(size_index) << 32) | static_cast<std::uint64_t>(replication);
}

/// Simulates `replications` series per size and fits the full model to each.
/// Fits that fail or do not converge are excluded from the mean and stdev
/// and counted in `excluded`.
inline StudyResult run_estimator_study(const StudySpec& spec) {
  spec.validate();
  const std::size_t reps = spec.replications;
  StudyResult out;
  out.truth = to_params(spec.P, spec.innov);
  out.draws.resize(spec.sizes.size() * reps);
  parallel_for(out.draws.size(), resolve_threads(spec.threads), [&](std::size_t job) {
    const std::size_t si = job / reps, rep = job % reps;
    StudyDraw& d = out.draws[job];
    d.size = spec.sizes[si];
    d.replication = rep;
    d.estimate.fill(std::numeric_limits<double>::quiet_NaN());
    RandomSource rng(spec.seed, study_stream(si, rep));
    const CountSeries sample = simulate_sample(spec.P, spec.innov, d.size, spec.burn_in, rng);
    try {
      const FitResult fit = fit_cmle(sample, Rung::FullBinar, spec.fit);
      d.estimate = fit.params;
      d.loglik = fit.loglik;
      d.converged = fit.converged;
    } catch (const Error& e) {
      d.error = e.what();
    }
  });
  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    StudyRow row;
    row.size = spec.sizes[si];
    ParamVector sum{}, sumsq{};
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& d = out.draws[si * reps + rep];
      if (!d.converged) {
        ++row.excluded;
        continue;
      }
      ++row.fits;
      for (std::size_t k = 0; k < kParamCount; ++k) sum[k] += d.estimate[k];
    }
    const auto nf = static_cast<double>(row.fits);
    for (std::size_t k = 0; k < kParamCount; ++k) row.mean[k] = row.fits > 0 ? sum[k] / nf : std::nan("");
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& d = out.draws[si * reps + rep];
      if (!d.converged) continue;
      for (std::size_t k = 0; k < kParamCount; ++k) sumsq[k] += (d.estimate[k] - row.mean[k]) * (d.estimate[k] - row.mean[k]);
    }
    for (std::size_t k = 0; k < kParamCount; ++k) {
      row.stdev[k] = row.fits > 1 ? std::sqrt(sumsq[k] / (nf - 1.0)) : std::nan("");
    }
    out.rows.push_back(row);
  }
  return out;
}

namespace detail {

inline std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

inline void write_param_header(std::ostream& os, const char* first) {
  os << first;
  for (const char* name : kParamNames) os << ',' << name;
}

}  // namespace detail

/// Replication means per size, followed by a `true` row.
inline void write_study_means_csv(std::ostream& os, const StudyResult& r) {
  detail::write_param_header(os, "n");
  os << ",fits,excluded\n";
  for (const auto& row : r.rows) {
    os << row.size;
    for (double v : row.mean) os << ',' << detail::full(v);
    os << ',' << row.fits << ',' << row.excluded << '\n';
  }
  os << "true";
  for (double v : r.truth) os << ',' << detail::full(v);
  os << ",,\n";
}

inline void write_study_stdevs_csv(std::ostream& os, const StudyResult& r) {
  detail::write_param_header(os, "n");
  os << ",fits,excluded\n";
  for (const auto& row : r.rows) {
    os << row.size;
    for (double v : row.stdev) os << ',' << detail::full(v);
    os << ',' << row.fits << ',' << row.excluded << '\n';
  }
}

/// Every replication's estimates, for external density plots.
inline void write_study_draws_csv(std::ostream& os, const StudyResult& r) {
  detail::write_param_header(os, "n,replication");
  os << ",loglik,converged\n";
  for (const auto& d : r.draws) {
    os << d.size << ',' << d.replication;
    for (double v : d.estimate) os << ',' << detail::full(v);
    os << ',' << detail::full(d.loglik) << ',' << (d.converged ? 1 : 0) << '\n';
  }
}

/// Rounded like the printed tables: probabilities in percent with two
/// decimals, rates with four.
inline void write_study_text(std::ostream& os, const StudyResult& r, bool stdevs) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%10s", "n");
  os << buf;
  for (const char* name : kParamNames) {
    std::snprintf(buf, sizeof buf, " %10s", name);
    os << buf;
  }
  os << '\n';
  auto cells = [&](const ParamVector& v) {
    for (std::size_t k = 0; k < kParamCount; ++k) {
      if (k < 4) {
        std::snprintf(buf, sizeof buf, " %9.2f%%", 100.0 * v[k]);
      } else {
        std::snprintf(buf, sizeof buf, " %10.4f", v[k]);
      }
      os << buf;
    }
    os << '\n';
  };
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%10zu", row.size);
    os << buf;
    cells(stdevs ? row.stdev : row.mean);
  }
  if (!stdevs) {
    std::snprintf(buf, sizeof buf, "%10s", "true");
    os << buf;
    cells(r.truth);
  }
}

struct LadderTest {
  std::string name;
  std::size_t nested = 0;  // index into LadderReport::fits
  std::size_t full = 0;
  LrtResult lrt;
  double threshold = 0.0;

  [[nodiscard]] bool significant() const { return lrt.statistic > threshold; }
};

struct LadderReport {
  std::vector<FitResult> fits;  // kLadder order
  std::vector<LadderTest> tests;
};

/// 5% chi-square critical values as printed: 3.84 for one restriction, 5.99
/// for two.
inline double ladder_threshold(int df) {
  if (df == 1) return 3.84;
  if (df == 2) return 5.99;
  return chi_square_quantile(0.95, df);
}

inline LadderReport run_model_ladder(const CountSeries& series, const FitOptions& options = {}) {
  LadderReport r;
  r.fits = fit_ladder(series, options);
  const auto idx = [](Rung rung) { return static_cast<std::size_t>(rung); };
  const std::vector<std::pair<Rung, Rung>> pairs{{Rung::IndependentPoisson, Rung::DependentPoisson},
                                                 {Rung::IndependentPoisson, Rung::IndependentInar},
                                                 {Rung::IndependentInar, Rung::DiagonalBinar},
                                                 {Rung::DiagonalBinar, Rung::FullBinar}};
  for (const auto& [a, b] : pairs) {
    LadderTest t;
    t.nested = idx(a);
    t.full = idx(b);
    t.name = r.fits[t.full].model.name + " vs " + r.fits[t.nested].model.name;
    t.lrt = lrt(r.fits[t.nested], r.fits[t.full]);
    t.threshold = ladder_threshold(t.lrt.df);
    r.tests.push_back(std::move(t));
  }
  return r;
}

/// One row per ladder test.
inline void write_ladder_csv(std::ostream& os, const LadderReport& r) {
  os << "test,full,nested,loglik_full,loglik_nested,statistic,df,p_value,threshold,significant\n";
  for (const auto& t : r.tests) {
    os << t.name << ',' << r.fits[t.full].model.name << ',' << r.fits[t.nested].model.name << ','
       << detail::full(r.fits[t.full].loglik) << ',' << detail::full(r.fits[t.nested].loglik) << ','
       << detail::full(t.lrt.statistic) << ',' << t.lrt.df << ',' << detail::full(t.lrt.p_value) << ','
       << detail::full(t.threshold) << ',' << (t.significant() ? 1 : 0) << '\n';
  }
}

/// Distribution of one LRT statistic across many series, as in the ladder
/// comparison tables: mean, stdev, upper quantiles and share above threshold.
struct LrtSummary {
  std::string label;
  std::size_t count = 0;
  double mean = 0.0;
  double stdev = 0.0;
  std::array<double, 5> quantiles{};  // 50%, 75%, 90%, 95%, 97.5%
  double share_above = 0.0;
};

inline constexpr std::array<double, 5> kLrtQuantileLevels{0.50, 0.75, 0.90, 0.95, 0.975};

inline LrtSummary summarize_lrt(std::string label, std::vector<double> stats, double threshold) {
  if (stats.empty()) throw UsageError("no statistics to summarise");
  LrtSummary s;
  s.label = std::move(label);
  s.count = stats.size();
  std::sort(stats.begin(), stats.end());
  double sum = 0.0;
  for (double v : stats) sum += v;
  s.mean = sum / static_cast<double>(stats.size());
  double ss = 0.0;
  std::size_t above = 0;
  for (double v : stats) {
    ss += (v - s.mean) * (v - s.mean);
    above += v > threshold;
  }
  s.stdev = stats.size() > 1 ? std::sqrt(ss / static_cast<double>(stats.size() - 1)) : 0.0;
  s.share_above = static_cast<double>(above) / static_cast<double>(stats.size());
  for (std::size_t q = 0; q < kLrtQuantileLevels.size(); ++q) {
    // Linear interpolation between order statistics.
    const double pos = kLrtQuantileLevels[q] * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, stats.size() - 1);
    s.quantiles[q] = stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  }
  return s;
}

/// Summaries for every ladder test over a set of reports (for instance all
/// plate pairs at one frequency).
inline std::vector<LrtSummary> summarize_ladders(const std::string& label, const std::vector<LadderReport>& reports) {
  if (reports.empty()) throw UsageError("no ladder reports to summarise");
  std::vector<LrtSummary> out;
  for (std::size_t t = 0; t < reports.front().tests.size(); ++t) {
    std::vector<double> stats;
    for (const auto& r : reports) stats.push_back(r.tests.at(t).lrt.statistic);
    out.push_back(summarize_lrt(label, std::move(stats), reports.front().tests[t].threshold));
    out.back().label = label;
  }
  return out;
}

/// Rows Mean, Stdev, quantiles and `% > threshold`; one column per summary.
inline void write_lrt_summary_csv(std::ostream& os, const std::vector<LrtSummary>& columns, double threshold) {
  os << "statistic";
  for (const auto& c : columns) os << ',' << c.label;
  os << "\nMean";
  for (const auto& c : columns) os << ',' << detail::full(c.mean);
  os << "\nStdev";
  for (const auto& c : columns) os << ',' << detail::full(c.stdev);
  const std::array<const char*, 5> names{"50%", "75%", "90%", "95%", "97.5%"};
  for (std::size_t q = 0; q < names.size(); ++q) {
    os << '\n' << names[q];
    for (const auto& c : columns) os << ',' << detail::full(c.quantiles[q]);
  }
  os << "\n% > " << detail::full(threshold);
  for (const auto& c : columns) os << ',' << detail::full(100.0 * c.share_above);
  os << '\n';
}

}  // namespace minar
