#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "minar/errors.hpp"
#include "minar/estimation.hpp"
#include "minar/math.hpp"

namespace minar {

struct LrtResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;

  [[nodiscard]] bool rejected(double level = 0.05) const { return p_value < level; }
};

/// 2 (loglik_full - loglik_nested) clamped at 0, referred to chi-square with
/// the difference in free parameters.
inline LrtResult lrt(const FitResult& nested, const FitResult& full) {
  if (!nested.model.nested_in(full.model)) {
    throw UsageError("model '" + nested.model.name + "' is not nested in '" + full.model.name + "'");
  }
  if (nested.data_fingerprint != full.data_fingerprint || nested.transitions != full.transitions) {
    throw UsageError("likelihood-ratio test needs both fits on the same data");
  }
  LrtResult r;
  r.statistic = std::max(0.0, 2.0 * (full.loglik - nested.loglik));
  r.df = full.model.free_count() - nested.model.free_count();
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

enum class Causality { Independent, OneCausesTwo, TwoCausesOne, Feedback };

inline const char* causality_label(Causality c) {
  switch (c) {
    case Causality::Independent:
      return "independent";
    case Causality::OneCausesTwo:
      return "1->2";
    case Causality::TwoCausesOne:
      return "1<-2";
    case Causality::Feedback:
      return "1<->2";
  }
  return "?";
}

/// Constraint shapes of P used by the lagged tests. Triangular shapes follow
/// the usual matrix convention: lower triangular has p12 = 0.
inline ModelSpec lower_triangular_spec() { return {"lower-triangular", {true, false, true, true}, true}; }
inline ModelSpec upper_triangular_spec() { return {"upper-triangular", {true, true, false, true}, true}; }
inline ModelSpec independent_innovation_spec() { return {"full-binar-phi0", {true, true, true, true}, false}; }

struct CausalityReport {
  FitResult full, diagonal, lower, upper, no_phi;
  LrtResult instantaneous;  // phi = 0 vs full, df 1
  LrtResult diagonal_test;  // diagonal vs full, df 2
  LrtResult lower_test;     // p12 = 0 vs full, df 1
  LrtResult upper_test;     // p21 = 0 vs full, df 1
  Causality classification = Causality::Independent;
  double level = 0.05;
};

struct GrangerOptions {
  FitOptions fit;
  double level = 0.05;
};

/// Most parsimonious lagged shape not rejected at `level`: diagonal, then
/// either triangular shape, otherwise feedback.
inline Causality classify(const LrtResult& diagonal, const LrtResult& lower, const LrtResult& upper, double level) {
  if (!diagonal.rejected(level)) return Causality::Independent;
  const bool keep_lower = !lower.rejected(level);  // p12 = 0 acceptable: only p21 needed
  const bool keep_upper = !upper.rejected(level);  // p21 = 0 acceptable: only p12 needed
  if (keep_lower && keep_upper) {
    return lower.p_value >= upper.p_value ? Causality::OneCausesTwo : Causality::TwoCausesOne;
  }
  if (keep_lower) return Causality::OneCausesTwo;
  if (keep_upper) return Causality::TwoCausesOne;
  return Causality::Feedback;
}

inline CausalityReport granger_tests(const CountSeries& series, const GrangerOptions& options = {}) {
  const std::vector<ModelSpec> specs{model_spec(Rung::DiagonalBinar), lower_triangular_spec(), upper_triangular_spec(),
                                     independent_innovation_spec(), model_spec(Rung::FullBinar)};
  auto fits = fit_nested(series, specs, options.fit);
  CausalityReport r;
  r.diagonal = std::move(fits[0]);
  r.lower = std::move(fits[1]);
  r.upper = std::move(fits[2]);
  r.no_phi = std::move(fits[3]);
  r.full = std::move(fits[4]);
  r.level = options.level;
  r.instantaneous = lrt(r.no_phi, r.full);
  r.diagonal_test = lrt(r.diagonal, r.full);
  r.lower_test = lrt(r.lower, r.full);
  r.upper_test = lrt(r.upper, r.full);
  r.classification = classify(r.diagonal_test, r.lower_test, r.upper_test, options.level);
  return r;
}

}  // namespace minar
