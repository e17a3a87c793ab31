#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "minar/estimation.hpp"
#include "minar/experiments.hpp"
#include "minar/granger.hpp"
#include "minar/moments.hpp"

namespace minar {

using Json = nlohmann::json;

namespace detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json param_object(const ParamVector& v) {
  Json j = Json::object();
  for (std::size_t k = 0; k < kParamCount; ++k) j[kParamNames[k]] = number_or_null(v[k]);
  return j;
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

inline Json to_json(const FitResult& f) {
  Json j;
  j["model"] = f.model.name;
  j["params"] = detail::param_object(f.params);
  j["std_errors"] = detail::param_object(f.std_errors);
  Json boundary = Json::array();
  for (std::size_t k = 0; k < kParamCount; ++k) {
    if (f.at_boundary[k]) boundary.push_back(kParamNames[k]);
  }
  j["at_boundary"] = boundary;
  j["loglik"] = detail::number_or_null(f.loglik);
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["evaluations"] = f.evaluations;
  j["transitions"] = f.transitions;
  j["data_fingerprint"] = detail::hex64(f.data_fingerprint);
  if (spectral_radius(f.P()) < 1.0) {
    const Eigen::VectorXd mu = stationary_mean(f.P(), Eigen::Vector2d(f.params[4], f.params[5]));
    j["unconditional_mean"] = {mu(0), mu(1)};
  }
  return j;
}

inline Json to_json(const LrtResult& r, std::optional<double> level = std::nullopt) {
  Json j{{"statistic", r.statistic}, {"df", r.df}, {"p_value", r.p_value}};
  if (level) j["rejected"] = r.rejected(*level);
  return j;
}

/// Parameters from a JSON object with keys p11 ... phi, either at the top
/// level or under "params" (as written by to_json(FitResult)).
inline ParamVector params_from_json(const Json& j) {
  const Json& p = j.contains("params") ? j.at("params") : j;
  ParamVector t{};
  for (std::size_t k = 0; k < kParamCount; ++k) {
    if (!p.contains(kParamNames[k]) || !p.at(kParamNames[k]).is_number()) {
      throw ParseError(std::string("parameter '") + kParamNames[k] + "' missing or not a number");
    }
    t[k] = p.at(kParamNames[k]).get<double>();
  }
  return t;
}

inline Json to_json(const CausalityReport& r) {
  Json j;
  j["classification"] = causality_label(r.classification);
  j["level"] = r.level;
  j["tests"] = {{"instantaneous", to_json(r.instantaneous, r.level)},
                {"diagonal", to_json(r.diagonal_test, r.level)},
                {"lower_triangular", to_json(r.lower_test, r.level)},
                {"upper_triangular", to_json(r.upper_test, r.level)}};
  j["fits"] = {{"full", to_json(r.full)},
               {"diagonal", to_json(r.diagonal)},
               {"lower_triangular", to_json(r.lower)},
               {"upper_triangular", to_json(r.upper)},
               {"no_phi", to_json(r.no_phi)}};
  return j;
}

inline Json to_json(const LadderReport& r) {
  Json j;
  Json fits = Json::array();
  for (const auto& f : r.fits) fits.push_back(to_json(f));
  j["fits"] = fits;
  Json tests = Json::array();
  for (const auto& t : r.tests) {
    Json row = to_json(t.lrt);
    row["name"] = t.name;
    row["full"] = r.fits[t.full].model.name;
    row["nested"] = r.fits[t.nested].model.name;
    row["threshold"] = t.threshold;
    row["significant"] = t.significant();
    tests.push_back(row);
  }
  j["tests"] = tests;
  return j;
}

/// Row names of the first and second order moment table.
inline const std::array<const char*, 8> kMomentRowNames{
    "E(N1_t)", "E(N2_t)", "var(N1_t)", "var(N2_t)", "cor(N1_t,N2_t)", "cor(N1_t,N1_t-1)", "cor(N2_t,N2_t-1)",
    "cor(N1_t,N2_t-1)"};

inline std::array<double, 8> moment_rows(const ThinningMatrix& P, const BivPoissonParams& innov) {
  const auto m = stationary_cov(P, innov);
  const auto c = correlation_summary(m.gamma0, P);
  return {m.mu(0), m.mu(1), m.gamma0(0, 0), m.gamma0(1, 1), c.contemporaneous, c.auto1, c.auto2, c.cross12};
}

inline Json moments_report(const ThinningMatrix& P, const BivPoissonParams& innov) {
  const auto m = stationary_cov(P, innov);
  const auto rows = moment_rows(P, innov);
  Json j;
  for (std::size_t i = 0; i < rows.size(); ++i) j[kMomentRowNames[i]] = rows[i];
  j["gamma0"] = {{m.gamma0(0, 0), m.gamma0(0, 1)}, {m.gamma0(1, 0), m.gamma0(1, 1)}};
  j["fixed_point_iterations"] = m.iterations;
  return j;
}

/// One column of the parameter summary table.
struct FitColumn {
  std::string label;
  FitResult fit;
  std::optional<double> lrt_over_diagonal;
};

/// Parameter table with the printed rounding: P entries in percent with two
/// decimals, rates and statistics with four.
inline void write_fit_summary(std::ostream& os, const std::vector<FitColumn>& columns) {
  char buf[64];
  auto label = [&](const char* s) {
    std::snprintf(buf, sizeof buf, "%-20s", s);
    os << buf;
  };
  label("Params/Frequency");
  for (const auto& c : columns) {
    std::snprintf(buf, sizeof buf, " %12s", c.label.c_str());
    os << buf;
  }
  os << '\n';
  for (std::size_t k = 0; k < kParamCount; ++k) {
    label(kParamNames[k]);
    for (const auto& c : columns) {
      if (k < 4) {
        std::snprintf(buf, sizeof buf, " %11.2f%%", 100.0 * c.fit.params[k]);
      } else {
        std::snprintf(buf, sizeof buf, " %12.4f", c.fit.params[k]);
      }
      os << buf;
    }
    os << '\n';
  }
  label("LRT (over diag.)");
  for (const auto& c : columns) {
    if (c.lrt_over_diagonal) {
      std::snprintf(buf, sizeof buf, " %12.4f", *c.lrt_over_diagonal);
    } else {
      std::snprintf(buf, sizeof buf, " %12s", "-");
    }
    os << buf;
  }
  os << '\n';
  for (int i = 0; i < 2; ++i) {
    label(i == 0 ? "Uncond. mean (#1)" : "Uncond. mean (#2)");
    for (const auto& c : columns) {
      const Eigen::VectorXd mu = stationary_mean(c.fit.P(), Eigen::Vector2d(c.fit.params[4], c.fit.params[5]));
      std::snprintf(buf, sizeof buf, " %12.4f", mu(i));
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace minar
