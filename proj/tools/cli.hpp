#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "minar/minar.hpp"

namespace minar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitUnknownCommand = 64;

inline const std::vector<std::string> kCommands{"simulate", "fit",   "ladder", "granger", "forecast",
                                                "risk",     "study", "ingest", "moments"};

inline std::string usage() {
  return "usage: minar <command> [--config FILE] [--seed N] [--threads N] [--out PATH] [options]\n"
         "commands: simulate, fit, ladder, granger, forecast, risk, study, ingest, moments\n"
         "run 'minar <command> --help' for the options of one command\n";
}

namespace detail {

/// Keys holding input paths; relative values in a config file are taken
/// relative to the file's directory.
inline const std::set<std::string> kInputPathKeys{"input", "catalog", "plates", "params_file", "format"};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + p.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json_file(const std::filesystem::path& p) {
  try {
    return Json::parse(read_file(p));
  } catch (const Json::exception& e) {
    throw ParseError("'" + p.string() + "': " + e.what());
  }
}

inline Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  Json j = read_json_file(path);
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  const auto base = std::filesystem::absolute(path).parent_path();
  for (const auto& key : kInputPathKeys) {
    if (j.contains(key) && j[key].is_string()) {
      const std::filesystem::path p = j[key].get<std::string>();
      if (p.is_relative()) j[key] = (base / p).lexically_normal().string();
    }
  }
  return j;
}

inline void write_output(const Json& cfg, std::ostream& out, const std::string& text, const std::string& key = "out") {
  if (cfg.contains(key) && !cfg[key].get<std::string>().empty()) {
    const std::filesystem::path p = cfg[key].get<std::string>();
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + p.string() + "'");
    f << text;
  } else {
    out << text;
  }
}

/// `dir/name.csv` -> `dir/name<suffix>.csv`.
inline std::string sibling(const std::string& path, const std::string& suffix) {
  const std::filesystem::path p = path;
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

inline bool has_out(const Json& cfg) { return cfg.contains("out") && !cfg["out"].get<std::string>().empty(); }

template <class T>
T get_or(const Json& cfg, const char* key, T fallback) {
  return cfg.contains(key) ? cfg.at(key).get<T>() : fallback;
}

inline ParamVector model_params(const Json& cfg) {
  if (cfg.contains("params_file")) return params_from_json(read_json_file(cfg["params_file"].get<std::string>()));
  if (cfg.contains("params")) return params_from_json(cfg["params"]);
  if (cfg.contains("set")) {
    const int set = cfg["set"].get<int>();
    if (set == 1) return to_params(study_set1().P, study_set1().innov);
    if (set == 2) return to_params(study_set2().P, study_set2().innov);
    throw UsageError("parameter set must be 1 or 2");
  }
  throw UsageError("model parameters missing: give 'params', 'params_file' or 'set'");
}

inline CountVector initial_counts(const Json& cfg, bool required) {
  if (!cfg.contains("n0")) {
    if (required) throw UsageError("missing initial counts (n0)");
    return {0, 0};
  }
  auto n0 = cfg["n0"].get<CountVector>();
  if (n0.size() != 2) throw UsageError("initial counts (n0) need two entries");
  return n0;
}

inline CountSeries load_series(const Json& cfg) {
  if (!cfg.contains("input")) throw UsageError("missing input series (--input)");
  const auto path = cfg["input"].get<std::string>();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return read_csv(in);
}

inline FitOptions fit_options(const Json& cfg) {
  FitOptions o;
  const auto method = get_or<std::string>(cfg, "method", "nelder-mead");
  if (method == "bfgs") {
    o.method = OptimizerMethod::Bfgs;
  } else if (method != "nelder-mead") {
    throw UsageError("unknown optimizer '" + method + "'");
  }
  o.optimizer.max_evaluations = get_or<int>(cfg, "max_evaluations", o.optimizer.max_evaluations);
  if (o.optimizer.max_evaluations < 1) throw UsageError("max_evaluations must be positive");
  return o;
}

inline std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

inline int cmd_simulate(const Json& cfg, std::ostream& out, std::ostream& err) {
  const ParamVector t = model_params(cfg);
  const ThinningMatrix P = params_matrix(t);
  const BivPoissonParams innov = params_innov(t);
  const BivPoissonSampler sampler(innov);
  const long long steps = get_or<long long>(cfg, "steps", 100);
  if (steps < 0) throw UsageError("steps must be >= 0");
  const CountVector n0 = initial_counts(cfg, false);
  const auto seed = get_or<std::uint64_t>(cfg, "seed", 1);
  const double rho = spectral_radius(P);
  if (rho >= 1.0) {
    err << "warning: spectral radius of P is " << full(rho) << " >= 1, the simulated process is not stationary\n";
  }
  RandomSource rng(seed, 0);
  const CountSeries s = simulate_minar(P, sampler, n0, static_cast<std::size_t>(steps), rng);
  write_output(cfg, out, to_csv(s));
  Json echo{{"command", "simulate"}, {"params", Json::object()}, {"steps", steps}, {"n0", n0}, {"seed", seed}};
  for (std::size_t k = 0; k < kParamCount; ++k) echo["params"][kParamNames[k]] = t[k];
  if (has_out(cfg)) echo["out"] = cfg["out"];
  (has_out(cfg) ? out : err) << echo.dump(2) << '\n';
  return kExitOk;
}

inline int cmd_fit(const Json& cfg, std::ostream& out, std::ostream& err) {
  const CountSeries s = load_series(cfg);
  const ModelSpec spec = model_spec(parse_rung(get_or<std::string>(cfg, "model", "full-binar")));
  const FitResult f = fit_cmle(s, spec, fit_options(cfg));
  write_output(cfg, out, to_json(f).dump(2) + "\n");
  if (!f.converged) {
    err << "fit did not converge within the evaluation budget\n";
    return kExitNumerical;
  }
  return kExitOk;
}

inline int cmd_ladder(const Json& cfg, std::ostream& out, std::ostream& err) {
  const CountSeries s = load_series(cfg);
  const LadderReport r = run_model_ladder(s, fit_options(cfg));
  write_output(cfg, out, to_json(r).dump(2) + "\n");
  if (cfg.contains("csv")) {
    std::ostringstream csv;
    write_ladder_csv(csv, r);
    write_output(cfg, out, csv.str(), "csv");
  }
  for (const auto& f : r.fits) {
    if (!f.converged) {
      err << "fit of '" << f.model.name << "' did not converge\n";
      return kExitNumerical;
    }
  }
  return kExitOk;
}

inline int cmd_granger(const Json& cfg, std::ostream& out, std::ostream& err) {
  const CountSeries s = load_series(cfg);
  GrangerOptions o;
  o.fit = fit_options(cfg);
  o.level = get_or<double>(cfg, "level", 0.05);
  if (!(o.level > 0.0 && o.level < 1.0)) throw UsageError("level must lie in (0, 1)");
  const CausalityReport r = granger_tests(s, o);
  write_output(cfg, out, to_json(r).dump(2) + "\n");
  for (const FitResult* f : {&r.full, &r.diagonal, &r.lower, &r.upper, &r.no_phi}) {
    if (!f->converged) {
      err << "fit of '" << f->model.name << "' did not converge\n";
      return kExitNumerical;
    }
  }
  return kExitOk;
}

inline int cmd_forecast(const Json& cfg, std::ostream& out, std::ostream&) {
  const ParamVector t = model_params(cfg);
  const CountVector n0 = initial_counts(cfg, true);
  const auto horizons = get_or<std::vector<int>>(cfg, "horizons", {1});
  const auto results = forecast(params_matrix(t), params_innov(t), n0, horizons);
  std::ostringstream os;
  os << "h,mean_1,mean_2,var_1,cov_12,var_2\n";
  for (const auto& r : results) {
    os << r.horizon << ',' << full(r.mean(0)) << ',' << full(r.mean(1)) << ',' << full(r.cov(0, 0)) << ','
       << full(r.cov(0, 1)) << ',' << full(r.cov(1, 1)) << '\n';
  }
  write_output(cfg, out, os.str());
  return kExitOk;
}

inline int cmd_risk(const Json& cfg, std::ostream& out, std::ostream&) {
  const ParamVector t = model_params(cfg);
  const CountVector n0 = initial_counts(cfg, true);
  TailOptions o;
  o.paths = get_or<std::size_t>(cfg, "paths", 100000);
  o.seed = get_or<std::uint64_t>(cfg, "seed", 1);
  o.threads = get_or<unsigned>(cfg, "threads", 0);
  const auto horizons = get_or<std::vector<int>>(cfg, "horizons", {1, 3, 7, 14, 30});
  const auto thresholds = get_or<std::vector<Count>>(cfg, "thresholds", {5, 10, 15, 20, 25, 30, 40, 50});
  const TailTable table = mc_tail_table(params_matrix(t), params_innov(t), n0, horizons, thresholds, o);
  std::ostringstream grid, se;
  write_tail_csv(grid, table);
  write_tail_se_csv(se, table);
  if (has_out(cfg)) {
    write_output(cfg, out, grid.str());
    Json se_cfg{{"out", sibling(cfg["out"].get<std::string>(), "_se")}};
    write_output(se_cfg, out, se.str());
  } else {
    out << grid.str() << '\n' << se.str();
  }
  return kExitOk;
}

inline int cmd_moments(const Json& cfg, std::ostream& out, std::ostream&) {
  const ParamVector t = model_params(cfg);
  write_output(cfg, out, moments_report(params_matrix(t), params_innov(t)).dump(2) + "\n");
  return kExitOk;
}

inline int cmd_study(const Json& cfg, std::ostream& out, std::ostream& err) {
  StudySpec spec = get_or<int>(cfg, "set", 1) == 2 ? study_set2() : study_set1();
  if (cfg.contains("set") && cfg["set"] != 1 && cfg["set"] != 2) throw UsageError("study set must be 1 or 2");
  if (cfg.contains("params") || cfg.contains("params_file")) {
    const ParamVector t = model_params(cfg);
    spec.P = params_matrix(t);
    spec.innov = params_innov(t);
  }
  spec.sizes = get_or<std::vector<std::size_t>>(cfg, "sizes", spec.sizes);
  spec.replications = get_or<std::size_t>(cfg, "replications", spec.replications);
  spec.burn_in = get_or<std::size_t>(cfg, "burn_in", spec.burn_in);
  spec.seed = get_or<std::uint64_t>(cfg, "seed", spec.seed);
  spec.threads = get_or<unsigned>(cfg, "threads", 0);
  const StudyResult r = run_estimator_study(spec);
  std::ostringstream means, stdevs;
  write_study_means_csv(means, r);
  write_study_stdevs_csv(stdevs, r);
  if (has_out(cfg)) {
    const std::filesystem::path dir = cfg["out"].get<std::string>();
    std::filesystem::create_directories(dir);
    std::ostringstream draws;
    write_study_draws_csv(draws, r);
    write_output(Json{{"out", (dir / "means.csv").string()}}, out, means.str());
    write_output(Json{{"out", (dir / "stdevs.csv").string()}}, out, stdevs.str());
    write_output(Json{{"out", (dir / "draws.csv").string()}}, out, draws.str());
    out << "Mean parameter values\n";
    write_study_text(out, r, false);
    out << "\nStandard deviation of parameter values\n";
    write_study_text(out, r, true);
  } else {
    out << means.str() << '\n' << stdevs.str();
  }
  std::size_t excluded = 0;
  for (const auto& row : r.rows) excluded += row.excluded;
  if (excluded > 0) err << excluded << " replication(s) excluded after failed or non-converged fits\n";
  return kExitOk;
}

inline MagnitudeBand band_from(const Json& cfg) {
  if (cfg.contains("band")) {
    const auto b = cfg["band"].get<std::string>();
    if (b == "medium") return medium_band();
    if (b == "large") return large_band();
    if (b == "all") return {};
    throw UsageError("unknown magnitude band '" + b + "' (medium, large, all)");
  }
  MagnitudeBand band;
  if (cfg.contains("magnitude")) {
    const auto& m = cfg["magnitude"];
    band.lo = get_or<double>(m, "lo", band.lo);
    band.lo_inclusive = get_or<bool>(m, "lo_inclusive", true);
    if (m.contains("hi")) band.hi = m["hi"].get<double>();
    band.hi_inclusive = get_or<bool>(m, "hi_inclusive", false);
  }
  return band;
}

inline int cmd_ingest(const Json& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.contains("catalog")) throw UsageError("missing catalog (--catalog)");
  CatalogFormat format;
  if (cfg.contains("format")) {
    format = CatalogFormat::from_json(cfg["format"].is_string() ? read_json_file(cfg["format"].get<std::string>())
                                                                : cfg["format"]);
  }
  std::ifstream in(cfg["catalog"].get<std::string>());
  if (!in) throw UsageError("cannot open '" + cfg["catalog"].get<std::string>() + "'");
  const CatalogParse parsed = parse_catalog(in, format);

  BinningSpec spec;
  spec.window = BinningSpec::hours(get_or<double>(cfg, "window_hours", 24.0));
  if (!cfg.contains("start") || !cfg.contains("end")) throw UsageError("binning needs 'start' and 'end'");
  spec.start = parse_utc(cfg["start"].get<std::string>());
  spec.end = parse_utc(cfg["end"].get<std::string>());
  spec.band = band_from(cfg);
  if (!cfg.contains("plate_pair")) throw UsageError("missing plate pair (--plate-pair)");
  const auto plates = cfg["plate_pair"].get<std::vector<std::string>>();
  if (plates.size() != 2) throw UsageError("plate pair needs exactly two names");

  CountSeries series;
  if (cfg.contains("plates")) {
    std::ifstream pin(cfg["plates"].get<std::string>());
    if (!pin) throw UsageError("cannot open '" + cfg["plates"].get<std::string>() + "'");
    series = bin_counts(parsed.events, read_plates(pin), spec, plates);
  } else {
    if (!format.plate) throw UsageError("ingest needs a plates file or a plate column in the format");
    series = bin_counts(parsed.events, spec, plates);
  }
  write_output(cfg, out, to_csv(series));

  std::ostringstream rejects;
  write_rejects_csv(rejects, parsed.rejects);
  std::optional<std::string> rejects_path;
  if (cfg.contains("rejects")) {
    rejects_path = cfg["rejects"].get<std::string>();
  } else if (has_out(cfg)) {
    rejects_path = sibling(cfg["out"].get<std::string>(), "_rejects");
  }
  if (rejects_path) {
    write_output(Json{{"out", *rejects_path}}, out, rejects.str());
  } else if (!parsed.rejects.empty()) {
    err << rejects.str();
  }
  Count binned = 0;
  for (Count c : series.data()) binned += c;
  err << "ingest: " << parsed.events.size() << " events read, " << parsed.rejects.size() << " rejected, " << binned
      << " counted in " << series.size() << " windows\n";
  return kExitOk;
}

/// First token that names the command, skipping global options and their values.
inline std::optional<std::string> command_token(int argc, const char* const* argv) {
  static const std::set<std::string> with_value{"--config", "--seed", "--threads", "--out"};
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("-", 0) == 0) {
      if (with_value.count(a)) ++i;
      continue;
    }
    return a;
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses argv, runs one command and returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (const auto cmd = detail::command_token(argc, argv)) {
    if (std::find(kCommands.begin(), kCommands.end(), *cmd) == kCommands.end()) {
      err << "unknown command '" << *cmd << "'\n" << usage();
      return kExitUnknownCommand;
    }
  }

  CLI::App app{"Bivariate integer-valued autoregressive count models", "minar"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_path;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--out", out_path, "output file (directory for study)");

  Json flags = Json::object();
  std::optional<std::string> input, model, method, params_file, csv, catalog, plates, format, start, end, band,
      rejects;
  std::optional<int> set;
  std::optional<long long> steps;
  std::optional<double> level, window_hours, mag_lo, mag_hi;
  std::optional<std::size_t> paths, replications, burn_in;
  std::optional<int> max_evaluations;
  std::vector<Count> n0, thresholds;
  std::vector<int> horizons;
  std::vector<std::size_t> sizes;
  std::vector<std::string> plate_pair;

  auto add_params = [&](CLI::App* c) {
    c->add_option("--params", params_file, "fit JSON or parameter JSON file");
    c->add_option("--set", set, "built-in parameter set (1 or 2)");
  };
  auto add_fit = [&](CLI::App* c) {
    c->add_option("--input", input, "count series CSV");
    c->add_option("--method", method, "nelder-mead or bfgs");
    c->add_option("--max-evals", max_evaluations, "likelihood evaluation budget per start");
  };
  auto* sim = app.add_subcommand("simulate", "simulate a series from model parameters");
  add_params(sim);
  sim->add_option("--steps", steps, "number of steps after the initial row");
  sim->add_option("--n0", n0, "initial counts")->expected(2)->delimiter(',');
  auto* fit = app.add_subcommand("fit", "conditional maximum likelihood fit of one model");
  add_fit(fit);
  fit->add_option("--model", model, "model name (independent-poisson ... full-binar)");
  auto* ladder = app.add_subcommand("ladder", "fit the five nested models and their likelihood-ratio tests");
  add_fit(ladder);
  ladder->add_option("--csv", csv, "also write the test table as CSV");
  auto* granger = app.add_subcommand("granger", "Granger causality tests");
  add_fit(granger);
  granger->add_option("--level", level, "test level");
  auto* fc = app.add_subcommand("forecast", "conditional mean and covariance h steps ahead");
  add_params(fc);
  fc->add_option("--n0", n0, "current counts")->expected(2)->delimiter(',');
  fc->add_option("--horizons", horizons, "forecast horizons")->delimiter(',');
  auto* risk = app.add_subcommand("risk", "Monte Carlo exceedance probabilities of cumulative counts");
  add_params(risk);
  risk->add_option("--n0", n0, "current counts")->expected(2)->delimiter(',');
  risk->add_option("--horizons", horizons, "horizons in steps")->delimiter(',');
  risk->add_option("--thresholds", thresholds, "count thresholds")->delimiter(',');
  risk->add_option("--paths", paths, "Monte Carlo paths");
  auto* study = app.add_subcommand("study", "estimator convergence study on simulated samples");
  add_params(study);
  study->add_option("--sizes", sizes, "sample sizes")->delimiter(',');
  study->add_option("--replications", replications, "replications per size");
  study->add_option("--burn-in", burn_in, "discarded steps before each sample");
  auto* ingest = app.add_subcommand("ingest", "bin an earthquake catalog into a two-plate count series");
  ingest->add_option("--catalog", catalog, "delimited event file");
  ingest->add_option("--plates", plates, "plate polygons JSON");
  ingest->add_option("--format", format, "column map JSON");
  ingest->add_option("--window-hours", window_hours, "window length in hours");
  ingest->add_option("--start", start, "first window start (UTC)");
  ingest->add_option("--end", end, "end of the binned range (UTC)");
  ingest->add_option("--band", band, "medium, large or all");
  ingest->add_option("--mag-lo", mag_lo, "lower magnitude bound (inclusive)");
  ingest->add_option("--mag-hi", mag_hi, "upper magnitude bound (exclusive)");
  ingest->add_option("--plate-pair", plate_pair, "two plate names")->expected(2)->delimiter(',');
  ingest->add_option("--rejects", rejects, "rejects report path");
  auto* moments = app.add_subcommand("moments", "stationary moments and correlations");
  add_params(moments);

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--help") > 0) {
    out << sub->help();
    return kExitOk;
  }

  try {
    Json cfg = detail::load_config(config_path);
    auto put = [&](const char* key, const auto& value) {
      if (value) cfg[key] = *value;
    };
    put("seed", seed);
    put("threads", threads);
    put("out", out_path);
    put("input", input);
    put("model", model);
    put("method", method);
    put("max_evaluations", max_evaluations);
    put("csv", csv);
    put("steps", steps);
    put("level", level);
    put("paths", paths);
    put("replications", replications);
    put("burn_in", burn_in);
    put("catalog", catalog);
    put("plates", plates);
    put("format", format);
    put("window_hours", window_hours);
    put("start", start);
    put("end", end);
    put("rejects", rejects);
    if (params_file) {
      cfg.erase("params");
      cfg.erase("set");
      cfg["params_file"] = *params_file;
    }
    if (set) {
      cfg.erase("params");
      cfg.erase("params_file");
      cfg["set"] = *set;
    }
    if (band) {
      cfg.erase("magnitude");
      cfg["band"] = *band;
    }
    if (mag_lo || mag_hi) {
      cfg.erase("band");
      if (mag_lo) cfg["magnitude"]["lo"] = *mag_lo;
      if (mag_hi) cfg["magnitude"]["hi"] = *mag_hi;
    }
    if (!n0.empty()) cfg["n0"] = n0;
    if (!horizons.empty()) cfg["horizons"] = horizons;
    if (!thresholds.empty()) cfg["thresholds"] = thresholds;
    if (!sizes.empty()) cfg["sizes"] = sizes;
    if (!plate_pair.empty()) cfg["plate_pair"] = plate_pair;

    const std::string name = sub->get_name();
    if (name == "simulate") return detail::cmd_simulate(cfg, out, err);
    if (name == "fit") return detail::cmd_fit(cfg, out, err);
    if (name == "ladder") return detail::cmd_ladder(cfg, out, err);
    if (name == "granger") return detail::cmd_granger(cfg, out, err);
    if (name == "forecast") return detail::cmd_forecast(cfg, out, err);
    if (name == "risk") return detail::cmd_risk(cfg, out, err);
    if (name == "study") return detail::cmd_study(cfg, out, err);
    if (name == "ingest") return detail::cmd_ingest(cfg, out, err);
    if (name == "moments") return detail::cmd_moments(cfg, out, err);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  err << usage();
  return kExitUnknownCommand;
}

}  // namespace minar::cli
