#pragma once

// Command-line front end: sample, fit, experiment, tables.
// Exit codes: 0 ok, 2 usage/input, 3 non-convergence, 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "slsm/distribution.hpp"
#include "slsm/error.hpp"
#include "slsm/experiment.hpp"
#include "slsm/io.hpp"
#include "slsm/lsq.hpp"
#include "slsm/stretched_lsm.hpp"

namespace slsm::cli {

namespace fs = std::filesystem;
using io::Json;

// ---------------------------------------------------------------------------
// TrialConfig <-> JSON

inline Json to_json(const TrialConfig& cfg) {
  Json j;
  j["truth_model"] = cfg.truth_model.name();
  j["truth_params"] = cfg.truth_params;
  j["regression"] = cfg.regression.name();
  j["n"] = cfg.n;
  j["x_min"] = cfg.x_min;
  j["x_max"] = cfg.x_max;
  j["spacing"] = cfg.spacing == XSpacing::equal ? "equal" : "uniform";
  j["noise"] = {{"alpha", cfg.noise_law.alpha()},
                {"beta", cfg.noise_law.beta()},
                {"diffusivity", cfg.noise_law.diffusivity()},
                {"time", cfg.noise_law.time()}};
  j["eta"] = cfg.eta;
  j["beta"] = cfg.beta;
  j["seed"] = cfg.seed;
  j["starts"] = cfg.fit_options.nonlinear.starts;
  j["transition_at"] =
      cfg.fit_options.transition_at == TransitionEvaluation::transformed_abscissa ? "transformed"
                                                                                  : "original";
  return j;
}

inline TransitionEvaluation parse_transition(const std::string& s) {
  if (s == "transformed") return TransitionEvaluation::transformed_abscissa;
  if (s == "original") return TransitionEvaluation::original_abscissa;
  throw Error(ErrorKind::contract, "transition_at must be 'transformed' or 'original'");
}

/// Missing keys keep the defaults of `base`.
inline TrialConfig trial_from_json(const Json& j, TrialConfig base = {}) {
  TrialConfig cfg = std::move(base);
  if (j.contains("truth_model")) cfg.truth_model = ModelSpec::parse(j["truth_model"].get<std::string>());
  if (j.contains("truth_params")) cfg.truth_params = j["truth_params"].get<ParamVector>();
  if (j.contains("regression")) cfg.regression = ModelSpec::parse(j["regression"].get<std::string>());
  if (j.contains("n")) cfg.n = j["n"].get<std::size_t>();
  if (j.contains("x_min")) cfg.x_min = j["x_min"].get<double>();
  if (j.contains("x_max")) cfg.x_max = j["x_max"].get<double>();
  if (j.contains("spacing")) {
    const auto s = j["spacing"].get<std::string>();
    detail::require(s == "equal" || s == "uniform", ErrorKind::contract,
                    "spacing must be 'equal' or 'uniform'");
    cfg.spacing = s == "equal" ? XSpacing::equal : XSpacing::uniform_random;
  }
  if (j.contains("noise")) {
    const Json& nz = j["noise"];
    cfg.noise_law = StretchedGaussian(nz.value("alpha", cfg.noise_law.alpha()),
                                      nz.value("beta", cfg.noise_law.beta()),
                                      nz.value("diffusivity", cfg.noise_law.diffusivity()),
                                      nz.value("time", cfg.noise_law.time()));
  }
  if (j.contains("eta")) cfg.eta = j["eta"].get<double>();
  if (j.contains("beta")) cfg.beta = j["beta"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("starts")) cfg.fit_options.nonlinear.starts = j["starts"].get<unsigned>();
  if (j.contains("transition_at")) {
    cfg.fit_options.transition_at = parse_transition(j["transition_at"].get<std::string>());
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Report tables

inline io::CsvTable summary_table(const std::string& label, const ExperimentReport& r) {
  io::CsvTable t;
  t.header = {"config",           "repetitions",        "valid_trials",       "excluded_trials",
              "win_rate_error1",  "win_rate_error2",    "lsm_error1_median",  "lsm_error1_iqr",
              "lsm_error2_median", "lsm_error2_iqr",    "slsm_error1_median", "slsm_error1_iqr",
              "slsm_error2_median", "slsm_error2_iqr",  "representative_trial"};
  const auto rep = r.representative_trial();
  t.add_row({label, static_cast<std::int64_t>(r.repetitions),
             static_cast<std::int64_t>(r.valid_trials),
             static_cast<std::int64_t>(r.excluded_trials), r.win_rate_error1, r.win_rate_error2,
             r.lsm_error1.median, r.lsm_error1.iqr, r.lsm_error2.median, r.lsm_error2.iqr,
             r.slsm_error1.median, r.slsm_error1.iqr, r.slsm_error2.median, r.slsm_error2.iqr,
             rep ? static_cast<std::int64_t>(*rep) : std::int64_t{-1}});
  return t;
}

/// Parameter table of one trial: rows f, LSM, Stretched-LSM.
inline io::CsvTable parameter_table(const TrialConfig& cfg, const TrialReport& trial) {
  static const char* names[] = {"a", "b", "c", "d", "e", "f", "g", "h"};
  io::CsvTable t;
  t.header = {"method"};
  const std::size_t p = cfg.regression.param_count();
  for (std::size_t k = 0; k < p; ++k) {
    t.header.push_back(k < std::size(names) ? names[k] : "p" + std::to_string(k));
  }
  t.header.push_back("Error1");
  t.header.push_back("Error2");

  auto row = [&](const std::string& label, const ParamVector& params, double e1, double e2) {
    std::vector<io::Cell> cells{label};
    for (std::size_t k = 0; k < p; ++k) cells.emplace_back(k < params.size() ? params[k] : 0.0);
    cells.emplace_back(e1);
    cells.emplace_back(e2);
    t.add_row(std::move(cells));
  };
  row("f", cfg.truth_params, 0.0, 0.0);
  row("LSM", trial.lsm_fit.params, trial.lsm_error1, trial.lsm_error2);
  row("Stretched-LSM", trial.slsm_fit.final.params, trial.slsm_error1, trial.slsm_error2);
  return t;
}

/// Point sets for redrawing a fit figure.
inline io::CsvTable figure_table(const TrialConfig& cfg, const TrialReport& trial) {
  io::CsvTable t;
  t.header = {"x", "y_noisy", "f_true", "F_lsm", "F_slsm"};
  const auto& x = trial.data.x;
  const auto truth = predict(cfg.truth_model, cfg.truth_params, x);
  const auto lsm = predict(cfg.regression, trial.lsm_fit.params, x);
  const auto slsm = predict(trial.slsm_fit, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    t.add_row({x[i], trial.data.y[i], truth[i], lsm[i], slsm[i]});
  }
  return t;
}

inline Json experiment_json(const ExperimentReport& r) {
  Json j;
  j["config"] = to_json(r.config);
  j["repetitions"] = r.repetitions;
  j["valid_trials"] = r.valid_trials;
  j["excluded_trials"] = r.excluded_trials;
  j["win_rate_error1"] = r.win_rate_error1;
  j["win_rate_error2"] = r.win_rate_error2;
  auto summary = [](const ErrorSummary& s) {
    return Json{{"median", s.median}, {"q1", s.q1}, {"q3", s.q3}, {"iqr", s.iqr}};
  };
  j["summary"] = {{"lsm_error1", summary(r.lsm_error1)},
                  {"lsm_error2", summary(r.lsm_error2)},
                  {"slsm_error1", summary(r.slsm_error1)},
                  {"slsm_error2", summary(r.slsm_error2)}};
  Json trials = Json::array();
  for (const auto& t : r.trials) {
    Json row;
    row["index"] = t.index;
    row["seed"] = t.seed;
    if (t.report) {
      row["lsm_error1"] = t.report->lsm_error1;
      row["lsm_error2"] = t.report->lsm_error2;
      row["slsm_error1"] = t.report->slsm_error1;
      row["slsm_error2"] = t.report->slsm_error2;
      row["lsm_converged"] = t.report->lsm_fit.converged;
      row["slsm_converged"] =
          t.report->slsm_fit.transition.converged && t.report->slsm_fit.final.converged;
    } else {
      row["failure"] = t.failure;
    }
    trials.push_back(std::move(row));
  }
  j["trials"] = std::move(trials);
  return j;
}

// ---------------------------------------------------------------------------
// Option plumbing

/// Values from --config fill every option not given explicitly on the command line.
class ConfigFile {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    Json j;
    try {
      j = Json::parse(io::read_text(path));
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::io, "config '" + path + "': " + e.what());
    }
    // a run manifest carries its resolved options under "config"
    if (j.contains("config") && j["config"].is_object()) j = j["config"];
    detail::require(j.is_object(), ErrorKind::io, "config '" + path + "' is not a JSON object");
    values_ = std::move(j);
  }

  template <class T>
  void fill(const char* key, const CLI::Option* opt, T& field) const {
    if (opt != nullptr && opt->count() > 0) return;
    if (!values_.contains(key)) return;
    try {
      field = values_[key].get<T>();
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::io, std::string("config key '") + key + "': " + e.what());
    }
  }

  const Json& values() const noexcept { return values_; }

 private:
  Json values_ = Json::object();
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  unsigned threads = 1;
  std::string config;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

inline void emit(const std::string& out_path, const std::string& content, std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    out << content;
  } else {
    io::write_text(out_path, content);
  }
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  detail::require(!ec && fs::is_directory(dir), ErrorKind::io,
                  "cannot create output directory '" + dir.string() + "'");
}

inline std::vector<ConfigTag> resolve_tags(const std::vector<std::string>& names) {
  if (names.empty()) return benchmark_grid();
  std::vector<ConfigTag> tags;
  for (const auto& n : names) tags.push_back(ConfigTag::parse(n));
  return tags;
}

// ---------------------------------------------------------------------------
// Commands

struct SampleArgs {
  double alpha = 1.0;
  double beta = 1.0;
  double diffusivity = 0.25;
  double time = 1.0;
  std::size_t count = 1000;
  std::string method = "rejection";
};

inline int cmd_sample(const SampleArgs& a, const Globals& g, std::ostream& out) {
  detail::require(a.method == "exact" || a.method == "rejection", ErrorKind::contract,
                  "sample: method must be 'exact' or 'rejection'");
  detail::require(a.count >= 1, ErrorKind::contract, "sample: -n must be at least 1");
  const StretchedGaussian law(a.alpha, a.beta, a.diffusivity, a.time);
  Rng rng(g.seed);
  const auto values = a.method == "exact" ? sample_exact(law, rng, a.count)
                                          : sample_rejection(law, rng, a.count);
  io::RunManifest m;
  m.command = "sample";
  m.seed = g.seed;
  m.config = {{"alpha", a.alpha},   {"beta", a.beta},     {"diffusivity", a.diffusivity},
              {"time", a.time},     {"count", a.count},   {"method", a.method},
              {"seed", g.seed},     {"out", g.out}};
  if (!g.out.empty()) m.outputs.push_back(g.out);
  emit(g.out, io::sample_file(m, values), out);
  return 0;
}

struct FitArgs {
  std::string input;
  std::string model = "poly2";
  std::string method = "lsm";
  double beta = 1.0;
  unsigned starts = 15;
  std::string transition_at = "transformed";
};

inline int cmd_fit(const FitArgs& a, const Globals& g, std::ostream& out) {
  detail::require(!a.input.empty(), ErrorKind::contract, "fit: --input is required");
  detail::require(a.method == "lsm" || a.method == "stretched", ErrorKind::contract,
                  "fit: method must be 'lsm' or 'stretched'");
  const ModelSpec model = ModelSpec::parse(a.model);
  const Dataset data = io::parse_xy_csv(io::read_text(a.input));

  StretchedOptions opt;
  opt.nonlinear.starts = a.starts;
  opt.nonlinear.allow_nonconverged = true;
  opt.transition_at = parse_transition(a.transition_at);

  io::RunManifest m;
  m.command = "fit";
  m.seed = g.seed;
  m.config = {{"input", a.input},   {"model", a.model},   {"method", a.method},
              {"beta", a.beta},     {"starts", a.starts}, {"transition_at", a.transition_at},
              {"seed", g.seed},     {"out", g.out}};
  if (!g.out.empty()) m.outputs.push_back(g.out);

  Json report;
  report["manifest"] = m.to_json();
  report["model"] = model.name();
  report["method"] = a.method;
  bool converged = false;
  if (a.method == "lsm") {
    const FitResult r = fit(model, data, opt.nonlinear);
    report["params"] = r.params;
    report["sse"] = r.sse;
    report["iterations"] = r.iterations;
    report["converged"] = r.converged;
    converged = r.converged;
  } else {
    const StretchedFit r = stretched_fit(model, data, a.beta, opt);
    report["params"] = r.final.params;
    report["sse"] = r.final.sse;
    report["iterations"] = r.final.iterations;
    converged = r.transition.converged && r.final.converged;
    report["converged"] = converged;
    report["stages"] = {{"beta", r.beta},
                        {"transition", io::to_json(r.transition)},
                        {"final", io::to_json(r.final)}};
  }
  emit(g.out, report.dump(2) + "\n", out);
  return converged ? 0 : exit_code(ErrorKind::non_convergence);
}

struct MonteCarloArgs {
  std::vector<std::string> configs;
  std::size_t repetitions = 100;
};

inline int cmd_experiment(const MonteCarloArgs& a, const Globals& g, const ConfigFile& file,
                          std::ostream& out) {
  const fs::path dir = g.out.empty() ? fs::path("experiment") : fs::path(g.out);
  ensure_directory(dir);

  struct Job {
    std::string label;
    std::string stem;
    TrialConfig cfg;
  };
  std::vector<Job> jobs;
  if (file.values().contains("trial")) {
    TrialConfig cfg = trial_from_json(file.values()["trial"]);
    cfg.seed = g.seed;
    jobs.push_back({"custom", "custom", cfg});
  } else {
    for (const auto& tag : resolve_tags(a.configs)) {
      jobs.push_back({tag.str(), tag.file_stem(), tag.config(g.seed)});
    }
  }

  io::RunManifest m;
  m.command = "experiment";
  m.seed = g.seed;
  m.config = {{"configs", a.configs}, {"repetitions", a.repetitions}, {"seed", g.seed},
              {"threads", g.threads}, {"out", dir.string()}};
  if (file.values().contains("trial")) m.config["trial"] = file.values()["trial"];

  std::vector<std::pair<Job, ExperimentReport>> done;
  for (const auto& job : jobs) {
    done.emplace_back(job, run_monte_carlo(job.cfg, a.repetitions, g.threads));
    m.outputs.push_back((dir / ("experiment_" + job.stem + ".json")).string());
    m.outputs.push_back((dir / ("summary_" + job.stem + ".csv")).string());
  }
  for (const auto& [job, report] : done) {
    Json j = experiment_json(report);
    j["label"] = job.label;
    io::write_text(dir / ("experiment_" + job.stem + ".json"), j.dump(2) + "\n");
    io::write_text(dir / ("summary_" + job.stem + ".csv"), summary_table(job.label, report).str());
    out << job.label << ": win_rate_error1=" << report.win_rate_error1
        << " win_rate_error2=" << report.win_rate_error2 << " valid=" << report.valid_trials
        << "/" << report.repetitions << "\n";
  }
  io::write_text(dir / "manifest.json", m.to_json().dump(2) + "\n");
  return 0;
}

inline int cmd_tables(const MonteCarloArgs& a, const Globals& g, std::ostream& out) {
  const fs::path dir = g.out.empty() ? fs::path("tables") : fs::path(g.out);
  ensure_directory(dir);
  const auto tags = resolve_tags(a.configs);

  io::RunManifest m;
  m.command = "tables";
  m.seed = g.seed;
  m.config = {{"configs", a.configs}, {"repetitions", a.repetitions}, {"seed", g.seed},
              {"threads", g.threads}, {"out", dir.string()}};

  for (const auto& tag : tags) {
    const TrialConfig cfg = tag.config(g.seed);
    const ExperimentReport report = run_monte_carlo(cfg, a.repetitions, g.threads);
    const auto rep = report.representative_trial();
    detail::require(rep.has_value(), ErrorKind::numeric,
                    "tables: every trial failed for " + tag.str());
    const TrialReport& trial = *report.trials[*rep].report;

    const std::string stem = tag.file_stem();
    io::write_text(dir / ("table_" + stem + ".csv"), parameter_table(cfg, trial).str());
    io::write_text(dir / ("summary_" + stem + ".csv"), summary_table(tag.str(), report).str());
    io::write_text(dir / ("figure_" + stem + ".csv"), figure_table(cfg, trial).str());
    for (const char* kind : {"table_", "summary_", "figure_"}) {
      m.outputs.push_back((dir / (kind + stem + ".csv")).string());
    }
    out << tag.str() << ": median Error2 lsm=" << report.lsm_error2.median
        << " slsm=" << report.slsm_error2.median << " win_rate_error2=" << report.win_rate_error2
        << "\n";
  }
  io::write_text(dir / "manifest.json", m.to_json().dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Stretched least squares toolkit", "slsm"};
  app.require_subcommand(1);
  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Base random seed");
  g.out_opt = app.add_option("--out", g.out, "Output file or directory");
  g.threads_opt = app.add_option("--threads", g.threads, "Worker threads for Monte-Carlo runs");
  app.add_option("--config", g.config, "JSON config file or run manifest");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw stretched Gaussian variates");
  sample->fallthrough();
  auto* o_alpha = sample->add_option("--alpha", sa.alpha, "Time exponent alpha in (0, 1]");
  auto* o_beta = sample->add_option("--beta", sa.beta, "Space exponent beta in (0, 1]");
  auto* o_d = sample->add_option("-D,--diffusivity", sa.diffusivity, "Diffusion coefficient");
  auto* o_t = sample->add_option("-t,--time", sa.time, "Evaluation time");
  auto* o_n = sample->add_option("-n,--count", sa.count, "Number of draws");
  auto* o_m = sample->add_option("--method", sa.method, "exact | rejection");

  FitArgs fa;
  auto* fitcmd = app.add_subcommand("fit", "Fit a model to an (x, y) CSV");
  fitcmd->fallthrough();
  auto* f_in = fitcmd->add_option("--input", fa.input, "CSV with x,y columns");
  auto* f_model = fitcmd->add_option("--model", fa.model, "polyN | sin");
  auto* f_method = fitcmd->add_option("--method", fa.method, "lsm | stretched");
  auto* f_beta = fitcmd->add_option("--beta", fa.beta, "Horizontal reset exponent");
  auto* f_starts = fitcmd->add_option("--starts", fa.starts, "Sinusoid multi-start count (1..15)");
  auto* f_tr = fitcmd->add_option("--transition-at", fa.transition_at, "transformed | original");

  MonteCarloArgs ea;
  auto* experiment = app.add_subcommand("experiment", "Monte-Carlo comparison of LSM and Stretched-LSM");
  experiment->fallthrough();
  auto* e_cfg = experiment->add_option("--configs", ea.configs, "Subset, e.g. poly:b0.4:e30");
  auto* e_rep = experiment->add_option("--repetitions", ea.repetitions, "Trials per config");

  MonteCarloArgs ta;
  auto* tables = app.add_subcommand("tables", "Parameter tables, summaries and figure data");
  tables->fallthrough();
  auto* t_cfg = tables->add_option("--configs", ta.configs, "Subset, e.g. poly:b0.4:e30");
  auto* t_rep = tables->add_option("--repetitions", ta.repetitions, "Trials per config");

  std::vector<std::string> argv_store = std::move(args);
  std::reverse(argv_store.begin(), argv_store.end());
  try {
    app.parse(argv_store);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    ConfigFile file;
    file.load(g.config);
    file.fill("seed", g.seed_opt, g.seed);
    file.fill("out", g.out_opt, g.out);
    file.fill("threads", g.threads_opt, g.threads);

    if (sample->parsed()) {
      file.fill("alpha", o_alpha, sa.alpha);
      file.fill("beta", o_beta, sa.beta);
      file.fill("diffusivity", o_d, sa.diffusivity);
      file.fill("time", o_t, sa.time);
      file.fill("count", o_n, sa.count);
      file.fill("method", o_m, sa.method);
      return cmd_sample(sa, g, out);
    }
    if (fitcmd->parsed()) {
      file.fill("input", f_in, fa.input);
      file.fill("model", f_model, fa.model);
      file.fill("method", f_method, fa.method);
      file.fill("beta", f_beta, fa.beta);
      file.fill("starts", f_starts, fa.starts);
      file.fill("transition_at", f_tr, fa.transition_at);
      return cmd_fit(fa, g, out);
    }
    if (experiment->parsed()) {
      file.fill("configs", e_cfg, ea.configs);
      file.fill("repetitions", e_rep, ea.repetitions);
      return cmd_experiment(ea, g, file, out);
    }
    file.fill("configs", t_cfg, ta.configs);
    file.fill("repetitions", t_rep, ta.repetitions);
    return cmd_tables(ta, g, out);
  } catch (const Error& e) {
    err << "slsm: " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const Json::exception& e) {
    err << "slsm: json error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "slsm: " << e.what() << "\n";
    return 4;
  }
}

inline int main_entry(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace slsm::cli
