#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "slsm/distribution.hpp"
#include "slsm/error.hpp"
#include "slsm/lsq.hpp"
#include "slsm/random.hpp"
#include "slsm/stretched_lsm.hpp"

namespace slsm {

enum class XSpacing { equal, uniform_random };

/// One synthetic regression problem: truth f, regression family, sampling grid,
/// noise law and level, Stretched-LSM exponent, seed.
struct TrialConfig {
  ModelSpec truth_model = ModelSpec::polynomial(2);
  ParamVector truth_params{1.0, 1.0, 2.0};
  ModelSpec regression = ModelSpec::polynomial(2);
  std::size_t n = 200;
  double x_min = 0.0;
  double x_max = 1.0;
  XSpacing spacing = XSpacing::equal;
  StretchedGaussian noise_law{1.0, 0.4, 0.25, 1.0};
  double eta = 30.0;  // noise level in percent
  double beta = 0.4;  // horizontal reset exponent
  std::uint64_t seed = 0;
  StretchedOptions fit_options;

  void validate() const {
    using detail::require;
    require(truth_params.size() == truth_model.param_count(), ErrorKind::contract,
            "trial config: truth parameter count does not match the truth model");
    require(n >= 2 && n >= regression.param_count(), ErrorKind::contract,
            "trial config: n must be at least max(2, regression parameter count)");
    require(std::isfinite(x_min) && std::isfinite(x_max) && x_min >= 0.0 && x_max > x_min,
            ErrorKind::contract, "trial config: x domain must satisfy 0 <= x_min < x_max");
    require(std::isfinite(eta) && eta >= 0.0, ErrorKind::contract,
            "trial config: eta must be non-negative");
    require(std::isfinite(beta) && beta > 0.0 && beta <= 1.0, ErrorKind::domain,
            "trial config: beta must lie in (0, 1]");
  }
};

/// The benchmark grid: f = x^2 + x + 2 fitted by a quadratic, or f = sin x fitted by
/// a sin(bx + c) + d; n = 200 equally spaced on [0, 1]; noise law alpha = 1,
/// t = 1, D = 1/4 (scale 1) with the stretch exponent equal to beta.
inline TrialConfig benchmark_config(ModelSpec::Family family, double beta, double eta,
                                    std::uint64_t seed = 0) {
  TrialConfig cfg;
  if (family == ModelSpec::Family::polynomial) {
    cfg.truth_model = ModelSpec::polynomial(2);
    cfg.truth_params = {1.0, 1.0, 2.0};
  } else {
    cfg.truth_model = ModelSpec::sinusoid();
    cfg.truth_params = {1.0, 1.0, 0.0, 0.0};
  }
  cfg.regression = cfg.truth_model;
  cfg.noise_law = StretchedGaussian(1.0, beta, 0.25, 1.0);
  cfg.eta = eta;
  cfg.beta = beta;
  cfg.seed = seed;
  return cfg;
}

/// Identifies one benchmark-grid configuration; text form "poly:b0.4:e30".
struct ConfigTag {
  ModelSpec::Family family = ModelSpec::Family::polynomial;
  double beta = 0.4;
  double eta = 30.0;

  static std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

  static ConfigTag parse(const std::string& text) {
    auto fail = [&] {
      return Error(ErrorKind::contract,
                   "config tag '" + text + "' does not match MODEL:bBETA:eETA");
    };
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? c1 : text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw fail();
    const std::string model = text.substr(0, c1);
    const std::string b = text.substr(c1 + 1, c2 - c1 - 1);
    const std::string e = text.substr(c2 + 1);
    if (b.size() < 2 || b[0] != 'b' || e.size() < 2 || e[0] != 'e') throw fail();
    ConfigTag tag;
    if (model == "poly") {
      tag.family = ModelSpec::Family::polynomial;
    } else if (model == "sin") {
      tag.family = ModelSpec::Family::sinusoid;
    } else {
      throw fail();
    }
    auto number = [&](const std::string& s) {
      double v = 0.0;
      const auto res = std::from_chars(s.data() + 1, s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw fail();
      return v;
    };
    tag.beta = number(b);
    tag.eta = number(e);
    return tag;
  }

  std::string model_name() const {
    return family == ModelSpec::Family::polynomial ? "poly" : "sin";
  }
  std::string str() const {
    return model_name() + ":b" + format_number(beta) + ":e" + format_number(eta);
  }
  /// Filesystem-safe form, e.g. "poly_b0.4_e30".
  std::string file_stem() const {
    return model_name() + "_b" + format_number(beta) + "_e" + format_number(eta);
  }

  TrialConfig config(std::uint64_t seed) const { return benchmark_config(family, beta, eta, seed); }
};

/// The eight configurations: {poly, sin} x beta {0.4, 0.8} x eta {30, 50}.
inline std::vector<ConfigTag> benchmark_grid() {
  std::vector<ConfigTag> tags;
  for (auto family : {ModelSpec::Family::polynomial, ModelSpec::Family::sinusoid}) {
    for (double eta : {30.0, 50.0}) {
      for (double beta : {0.4, 0.8}) tags.push_back({family, beta, eta});
    }
  }
  return tags;
}

/// Abscissas per cfg.spacing, then y_i = f(x_i) + eta/100 * standardized
/// rejection-sampled noise.
inline Dataset make_noisy_dataset(const TrialConfig& cfg, Rng& rng) {
  cfg.validate();
  Dataset data;
  data.x.resize(cfg.n);
  if (cfg.spacing == XSpacing::equal) {
    const double width = cfg.x_max - cfg.x_min;
    const double last = static_cast<double>(cfg.n - 1);
    for (std::size_t i = 0; i < cfg.n; ++i) {
      data.x[i] = cfg.x_min + width * (static_cast<double>(i) / last);
    }
    data.x.back() = cfg.x_max;
  } else {
    for (double& xi : data.x) xi = cfg.x_min + (cfg.x_max - cfg.x_min) * uniform_open(rng);
    std::sort(data.x.begin(), data.x.end());
  }

  const std::vector<double> noise =
      standardize(sample_rejection(cfg.noise_law, rng, cfg.n));
  const double amplitude = cfg.eta / 100.0;
  data.y = predict(cfg.truth_model, cfg.truth_params, data.x);
  for (std::size_t i = 0; i < cfg.n; ++i) data.y[i] += noise[i] * amplitude;
  return data;
}

/// max_i |fitted_i - truth_i|.
inline double error1(std::span<const double> fitted, std::span<const double> truth) {
  detail::require(!fitted.empty() && fitted.size() == truth.size(), ErrorKind::contract,
                  "error1: need two non-empty vectors of equal length");
  double worst = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    worst = std::max(worst, std::abs(fitted[i] - truth[i]));
  }
  return worst;
}

/// sqrt(mean_i (fitted_i - truth_i)^2).
inline double error2(std::span<const double> fitted, std::span<const double> truth) {
  detail::require(!fitted.empty() && fitted.size() == truth.size(), ErrorKind::contract,
                  "error2: need two non-empty vectors of equal length");
  double ss = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const double d = fitted[i] - truth[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(fitted.size()));
}

namespace detail {

template <class F>
std::vector<double> tabulate(F&& f, std::span<const double> x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (double xi : x) out.push_back(static_cast<double>(f(xi)));
  return out;
}

}  // namespace detail

template <std::invocable<double> F, std::invocable<double> G>
double error1(F&& fitted, G&& truth, std::span<const double> x) {
  detail::require(!x.empty(), ErrorKind::contract, "error1: empty abscissa set");
  return error1(detail::tabulate(fitted, x), detail::tabulate(truth, x));
}

template <std::invocable<double> F, std::invocable<double> G>
double error2(F&& fitted, G&& truth, std::span<const double> x) {
  detail::require(!x.empty(), ErrorKind::contract, "error2: empty abscissa set");
  return error2(detail::tabulate(fitted, x), detail::tabulate(truth, x));
}

struct TrialReport {
  std::uint64_t seed = 0;
  Dataset data;
  FitResult lsm_fit;
  StretchedFit slsm_fit;
  double lsm_error1 = 0.0;
  double lsm_error2 = 0.0;
  double slsm_error1 = 0.0;
  double slsm_error2 = 0.0;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

/// Builds the noisy dataset from Rng(cfg.seed), fits plain LSM and Stretched-LSM,
/// and scores both against the truth at the data abscissas. A non-converged
/// nonlinear fit is kept with converged = false.
inline TrialReport run_trial(const TrialConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  TrialReport report;
  report.seed = cfg.seed;
  report.data = make_noisy_dataset(cfg, rng);

  StretchedOptions opt = cfg.fit_options;
  opt.nonlinear.allow_nonconverged = true;
  report.lsm_fit = fit(cfg.regression, report.data, opt.nonlinear);
  report.slsm_fit = stretched_fit(cfg.regression, report.data, cfg.beta, opt);

  const std::vector<double> truth = predict(cfg.truth_model, cfg.truth_params, report.data.x);
  const std::vector<double> lsm = predict(cfg.regression, report.lsm_fit.params, report.data.x);
  const std::vector<double> slsm = predict(report.slsm_fit, report.data.x);
  report.lsm_error1 = error1(lsm, truth);
  report.lsm_error2 = error2(lsm, truth);
  report.slsm_error1 = error1(slsm, truth);
  report.slsm_error2 = error2(slsm, truth);
  detail::require(std::isfinite(report.lsm_error1) && std::isfinite(report.slsm_error1),
                  ErrorKind::numeric, "run_trial: non-finite error metric");
  return report;
}

struct TrialOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::optional<TrialReport> report;  // empty when the trial failed
  std::string failure;

  friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

struct ErrorSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;

  friend bool operator==(const ErrorSummary&, const ErrorSummary&) = default;
};

enum class Metric { error1, error2 };

/// Linear-interpolation quantile of an unsorted sample.
inline double quantile(std::vector<double> values, double q) {
  detail::require(!values.empty(), ErrorKind::contract, "quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline ErrorSummary summarize(const std::vector<double>& values) {
  if (values.empty()) return {};
  ErrorSummary s;
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  s.iqr = s.q3 - s.q1;
  return s;
}

/// Strict improvement of Stretched-LSM over LSM on one metric. Ties lose.
inline bool stretched_wins(const TrialReport& r, Metric m) {
  return m == Metric::error1 ? r.slsm_error1 < r.lsm_error1 : r.slsm_error2 < r.lsm_error2;
}

struct WinCount {
  std::size_t wins = 0;
  std::size_t valid = 0;
  double rate() const noexcept {
    return valid == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(valid);
  }
};

inline WinCount count_wins(std::span<const TrialOutcome> outcomes, Metric m) {
  WinCount c;
  for (const auto& o : outcomes) {
    if (!o.report) continue;
    ++c.valid;
    if (stretched_wins(*o.report, m)) ++c.wins;
  }
  return c;
}

struct ExperimentReport {
  TrialConfig config;
  std::size_t repetitions = 0;
  std::vector<TrialOutcome> trials;
  std::size_t valid_trials = 0;
  std::size_t excluded_trials = 0;
  double win_rate_error1 = 0.0;
  double win_rate_error2 = 0.0;
  ErrorSummary lsm_error1;
  ErrorSummary lsm_error2;
  ErrorSummary slsm_error1;
  ErrorSummary slsm_error2;

  /// Valid trial whose slsm Error2 is the (lower) median, ties by trial index.
  std::optional<std::size_t> representative_trial() const {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      if (trials[i].report) order.push_back(i);
    }
    if (order.empty()) return std::nullopt;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ea = trials[a].report->slsm_error2;
      const double eb = trials[b].report->slsm_error2;
      return ea != eb ? ea < eb : a < b;
    });
    return order[(order.size() - 1) / 2];
  }
};

/// Runs `repetitions` trials; trial k uses seed derive_seed(cfg.seed, k). Failed
/// trials are recorded and left out of the win-rate denominators. The report
/// does not depend on `threads`.
inline ExperimentReport run_monte_carlo(const TrialConfig& cfg, std::size_t repetitions,
                                        unsigned threads = 1) {
  cfg.validate();
  detail::require(repetitions >= 1, ErrorKind::contract,
                  "run_monte_carlo: repetitions must be at least 1");

  ExperimentReport report;
  report.config = cfg;
  report.repetitions = repetitions;
  report.trials.resize(repetitions);

  auto run_one = [&](std::size_t k) {
    TrialOutcome& slot = report.trials[k];
    slot.index = k;
    slot.seed = derive_seed(cfg.seed, k);
    TrialConfig trial_cfg = cfg;
    trial_cfg.seed = slot.seed;
    try {
      slot.report = run_trial(trial_cfg);
    } catch (const std::exception& e) {
      slot.failure = e.what();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(repetitions)));
  if (workers == 1) {
    for (std::size_t k = 0; k < repetitions; ++k) run_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < repetitions; k = next++) run_one(k);
      });
    }
  }

  std::vector<double> le1, le2, se1, se2;
  for (const auto& t : report.trials) {
    if (!t.report) continue;
    le1.push_back(t.report->lsm_error1);
    le2.push_back(t.report->lsm_error2);
    se1.push_back(t.report->slsm_error1);
    se2.push_back(t.report->slsm_error2);
  }
  report.valid_trials = le1.size();
  report.excluded_trials = repetitions - report.valid_trials;
  report.win_rate_error1 = count_wins(report.trials, Metric::error1).rate();
  report.win_rate_error2 = count_wins(report.trials, Metric::error2).rate();
  report.lsm_error1 = summarize(le1);
  report.lsm_error2 = summarize(le2);
  report.slsm_error1 = summarize(se1);
  report.slsm_error2 = summarize(se2);
  return report;
}

/// Win rate over the union of several experiments' valid trials.
inline double pooled_win_rate(std::span<const ExperimentReport> reports, Metric m) {
  WinCount total;
  for (const auto& r : reports) {
    const WinCount c = count_wins(r.trials, m);
    total.wins += c.wins;
    total.valid += c.valid;
  }
  return total.rate();
}

}  // namespace slsm
