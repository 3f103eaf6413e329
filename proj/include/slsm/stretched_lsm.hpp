#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slsm/error.hpp"
#include "slsm/hausdorff.hpp"
#include "slsm/lsq.hpp"

namespace slsm {

enum class FitStage { transition, final };

inline const char* to_string(FitStage stage) {
  return stage == FitStage::transition ? "transition" : "final";
}

/// A fit error raised inside one stage of stretched_fit.
class StageError : public Error {
 public:
  StageError(FitStage stage, ErrorKind kind, const std::string& what)
      : Error(kind, std::string("stretched_fit [") + to_string(stage) + " stage]: " + what),
        stage_(stage) {}

  FitStage stage() const noexcept { return stage_; }

 private:
  FitStage stage_;
};

/// Where the transition fit F_T is evaluated to produce the stage-3 ordinates.
enum class TransitionEvaluation {
  transformed_abscissa,  // F_T(xx_i), the default
  original_abscissa,     // F_T(x_i), kept for sensitivity studies
};

struct StretchedOptions {
  NonlinearOptions nonlinear;
  TransitionEvaluation transition_at = TransitionEvaluation::transformed_abscissa;
};

struct StretchedFit {
  double beta = 1.0;
  std::vector<double> transformed_x;      // xx_i = x_i + x_i^beta
  std::vector<double> transition_points;  // F_Ti, the stage-3 ordinates
  std::vector<double> final_x;            // stage-3 abscissas, the original x_i
  FitResult transition;
  FitResult final;

  friend bool operator==(const StretchedFit&, const StretchedFit&) = default;
};

namespace detail {

template <class Fn>
FitResult run_stage(FitStage stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.kind(), e.what());
  }
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Stage-3 sinusoid: warm start from the transition parameters with b rescaled
// by mean(xx) / mean(x); the multi-start grid is the fallback.
inline FitResult refit_sinusoid(const Dataset& points, const StretchedFit& fit,
                                const NonlinearOptions& opt) {
  const double mx = mean_of(fit.final_x);
  const double ratio = mx > 0.0 ? mean_of(fit.transformed_x) / mx : 1.0;
  ParamVector warm = fit.transition.params;
  warm[1] *= ratio;

  NonlinearOptions lenient = opt;
  lenient.allow_nonconverged = true;
  FitResult best = fit_nonlinear(points, warm, lenient);
  if (!best.converged) {
    FitResult grid = fit_nonlinear(points, std::nullopt, lenient);
    if (grid.converged || grid.sse < best.sse) best = std::move(grid);
  }
  if (!best.converged && !opt.allow_nonconverged) {
    throw NonConvergenceError("warm start and multi-start grid both failed to converge", best);
  }
  return best;
}

}  // namespace detail

/// Stretched least squares:
///   1. xx_i = x_i + x_i^beta
///   2. transition fit F_T of the family to (xx_i, y_i)
///   3. final fit of the family to (x_i, F_T(xx_i))
/// Predictions of the method come from `final`.
inline StretchedFit stretched_fit(const ModelSpec& model, const Dataset& data, double beta,
                                  const StretchedOptions& opt = {}) {
  data.validate();
  StretchedFit out;
  out.beta = beta;
  out.transformed_x = reset_horizontal(data.x, beta);

  const Dataset transformed{out.transformed_x, data.y};
  out.transition = detail::run_stage(FitStage::transition,
                                     [&] { return fit(model, transformed, opt.nonlinear); });

  const std::vector<double>& eval_at =
      opt.transition_at == TransitionEvaluation::transformed_abscissa ? out.transformed_x
                                                                      : data.x;
  out.transition_points = predict(model, out.transition.params, eval_at);
  out.final_x = data.x;

  const Dataset points{out.final_x, out.transition_points};
  out.final = detail::run_stage(FitStage::final, [&] {
    if (model.is_polynomial()) return fit_linear(model.degree(), points);
    return detail::refit_sinusoid(points, out, opt.nonlinear);
  });
  return out;
}

inline std::vector<double> predict(const StretchedFit& fit, std::span<const double> x) {
  return predict(fit.final.model, fit.final.params, x);
}

}  // namespace slsm
