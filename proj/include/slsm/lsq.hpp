#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slsm/error.hpp"

namespace slsm {

using ParamVector = std::vector<double>;

/// Ordered observation pairs (x_i, y_i).
struct Dataset {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const noexcept { return x.size(); }

  void validate() const {
    detail::require(x.size() == y.size(), ErrorKind::contract,
                    "dataset: x and y have different lengths");
    for (std::size_t i = 0; i < x.size(); ++i) {
      detail::require(std::isfinite(x[i]) && std::isfinite(y[i]), ErrorKind::numeric,
                      "dataset: non-finite value at row " + std::to_string(i));
    }
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Regression family: polynomial a_n x^n + ... + a_0 (parameters highest degree
/// first) or sinusoid a sin(b x + c) + d (parameters a, b, c, d).
class ModelSpec {
 public:
  enum class Family { polynomial, sinusoid };

  static ModelSpec polynomial(unsigned degree) { return ModelSpec(Family::polynomial, degree); }
  static ModelSpec sinusoid() { return ModelSpec(Family::sinusoid, 0); }

  /// Accepts "polyN" (N a degree) and "sin".
  static ModelSpec parse(const std::string& name) {
    if (name == "sin" || name == "sinusoid") return sinusoid();
    if (name.rfind("poly", 0) == 0 && name.size() > 4 &&
        std::all_of(name.begin() + 4, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      const unsigned long degree = std::stoul(name.substr(4));
      detail::require(degree <= 32, ErrorKind::contract, "model: polynomial degree too large");
      return polynomial(static_cast<unsigned>(degree));
    }
    throw Error(ErrorKind::contract, "model: unknown family '" + name + "'");
  }

  Family family() const noexcept { return family_; }
  bool is_polynomial() const noexcept { return family_ == Family::polynomial; }
  unsigned degree() const noexcept { return degree_; }

  std::size_t param_count() const noexcept {
    return is_polynomial() ? degree_ + 1 : 4;
  }

  std::string name() const {
    return is_polynomial() ? "poly" + std::to_string(degree_) : "sin";
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

 private:
  ModelSpec(Family family, unsigned degree) : family_(family), degree_(degree) {}

  Family family_;
  unsigned degree_;
};

struct FitResult {
  ModelSpec model = ModelSpec::polynomial(0);
  ParamVector params;
  double sse = 0.0;
  std::uint32_t iterations = 0;
  bool converged = false;

  friend bool operator==(const FitResult&, const FitResult&) = default;
};

/// Thrown when no start of an iterative fit met the termination criterion.
/// Carries the lowest-SSE iterate found.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, FitResult best)
      : Error(ErrorKind::non_convergence, what), best_(std::move(best)) {}

  const FitResult& best() const noexcept { return best_; }

 private:
  FitResult best_;
};

inline double evaluate(const ModelSpec& model, std::span<const double> params, double x) {
  if (model.is_polynomial()) {
    double acc = 0.0;
    for (double coef : params) acc = acc * x + coef;
    return acc;
  }
  return params[0] * std::sin(params[1] * x + params[2]) + params[3];
}

inline std::vector<double> predict(const ModelSpec& model, std::span<const double> params,
                                   std::span<const double> x) {
  detail::require(params.size() == model.param_count(), ErrorKind::contract,
                  "predict: " + model.name() + " expects " +
                      std::to_string(model.param_count()) + " parameters, got " +
                      std::to_string(params.size()));
  std::vector<double> out;
  out.reserve(x.size());
  for (double xi : x) out.push_back(evaluate(model, params, xi));
  return out;
}

inline double sum_squared_residuals(const ModelSpec& model, std::span<const double> params,
                                    const Dataset& data) {
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = evaluate(model, params, data.x[i]) - data.y[i];
    sse += r * r;
  }
  return sse;
}

namespace detail {

inline std::size_t distinct_count(std::span<const double> x) {
  return std::set<double>(x.begin(), x.end()).size();
}

}  // namespace detail

/// Rows x_i^degree ... x_i^0.
inline Eigen::MatrixXd vandermonde(std::span<const double> x, unsigned degree) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto cols = static_cast<Eigen::Index>(degree) + 1;
  Eigen::MatrixXd v(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    double power = 1.0;
    for (Eigen::Index j = cols - 1; j >= 0; --j) {
      v(i, j) = power;
      power *= x[static_cast<std::size_t>(i)];
    }
  }
  return v;
}

/// Ordinary least squares on the polynomial basis, solved by a column-pivoted
/// Householder QR of the Vandermonde matrix.
inline FitResult fit_linear(unsigned degree, const Dataset& data) {
  data.validate();
  const std::size_t p = static_cast<std::size_t>(degree) + 1;
  detail::require(data.size() >= p, ErrorKind::contract,
                  "fit_linear: degree " + std::to_string(degree) + " needs at least " +
                      std::to_string(p) + " points, got " + std::to_string(data.size()));
  detail::require(detail::distinct_count(data.x) >= p, ErrorKind::singular,
                  "fit_linear: fewer distinct abscissas than parameters");

  const Eigen::MatrixXd v = vandermonde(data.x, degree);
  const Eigen::Map<const Eigen::VectorXd> y(data.y.data(),
                                            static_cast<Eigen::Index>(data.size()));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  detail::require(qr.rank() == static_cast<Eigen::Index>(p), ErrorKind::singular,
                  "fit_linear: design matrix is rank deficient");
  const Eigen::VectorXd coef = qr.solve(y);
  detail::require(coef.allFinite(), ErrorKind::numeric, "fit_linear: non-finite solution");

  FitResult result;
  result.model = ModelSpec::polynomial(degree);
  result.params.assign(coef.data(), coef.data() + coef.size());
  result.sse = sum_squared_residuals(result.model, result.params, data);
  result.iterations = 1;
  result.converged = true;
  return result;
}

/// Maps (a, b, c, d) onto the representative with b >= 0, a > 0, c in (-pi, pi].
inline ParamVector canonicalize_sinusoid(ParamVector p) {
  constexpr double pi = std::numbers::pi;
  if (p[1] < 0.0) {
    p[0] = -p[0];
    p[1] = -p[1];
    p[2] = -p[2];
  }
  if (p[0] < 0.0) {
    p[0] = -p[0];
    p[2] += pi;
  }
  p[2] = std::remainder(p[2], 2.0 * pi);
  if (p[2] <= -pi) p[2] += 2.0 * pi;
  return p;
}

/// Columns d/da, d/db, d/dc, d/dd of a sin(b x + c) + d.
inline Eigen::MatrixXd sinusoid_jacobian(std::span<const double> p, std::span<const double> x) {
  Eigen::MatrixXd j(static_cast<Eigen::Index>(x.size()), 4);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double arg = p[1] * x[i] + p[2];
    const double s = std::sin(arg);
    const double c = std::cos(arg);
    j(row, 0) = s;
    j(row, 1) = p[0] * x[i] * c;
    j(row, 2) = p[0] * c;
    j(row, 3) = 1.0;
  }
  return j;
}

struct NonlinearOptions {
  /// Number of grid starts tried when no initial guess is given (1..15).
  unsigned starts = 15;
  std::uint32_t max_iterations = 200;
  double initial_damping = 1e-3;
  double sse_tolerance = 1e-12;   // relative SSE decrease
  double step_tolerance = 1e-10;  // max |step_j| / (1 + |p_j|)
  /// Return the best iterate with converged = false instead of throwing.
  bool allow_nonconverged = false;
};

/// The fixed multi-start grid: b in {1/4, 1/2, 1, 2, 4} * 2 pi / span(x),
/// c in {-pi/2, 0, pi/2}, a = (max y - min y) / 2, d = mean y. b varies slowest.
inline std::vector<ParamVector> sinusoid_starts(const Dataset& data, unsigned count = 15) {
  constexpr double pi = std::numbers::pi;
  const auto [xmin, xmax] = std::minmax_element(data.x.begin(), data.x.end());
  const auto [ymin, ymax] = std::minmax_element(data.y.begin(), data.y.end());
  const double span = *xmax - *xmin;
  double amplitude = 0.5 * (*ymax - *ymin);
  if (amplitude <= 0.0) amplitude = 1.0;
  double mean = 0.0;
  for (double y : data.y) mean += y;
  mean /= static_cast<double>(data.size());

  std::vector<ParamVector> starts;
  for (double mult : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    for (double phase : {-pi / 2.0, 0.0, pi / 2.0}) {
      if (starts.size() == count) return starts;
      starts.push_back({amplitude, mult * 2.0 * pi / span, phase, mean});
    }
  }
  return starts;
}

namespace detail {

// Damped Gauss-Newton from a single start. The step solves the augmented
// least-squares problem [J; sqrt(lambda D)] delta = [-r; 0] by QR, D = diag(J^T J).
inline FitResult levenberg_marquardt(const Dataset& data, ParamVector p,
                                     const NonlinearOptions& opt) {
  const ModelSpec model = ModelSpec::sinusoid();
  const auto n = static_cast<Eigen::Index>(data.size());
  auto residuals = [&](std::span<const double> q) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      r(i) = evaluate(model, q, data.x[k]) - data.y[k];
    }
    return r;
  };

  Eigen::VectorXd r = residuals(p);
  double sse = r.squaredNorm();
  double lambda = opt.initial_damping;
  bool converged = sse == 0.0;
  std::uint32_t it = 0;
  Eigen::MatrixXd jac = sinusoid_jacobian(p, data.x);

  while (!converged && it < opt.max_iterations) {
    ++it;
    const Eigen::VectorXd diag = jac.colwise().squaredNorm().transpose();
    const double floor = 1e-12 * std::max(1.0, diag.maxCoeff());

    Eigen::MatrixXd aug(n + 4, 4);
    aug.topRows(n) = jac;
    aug.bottomRows(4).setZero();
    for (Eigen::Index k = 0; k < 4; ++k) aug(n + k, k) = std::sqrt(lambda * std::max(diag(k), floor));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 4);
    rhs.head(n) = -r;
    const Eigen::VectorXd step = aug.householderQr().solve(rhs);
    if (!step.allFinite()) break;

    double step_ratio = 0.0;
    ParamVector trial(p);
    for (std::size_t k = 0; k < 4; ++k) {
      const double dk = step(static_cast<Eigen::Index>(k));
      trial[k] += dk;
      step_ratio = std::max(step_ratio, std::abs(dk) / (1.0 + std::abs(p[k])));
    }
    const bool small_step = step_ratio < opt.step_tolerance;

    const Eigen::VectorXd trial_r = residuals(trial);
    const double trial_sse = trial_r.squaredNorm();
    if (std::isfinite(trial_sse) && trial_sse < sse) {
      const double decrease = (sse - trial_sse) / sse;
      p = std::move(trial);
      r = trial_r;
      sse = trial_sse;
      jac = sinusoid_jacobian(p, data.x);
      lambda = std::max(lambda / 10.0, 1e-20);
      converged = decrease < opt.sse_tolerance || small_step || sse == 0.0;
    } else {
      lambda *= 10.0;
      // no descent even for a vanishing step: stationary point
      converged = small_step || lambda > 1e30;
    }
  }

  FitResult result;
  result.model = model;
  result.params = canonicalize_sinusoid(std::move(p));
  result.sse = sse;
  result.iterations = it;
  result.converged = converged && result.params[0] != 0.0;
  return result;
}

}  // namespace detail

/// Nonlinear least squares for a sin(b x + c) + d. With `init` a single start
/// is run; otherwise the first `opt.starts` grid starts are tried and the start
/// with the lowest SSE (then lowest index) wins, converged or not. On data whose
/// infimum is the a -> inf, b -> 0 limit the winner runs into the iteration cap
/// and is reported with converged = false.
inline FitResult fit_nonlinear(const Dataset& data, const std::optional<ParamVector>& init = {},
                               const NonlinearOptions& opt = {}) {
  data.validate();
  detail::require(data.size() >= 4, ErrorKind::contract,
                  "fit_nonlinear: sinusoid needs at least 4 points, got " +
                      std::to_string(data.size()));
  detail::require(detail::distinct_count(data.x) >= 2, ErrorKind::contract,
                  "fit_nonlinear: abscissas have zero span");
  detail::require(opt.starts >= 1 && opt.starts <= 15, ErrorKind::contract,
                  "fit_nonlinear: starts must lie in 1..15");
  if (init) {
    detail::require(init->size() == 4, ErrorKind::contract,
                    "fit_nonlinear: initial guess must have 4 parameters");
  }

  const std::vector<ParamVector> starts = init ? std::vector<ParamVector>{*init}
                                               : sinusoid_starts(data, opt.starts);
  std::optional<FitResult> best;
  for (const ParamVector& start : starts) {
    FitResult candidate = detail::levenberg_marquardt(data, start, opt);
    if (!std::isfinite(candidate.sse)) continue;
    if (!best || candidate.sse < best->sse) best = std::move(candidate);
  }

  detail::require(best.has_value(), ErrorKind::numeric,
                  "fit_nonlinear: every start produced a non-finite objective");
  if (best->converged || opt.allow_nonconverged) return *best;
  throw NonConvergenceError("fit_nonlinear: lowest-SSE start did not meet the convergence "
                            "tolerance within " +
                                std::to_string(opt.max_iterations) + " iterations",
                            *best);
}

/// Dispatches to fit_linear or fit_nonlinear (multi-start) by family.
inline FitResult fit(const ModelSpec& model, const Dataset& data,
                     const NonlinearOptions& opt = {}) {
  if (model.is_polynomial()) return fit_linear(model.degree(), data);
  return fit_nonlinear(data, std::nullopt, opt);
}

}  // namespace slsm
