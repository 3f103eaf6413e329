#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slsm/error.hpp"

namespace slsm {

/// A time or space axis with fractal metric (t - t0)^alpha. Exponent 1 gives
/// the Euclidean axis and every operator below reduces to its classical form.
struct FractalAxis {
  double exponent = 1.0;
  double origin = 0.0;

  FractalAxis() = default;
  FractalAxis(double exponent_, double origin_ = 0.0) : exponent(exponent_), origin(origin_) {
    detail::require(std::isfinite(exponent) && exponent > 0.0 && exponent <= 1.0,
                    ErrorKind::domain,
                    "fractal axis: exponent must lie in (0, 1], got " + std::to_string(exponent));
    detail::require(std::isfinite(origin), ErrorKind::domain,
                    "fractal axis: origin must be finite");
  }
};

/// (point - origin)^exponent, the distance covered at unit velocity.
inline double fractal_distance(const FractalAxis& axis, double point) {
  detail::require(std::isfinite(point) && point >= axis.origin, ErrorKind::domain,
                  "fractal_distance: point lies before the axis origin");
  return std::pow(point - axis.origin, axis.exponent);
}

/// delta^exponent.
inline double metric_transform(double delta, double exponent) {
  detail::require(std::isfinite(exponent) && exponent > 0.0 && exponent <= 1.0,
                  ErrorKind::domain, "metric_transform: exponent must lie in (0, 1]");
  detail::require(std::isfinite(delta) && delta >= 0.0, ErrorKind::domain,
                  "metric_transform: delta must be non-negative");
  return std::pow(delta, exponent);
}

/// xx_i = x_i + x_i^beta. Negative abscissas are rejected.
inline std::vector<double> reset_horizontal(std::span<const double> x, double beta) {
  detail::require(std::isfinite(beta) && beta > 0.0 && beta <= 1.0, ErrorKind::domain,
                  "reset_horizontal: beta must lie in (0, 1]");
  std::vector<double> out;
  out.reserve(x.size());
  for (double xi : x) {
    detail::require(std::isfinite(xi) && xi >= 0.0, ErrorKind::domain,
                    "reset_horizontal: abscissas must be non-negative");
    out.push_back(xi + std::pow(xi, beta));
  }
  return out;
}

namespace detail {

// 8-point Gauss-Legendre rule on [-1, 1], symmetric half.
inline constexpr std::array<double, 4> gl8_nodes{
    0.1834346424956498049394761, 0.5255324099163289858177390,
    0.7966664774136267395915539, 0.9602898564975362316835609};
inline constexpr std::array<double, 4> gl8_weights{
    0.3626837833783619829651504, 0.3137066458778872873379622,
    0.2223810344533744705443560, 0.1012285362903762591525314};

}  // namespace detail

/// Hausdorff integral of v against d(tau - t0)^alpha over [origin, upper].
///
/// The substitution u = (tau - t0)^alpha turns the weight alpha (tau - t0)^(alpha-1),
/// singular at the origin, into du, so the integrand v(t0 + u^(1/alpha)) is bounded.
/// The u-interval is split into ceil(quadrature_points / 8) equal panels, each
/// integrated with the 8-point Gauss-Legendre rule.
template <std::invocable<double> F>
double hausdorff_integral(F&& v, const FractalAxis& axis, double upper,
                          std::size_t quadrature_points = 256) {
  detail::require(std::isfinite(upper) && upper > axis.origin, ErrorKind::domain,
                  "hausdorff_integral: upper limit must exceed the origin");
  detail::require(quadrature_points >= 1, ErrorKind::contract,
                  "hausdorff_integral: need at least one quadrature point");

  const std::size_t panels = (quadrature_points + 7) / 8;
  const double u_end = std::pow(upper - axis.origin, axis.exponent);
  const double h = u_end / static_cast<double>(panels);
  const double inv_exponent = 1.0 / axis.exponent;

  auto integrand = [&](double u) {
    const double value = static_cast<double>(v(axis.origin + std::pow(u, inv_exponent)));
    detail::require(std::isfinite(value), ErrorKind::numeric,
                    "hausdorff_integral: integrand is not finite");
    return value;
  };

  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * h;
    const double half = 0.5 * h;
    double panel = 0.0;
    for (std::size_t k = 0; k < detail::gl8_nodes.size(); ++k) {
      const double off = half * detail::gl8_nodes[k];
      panel += detail::gl8_weights[k] * (integrand(mid - off) + integrand(mid + off));
    }
    total += half * panel;
  }
  return total;
}

/// Hausdorff derivative dl / d(t - t0)^alpha = dl/dt / (alpha (t - t0)^(alpha-1)),
/// with dl/dt from a central difference. The default step is (point - origin) * 1e-6.
template <std::invocable<double> F>
double hausdorff_derivative(F&& l, const FractalAxis& axis, double point,
                            std::optional<double> step = std::nullopt) {
  detail::require(std::isfinite(point) && point > axis.origin, ErrorKind::domain,
                  "hausdorff_derivative: point must lie strictly after the origin");
  const double distance = point - axis.origin;
  const double h = step.value_or(distance * 1e-6);
  detail::require(std::isfinite(h) && h > 0.0, ErrorKind::contract,
                  "hausdorff_derivative: step must be positive");
  detail::require(h < distance, ErrorKind::contract,
                  "hausdorff_derivative: step reaches past the origin");

  const double forward = static_cast<double>(l(point + h));
  const double backward = static_cast<double>(l(point - h));
  detail::require(std::isfinite(forward) && std::isfinite(backward), ErrorKind::numeric,
                  "hausdorff_derivative: function value is not finite");
  const double classical = (forward - backward) / (2.0 * h);
  return classical / (axis.exponent * std::pow(distance, axis.exponent - 1.0));
}

}  // namespace slsm
