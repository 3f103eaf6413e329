#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "slsm/error.hpp"
#include "slsm/random.hpp"

namespace slsm {

/// Stretched Gaussian law with density proportional to exp(-|x|^(2 beta) / c),
/// c = 4 D t^alpha. This is the fundamental solution of the Hausdorff
/// diffusion equation. beta = 1 gives a zero-mean Gaussian of variance c / 2,
/// beta = 1/2 a Laplace law of scale c.
class StretchedGaussian {
 public:
  StretchedGaussian(double alpha, double beta, double diffusivity, double time)
      : alpha_(alpha), beta_(beta), diffusivity_(diffusivity), time_(time) {
    using detail::require;
    require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0, ErrorKind::domain,
            "stretched gaussian: alpha must lie in (0, 1], got " + std::to_string(alpha));
    require(std::isfinite(beta) && beta > 0.0 && beta <= 1.0, ErrorKind::domain,
            "stretched gaussian: beta must lie in (0, 1], got " + std::to_string(beta));
    require(std::isfinite(diffusivity) && diffusivity > 0.0, ErrorKind::domain,
            "stretched gaussian: diffusivity must be positive, got " +
                std::to_string(diffusivity));
    require(std::isfinite(time) && time > 0.0, ErrorKind::domain,
            "stretched gaussian: time must be positive, got " + std::to_string(time));
    scale_ = 4.0 * diffusivity_ * std::pow(time_, alpha_);
    require(std::isfinite(scale_) && scale_ > 0.0, ErrorKind::domain,
            "stretched gaussian: scale 4*D*t^alpha must be positive and finite");
  }

  /// Law with alpha = t = 1 and D chosen so that 4 D t^alpha equals `scale`.
  static StretchedGaussian from_scale(double beta, double scale) {
    return StretchedGaussian(1.0, beta, scale / 4.0, 1.0);
  }

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double diffusivity() const noexcept { return diffusivity_; }
  double time() const noexcept { return time_; }

  /// c = 4 D t^alpha.
  double scale() const noexcept { return scale_; }

  /// |X|^(2 beta) / c is Gamma distributed with this shape.
  double gamma_shape() const noexcept { return 0.5 / beta_; }

  friend bool operator==(const StretchedGaussian&, const StretchedGaussian&) = default;

 private:
  double alpha_;
  double beta_;
  double diffusivity_;
  double time_;
  double scale_ = 0.0;
};

/// Z = c^(1/(2 beta)) Gamma(1/(2 beta)) / beta, the integral of the kernel
/// exp(-|x|^(2 beta) / c) over the real line. At beta = 1 this is sqrt(pi c).
inline double normalization_constant(const StretchedGaussian& law) {
  const double a = law.gamma_shape();
  if (a < 170.0) return std::pow(law.scale(), a) * std::tgamma(a) / law.beta();
  return std::exp(a * std::log(law.scale()) + std::lgamma(a) - std::log(law.beta()));
}

inline double pdf(const StretchedGaussian& law, double x) {
  detail::require(std::isfinite(x), ErrorKind::domain, "pdf: x must be finite");
  const double kernel = std::exp(-std::pow(std::abs(x), 2.0 * law.beta()) / law.scale());
  return kernel / normalization_constant(law);
}

/// E|X|^k = c^(k/(2 beta)) Gamma((k+1)/(2 beta)) / Gamma(1/(2 beta)).
/// k = 0 gives the total mass 1.
inline double absolute_moment(const StretchedGaussian& law, unsigned k) {
  if (k == 0) return 1.0;
  const double a = law.gamma_shape();
  const double kk = static_cast<double>(k);
  return std::exp(kk * a * std::log(law.scale()) + std::lgamma((kk + 1.0) * a) -
                  std::lgamma(a));
}

/// Draws X = S (c G)^(1/(2 beta)) with S a fair sign and G ~ Gamma(1/(2 beta), 1)
/// taken from std::gamma_distribution. Used as the reference sampler.
inline std::vector<double> sample_exact(const StretchedGaussian& law, Rng& rng,
                                        std::size_t n) {
  detail::require(n >= 1, ErrorKind::contract, "sample_exact: n must be at least 1");
  std::gamma_distribution<double> gamma(law.gamma_shape(), 1.0);
  const double power = 0.5 / law.beta();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = random_sign(rng);
    const double g = gamma(rng);
    out.push_back(sign * std::pow(law.scale() * g, power));
  }
  return out;
}

struct RejectionStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;

  double acceptance_rate() const noexcept {
    return proposals == 0 ? 0.0
                          : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

/// Gamma(shape, 1) variates by the Marsaglia-Tsang squeeze acceptance-rejection
/// scheme. For shape < 1 a Gamma(shape + 1) draw is boosted by U^(1/shape).
class GammaRejectionSampler {
 public:
  static constexpr std::uint32_t default_max_proposals = 10000;

  explicit GammaRejectionSampler(double shape,
                                 std::uint32_t max_proposals = default_max_proposals)
      : shape_(shape), max_proposals_(max_proposals) {
    detail::require(std::isfinite(shape) && shape > 0.0, ErrorKind::domain,
                    "gamma sampler: shape must be positive");
    detail::require(max_proposals >= 1, ErrorKind::contract,
                    "gamma sampler: proposal cap must be at least 1");
    boosted_ = shape_ < 1.0;
    d_ = (boosted_ ? shape_ + 1.0 : shape_) - 1.0 / 3.0;
    c_ = 1.0 / std::sqrt(9.0 * d_);
  }

  double operator()(Rng& rng) {
    const double g = draw_at_least_one(rng);
    if (!boosted_) return g;
    return g * std::pow(uniform_open(rng), 1.0 / shape_);
  }

  const RejectionStats& stats() const noexcept { return stats_; }
  double shape() const noexcept { return shape_; }

 private:
  double draw_at_least_one(Rng& rng) {
    for (std::uint32_t attempt = 0; attempt < max_proposals_; ++attempt) {
      ++stats_.proposals;
      const double x = standard_normal(rng);
      double v = 1.0 + c_ * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform_open(rng);
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2 ||
          std::log(u) < 0.5 * x2 + d_ * (1.0 - v + std::log(v))) {
        ++stats_.accepted;
        return d_ * v;
      }
    }
    throw Error(ErrorKind::sampler_failure,
                "gamma sampler: no acceptance within " +
                    std::to_string(max_proposals_) + " proposals");
  }

  double shape_;
  std::uint32_t max_proposals_;
  bool boosted_ = false;
  double d_ = 0.0;
  double c_ = 0.0;
  RejectionStats stats_;
};

/// Same law as sample_exact, with the Gamma variate produced by
/// GammaRejectionSampler. Throws ErrorKind::sampler_failure when a single draw
/// needs more than `max_proposals` proposals.
inline std::vector<double> sample_rejection(
    const StretchedGaussian& law, Rng& rng, std::size_t n, RejectionStats* stats = nullptr,
    std::uint32_t max_proposals = GammaRejectionSampler::default_max_proposals) {
  detail::require(n >= 1, ErrorKind::contract, "sample_rejection: n must be at least 1");
  GammaRejectionSampler gamma(law.gamma_shape(), max_proposals);
  const double power = 0.5 / law.beta();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = random_sign(rng);
    out.push_back(sign * std::pow(law.scale() * gamma(rng), power));
  }
  if (stats != nullptr) *stats = gamma.stats();
  return out;
}

/// (x - mean) / sd with the (n - 1) divisor.
inline std::vector<double> standardize(std::span<const double> samples) {
  detail::require(samples.size() >= 2, ErrorKind::contract,
                  "standardize: need at least two samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  double max_abs = 0.0;
  for (double s : samples) {
    detail::require(std::isfinite(s), ErrorKind::numeric, "standardize: non-finite sample");
    mean += s;
    max_abs = std::max(max_abs, std::abs(s));
  }
  mean /= n;
  // second pass corrects the rounding error of the first
  double correction = 0.0;
  for (double s : samples) correction += s - mean;
  mean += correction / n;

  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  detail::require(sd > 64.0 * std::numeric_limits<double>::epsilon() * max_abs && sd > 0.0,
                  ErrorKind::degenerate_scale, "standardize: samples have zero spread");

  std::vector<double> out;
  out.reserve(samples.size());
  for (double s : samples) out.push_back((s - mean) / sd);
  return out;
}

}  // namespace slsm
