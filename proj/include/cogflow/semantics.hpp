#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cogflow/cogspace.hpp"
#include "cogflow/field.hpp"

namespace cogflow {

inline constexpr double kMinVariance = 1e-4;

struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  double variance = 1.0;
};

/// Isotropic Gaussian mixture over the latent space.
class TargetDistribution {
 public:
  explicit TargetDistribution(std::vector<GaussianComponent> components);
  static TargetDistribution gaussian(Vector mean, double variance);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(components_.front().mean.size()); }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }
  Vector mean() const;

 private:
  std::vector<GaussianComponent> components_;
};

/// Slope of the Gaussian flow-matching field in x:
/// (t*var - (1-t)) / ((1-t)^2 + t^2*var).
double flow_gain(double variance, double t);

/// Exact E[x1 - x0 | x_t = x] for x_t = (1-t) x0 + t x1, x0 ~ N(0, I),
/// x1 ~ N(mean, variance * I).
Vector gaussian_field(const Vector& mean, double variance, const Vector& x, double t);

/// Posterior probability of each component given x_t = x.
std::vector<double> mixture_responsibilities(const TargetDistribution& dist, const Vector& x, double t);

/// Responsibility-weighted combination of the per-component Gaussian fields.
Vector mixture_field(const TargetDistribution& dist, const Vector& x, double t);

/// Marginal flow-matching field of a target distribution.
class TargetField final : public VelocityField {
 public:
  explicit TargetField(TargetDistribution dist) : dist_(std::move(dist)) {}

  std::size_t dim() const override { return dist_.dim(); }
  void eval_into(const Vector& x, double t, Vector& out) const override;
  std::optional<AffineCoefficients> affine_at(double t) const override;

  const TargetDistribution& distribution() const noexcept { return dist_; }

 private:
  TargetDistribution dist_;
};

FieldPtr make_field(TargetDistribution dist);

struct SemanticModelParams {
  /// 0 means max(2, n).
  std::size_t latent_dim = 0;
  /// Empty means the zero vector.
  std::vector<double> base_mean;
  /// Empty means the first n coordinate axes.
  std::vector<std::vector<double>> dimension_directions;
  /// Empty means 1.0 for every dimension.
  std::vector<double> effect_magnitudes;
  double position_bias = 0.0;
  double variance = 0.25;
  std::map<std::string, TargetDistribution> explicit_bindings;
};

/// Maps prompts to target distributions. Template prompts shift the base mean
/// along per-dimension directions, scaled by a position-dependent factor.
class SemanticModel {
 public:
  SemanticModel(CognitiveSpace space, const SemanticModelParams& params);

  const CognitiveSpace& space() const noexcept { return space_; }
  std::size_t latent_dim() const noexcept { return static_cast<std::size_t>(base_mean_.size()); }
  const Vector& base_mean() const noexcept { return base_mean_; }
  const std::vector<Vector>& dimension_directions() const noexcept { return directions_; }
  const std::vector<double>& effect_magnitudes() const noexcept { return magnitudes_; }
  double position_bias() const noexcept { return position_bias_; }
  double variance() const noexcept { return variance_; }
  const std::map<std::string, TargetDistribution>& explicit_bindings() const noexcept { return bindings_; }

  /// 1 + beta * (pos - (n+1)/2) / n for a 1-based tag position.
  double position_weight(std::size_t position) const;

  /// Explicit bindings win; otherwise the prompt must parse as base + tags.
  TargetDistribution bind(std::string_view prompt) const;
  bool has_explicit_binding(std::string_view prompt) const;

 private:
  CognitiveSpace space_;
  Vector base_mean_;
  std::vector<Vector> directions_;
  std::vector<double> magnitudes_;
  double position_bias_;
  double variance_;
  std::map<std::string, TargetDistribution> bindings_;
};

}  // namespace cogflow
