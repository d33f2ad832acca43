#include "cogflow/semantics.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "cogflow/errors.hpp"
#include "cogflow/polarize.hpp"

namespace cogflow {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ContractError("time " + std::to_string(t) + " outside [0,1]");
}

void check_variance(double variance) {
  if (!(variance >= kMinVariance) || !std::isfinite(variance)) {
    throw ContractError("variance " + std::to_string(variance) + " below the floor " + std::to_string(kMinVariance));
  }
}

// Per-coordinate variance of x_t for a component with target variance `variance`.
double marginal_variance(double variance, double t) { return (1.0 - t) * (1.0 - t) + t * t * variance; }

}  // namespace

TargetDistribution::TargetDistribution(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ContractError("target distribution needs at least one component");
  const auto d = components_.front().mean.size();
  if (d < 1) throw ContractError("target distribution has zero latent dimension");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw ContractError("mixture weights must be positive");
    if (c.mean.size() != d) throw ContractError("mixture components disagree on latent dimension");
    if (!c.mean.allFinite()) throw ContractError("mixture mean is not finite");
    check_variance(c.variance);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ContractError("mixture weights sum to " + std::to_string(total) + ", expected 1");
  }
}

TargetDistribution TargetDistribution::gaussian(Vector mean, double variance) {
  return TargetDistribution({GaussianComponent{1.0, std::move(mean), variance}});
}

Vector TargetDistribution::mean() const {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(dim()));
  for (const auto& c : components_) m += c.weight * c.mean;
  return m;
}

double flow_gain(double variance, double t) {
  return (t * variance - (1.0 - t)) / marginal_variance(variance, t);
}

Vector gaussian_field(const Vector& mean, double variance, const Vector& x, double t) {
  check_time(t);
  check_variance(variance);
  if (mean.size() != x.size()) throw ContractError("gaussian_field: state and mean dimensions differ");
  const double k = flow_gain(variance, t);
  return mean + k * (x - t * mean);
}

std::vector<double> mixture_responsibilities(const TargetDistribution& dist, const Vector& x, double t) {
  check_time(t);
  const auto& comps = dist.components();
  const double d = static_cast<double>(dist.dim());
  std::vector<double> logp(comps.size());
  for (std::size_t m = 0; m < comps.size(); ++m) {
    const double s2 = marginal_variance(comps[m].variance, t);
    logp[m] = std::log(comps[m].weight) - 0.5 * d * std::log(s2) - (x - t * comps[m].mean).squaredNorm() / (2.0 * s2);
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (auto& lp : logp) {
    lp = std::exp(lp - top);
    total += lp;
  }
  for (auto& lp : logp) lp /= total;
  return logp;
}

Vector mixture_field(const TargetDistribution& dist, const Vector& x, double t) {
  Vector out(static_cast<Eigen::Index>(dist.dim()));
  TargetField(dist).eval_into(x, t, out);
  return out;
}

void TargetField::eval_into(const Vector& x, double t, Vector& out) const {
  check_time(t);
  if (static_cast<std::size_t>(x.size()) != dim()) throw ContractError("field evaluated at a state of wrong dimension");
  const auto& comps = dist_.components();
  if (comps.size() == 1) {
    const double k = flow_gain(comps[0].variance, t);
    out.noalias() = (1.0 - k * t) * comps[0].mean + k * x;
    return;
  }
  const auto resp = mixture_responsibilities(dist_, x, t);
  out.setZero();
  for (std::size_t m = 0; m < comps.size(); ++m) {
    const double k = flow_gain(comps[m].variance, t);
    out += resp[m] * ((1.0 - k * t) * comps[m].mean + k * x);
  }
}

std::optional<AffineCoefficients> TargetField::affine_at(double t) const {
  check_time(t);
  const auto& comps = dist_.components();
  if (comps.size() != 1) return std::nullopt;
  const double k = flow_gain(comps[0].variance, t);
  const auto d = static_cast<Eigen::Index>(dim());
  return AffineCoefficients{k * Matrix::Identity(d, d), (1.0 - k * t) * comps[0].mean};
}

FieldPtr make_field(TargetDistribution dist) { return std::make_shared<TargetField>(std::move(dist)); }

SemanticModel::SemanticModel(CognitiveSpace space, const SemanticModelParams& params)
    : space_(std::move(space)),
      position_bias_(params.position_bias),
      variance_(params.variance),
      bindings_(params.explicit_bindings) {
  const std::size_t n = space_.size();
  const std::size_t d = params.latent_dim == 0 ? std::max<std::size_t>(2, n) : params.latent_dim;
  if (d < 2) throw ContractError("latent dimension must be at least 2");
  const auto di = static_cast<Eigen::Index>(d);

  if (params.base_mean.empty()) {
    base_mean_ = Vector::Zero(di);
  } else {
    if (params.base_mean.size() != d) throw ContractError("base_mean length differs from latent_dim");
    base_mean_ = Eigen::Map<const Vector>(params.base_mean.data(), di);
  }

  if (params.dimension_directions.empty()) {
    if (n > d) throw ContractError("default axis directions need latent_dim >= n");
    for (std::size_t i = 0; i < n; ++i) directions_.push_back(Vector::Unit(di, static_cast<Eigen::Index>(i)));
  } else {
    if (params.dimension_directions.size() != n) throw ContractError("need one direction per cognitive dimension");
    for (const auto& dir : params.dimension_directions) {
      if (dir.size() != d) throw ContractError("direction length differs from latent_dim");
      Vector v = Eigen::Map<const Vector>(dir.data(), di);
      if (std::abs(v.norm() - 1.0) > 1e-9) throw ContractError("dimension directions must have unit norm");
      directions_.push_back(std::move(v));
    }
  }

  magnitudes_ = params.effect_magnitudes.empty() ? std::vector<double>(n, 1.0) : params.effect_magnitudes;
  if (magnitudes_.size() != n) throw ContractError("need one effect magnitude per cognitive dimension");
  for (double m : magnitudes_) {
    if (!(m > 0.0)) throw ContractError("effect magnitudes must be positive");
  }
  if (!(position_bias_ >= 0.0)) throw ContractError("position bias must be non-negative");
  check_variance(variance_);
  for (const auto& [prompt, dist] : bindings_) {
    if (dist.dim() != d) throw ContractError("explicit binding for '" + prompt + "' has the wrong latent dimension");
  }
}

double SemanticModel::position_weight(std::size_t position) const {
  const double n = static_cast<double>(space_.size());
  return 1.0 + position_bias_ * (static_cast<double>(position) - (n + 1.0) / 2.0) / n;
}

bool SemanticModel::has_explicit_binding(std::string_view prompt) const {
  return bindings_.find(std::string(prompt)) != bindings_.end();
}

TargetDistribution SemanticModel::bind(std::string_view prompt) const {
  if (auto it = bindings_.find(std::string(prompt)); it != bindings_.end()) return it->second;

  const auto parsed = parse_template_prompt(prompt);
  if (!parsed) throw BindingError("cannot bind prompt '" + std::string(prompt) + "': malformed template tags");

  Vector mean = base_mean_;
  std::set<std::size_t> seen;
  for (std::size_t p = 0; p < parsed->tags.size(); ++p) {
    const auto& tag = parsed->tags[p];
    const auto dim = space_.find(tag.dimension);
    if (!dim) {
      throw BindingError("cannot bind prompt '" + std::string(prompt) + "': unknown dimension '" + tag.dimension + "'");
    }
    if (!seen.insert(*dim).second) {
      throw BindingError("cannot bind prompt '" + std::string(prompt) + "': dimension '" + tag.dimension +
                         "' tagged twice");
    }
    const double sign = tag.pole == Pole::high ? 1.0 : -1.0;
    mean += sign * magnitudes_[*dim] * position_weight(p + 1) * directions_[*dim];
  }
  return TargetDistribution::gaussian(std::move(mean), variance_);
}

}  // namespace cogflow
