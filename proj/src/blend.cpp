#include "cogflow/blend.hpp"


#include "cogflow/errors.hpp"
#include "cogflow/rng.hpp"

namespace cogflow {

BlendSpec::BlendSpec(FieldPtr base, std::vector<AnchorFields> anchors, ScoreVector score, BlendMode mode,
                     double lambda, DrawSchedule draws)
    : base_(std::move(base)),
      anchors_(std::move(anchors)),
      score_(std::move(score)),
      weights_(weight_vector(score_)),
      mode_(mode),
      lambda_(lambda),
      draws_(draws) {
  if (!base_) throw ContractError("blend needs a base field");
  if (!(lambda_ >= 0.0 && lambda_ <= 1.0)) throw ContractError("blend lambda must lie in [0,1]");
  const std::size_t n = score_.size();
  if (anchors_.size() != (std::size_t{1} << n)) {
    throw ContractError("blend needs " + std::to_string(std::size_t{1} << n) + " anchor entries, got " +
                        std::to_string(anchors_.size()));
  }
  for (std::size_t k = 0; k < anchors_.size(); ++k) {
    const auto& entry = anchors_[k];
    if (entry.anchor.size() != n || entry.anchor.index() != k + 1) {
      throw ContractError("anchor entries must follow canonical order");
    }
    if (entry.chains.size() != n) {
      throw ContractError("anchor " + std::to_string(k + 1) + " holds " + std::to_string(entry.chains.size()) +
                          " chain fields, expected " + std::to_string(n));
    }
    for (const auto& f : entry.chains) {
      if (!f) throw ContractError("null chain field");
      if (f->dim() != base_->dim()) throw ContractError("chain field dimension differs from the base field");
    }
  }
}

std::size_t BlendSpec::evaluations_per_call() const noexcept {
  const std::size_t n = dimensions();
  const std::size_t anchors = std::size_t{1} << n;
  return (mode_ == BlendMode::stochastic ? anchors : n * anchors) + 1;
}

BlendSpec BlendSpec::with_mode(BlendMode mode) const {
  BlendSpec copy = *this;
  copy.mode_ = mode;
  return copy;
}

BlendSpec BlendSpec::with_score(ScoreVector score) const {
  return BlendSpec(base_, anchors_, std::move(score), mode_, lambda_, draws_);
}

BlendedField::BlendedField(std::shared_ptr<const BlendSpec> spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
  if (!spec_) throw ContractError("blended field needs a spec");
  const auto d = static_cast<Eigen::Index>(spec_->dim());
  scratch_.resize(d);
  anchor_sum_.resize(d);
}

std::size_t BlendedField::chain_choice(std::uint64_t ordinal, std::size_t anchor) const {
  return uniform_index(counter_hash(seed_, ordinal, anchor), spec_->dimensions());
}

void BlendedField::velocity(const Vector& x, double t, Vector& out) {
  const auto& spec = *spec_;
  if (static_cast<std::size_t>(x.size()) != spec.dim()) {
    throw ContractError("blended field evaluated at a state of wrong dimension");
  }
  out.resize(x.size());
  const std::uint64_t ordinal = spec.draws() == DrawSchedule::per_evaluation ? calls_ : step_;
  const auto& weights = spec.weights();

  anchor_sum_.setZero();
  for (std::size_t k = 0; k < spec.anchors().size(); ++k) {
    const auto& chains = spec.anchors()[k].chains;
    if (spec.mode() == BlendMode::stochastic) {
      chains[chain_choice(ordinal, k)]->eval_into(x, t, scratch_);
      anchor_sum_ += weights[k] * scratch_;
      eval_count_ += 1;
    } else {
      const double scale = weights[k] / static_cast<double>(chains.size());
      for (const auto& field : chains) {
        field->eval_into(x, t, scratch_);
        anchor_sum_ += scale * scratch_;
      }
      eval_count_ += chains.size();
    }
  }
  spec.base().eval_into(x, t, scratch_);
  eval_count_ += 1;
  out.noalias() = (1.0 - spec.lambda()) * anchor_sum_ + spec.lambda() * scratch_;
  ++calls_;
}

Vector BlendedField::eval(const Vector& x, double t) {
  Vector out(x.size());
  velocity(x, t, out);
  return out;
}

BlendedField make_blended_field(std::shared_ptr<const BlendSpec> spec, std::uint64_t seed) {
  return BlendedField(std::move(spec), seed);
}

ExpectationCheck expected_field_check(const BlendSpec& spec, const Vector& x, double t, std::size_t num_draws,
                                      std::uint64_t seed) {
  if (num_draws == 0) throw ContractError("expected_field_check needs at least one draw");
  BlendedField stochastic(std::make_shared<const BlendSpec>(spec.with_mode(BlendMode::stochastic)), seed);
  BlendedField full(std::make_shared<const BlendSpec>(spec.with_mode(BlendMode::full_average)), seed);

  ExpectationCheck check;
  check.draws = num_draws;
  check.full_value = full.eval(x, t);

  // Welford accumulation: identical draws give exactly zero spread.
  const auto d = x.size();
  Vector mean = Vector::Zero(d);
  Vector m2 = Vector::Zero(d);
  Vector draw(d);
  for (std::size_t i = 0; i < num_draws; ++i) {
    stochastic.velocity(x, t, draw);
    const Vector delta = draw - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct(draw - mean);
  }
  check.stochastic_mean = mean;
  if (num_draws >= 2) {
    const double n = static_cast<double>(num_draws);
    check.std_error = (m2 / ((n - 1.0) * n)).cwiseSqrt();
  }
  return check;
}

}  // namespace cogflow
