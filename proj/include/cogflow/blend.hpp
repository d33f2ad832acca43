#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "cogflow/cogspace.hpp"
#include "cogflow/field.hpp"

namespace cogflow {

enum class BlendMode { stochastic, full_average };

/// When a stochastic blend redraws its chain choices.
enum class DrawSchedule {
  per_evaluation,  // fresh draws on every field evaluation
  per_step,        // one set of draws per solver step, shared by its stages
};

/// The chain-conditioned fields of one anchor's prompt set.
struct AnchorFields {
  CognitiveAnchor anchor;
  std::vector<FieldPtr> chains;
};

/// Immutable description of a blended velocity field:
///   (1 - lambda) * sum_k w_k(s) vhat_k + lambda * v_base
/// lambda is the base share: 0 drops the base field, 1 is the base alone,
/// 0.5 is the equal mix.
class BlendSpec {
 public:
  BlendSpec(FieldPtr base, std::vector<AnchorFields> anchors, ScoreVector score, BlendMode mode,
            double lambda = 0.5, DrawSchedule draws = DrawSchedule::per_evaluation);

  std::size_t dim() const noexcept { return base_->dim(); }
  /// Number of cognitive dimensions n.
  std::size_t dimensions() const noexcept { return score_.size(); }
  const VelocityField& base() const noexcept { return *base_; }
  const FieldPtr& base_ptr() const noexcept { return base_; }
  const std::vector<AnchorFields>& anchors() const noexcept { return anchors_; }
  const ScoreVector& score() const noexcept { return score_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  BlendMode mode() const noexcept { return mode_; }
  double lambda() const noexcept { return lambda_; }
  DrawSchedule draws() const noexcept { return draws_; }

  /// Inner field evaluations per blended evaluation: 2^n + 1 or n * 2^n + 1.
  std::size_t evaluations_per_call() const noexcept;

  /// Same fields and weights under a different mode.
  BlendSpec with_mode(BlendMode mode) const;
  BlendSpec with_score(ScoreVector score) const;

 private:
  FieldPtr base_;
  std::vector<AnchorFields> anchors_;
  ScoreVector score_;
  std::vector<double> weights_;
  BlendMode mode_;
  double lambda_;
  DrawSchedule draws_;
};

/// Per-trajectory evaluator of a BlendSpec. Stochastic chain choices come
/// from a counter-based stream keyed by (seed, draw ordinal, anchor index),
/// so a field's output sequence depends only on (spec, seed, call sequence).
/// Not safe to share between threads.
class BlendedField final : public Dynamics {
 public:
  BlendedField(std::shared_ptr<const BlendSpec> spec, std::uint64_t seed);

  std::size_t dim() const override { return spec_->dim(); }
  void velocity(const Vector& x, double t, Vector& out) override;
  void begin_step(std::size_t step) override { step_ = step; }

  Vector eval(const Vector& x, double t);

  /// Chain (0-based) anchor `anchor` (0-based) uses for draw ordinal `ordinal`.
  std::size_t chain_choice(std::uint64_t ordinal, std::size_t anchor) const;

  std::uint64_t eval_count() const noexcept { return eval_count_; }
  std::uint64_t calls() const noexcept { return calls_; }
  const BlendSpec& spec() const noexcept { return *spec_; }

 private:
  std::shared_ptr<const BlendSpec> spec_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
  std::uint64_t eval_count_ = 0;
  std::size_t step_ = 0;
  Vector scratch_;
  Vector anchor_sum_;
};

BlendedField make_blended_field(std::shared_ptr<const BlendSpec> spec, std::uint64_t seed);

struct ExpectationCheck {
  Vector stochastic_mean;
  Vector full_value;
  /// Per-coordinate standard error of stochastic_mean; absent for one draw.
  std::optional<Vector> std_error;
  std::size_t draws = 0;
};

/// Monte-Carlo mean of `num_draws` independent stochastic evaluations at
/// (x, t), next to the exact full-average value.
ExpectationCheck expected_field_check(const BlendSpec& spec, const Vector& x, double t, std::size_t num_draws,
                                      std::uint64_t seed = 0);

}  // namespace cogflow
