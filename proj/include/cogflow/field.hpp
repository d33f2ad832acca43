#pragma once

#include <cstddef>
#include <memory>
#include <optional>

#include <Eigen/Dense>

namespace cogflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// v(x, t) = linear * x + offset at a fixed time.
struct AffineCoefficients {
  Matrix linear;
  Vector offset;
};

/// A stateless velocity field on R^D, t in [0,1].
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  virtual std::size_t dim() const = 0;
  /// Writes v(x, t) into `out` (already sized to dim()).
  virtual void eval_into(const Vector& x, double t, Vector& out) const = 0;
  /// Coefficients when the field is affine in x; nullopt otherwise.
  virtual std::optional<AffineCoefficients> affine_at(double /*t*/) const { return std::nullopt; }

  Vector eval(const Vector& x, double t) const {
    Vector out(dim());
    eval_into(x, t, out);
    return out;
  }
};

using FieldPtr = std::shared_ptr<const VelocityField>;

/// Right-hand side of the probability-flow ODE. Unlike VelocityField it may
/// carry per-trajectory state (random draws, evaluation counters).
class Dynamics {
 public:
  virtual ~Dynamics() = default;

  virtual std::size_t dim() const = 0;
  virtual void velocity(const Vector& x, double t, Vector& out) = 0;
  /// Called by the integrator before the stages of step `step` (0-based).
  virtual void begin_step(std::size_t /*step*/) {}
};

/// Adapts a stateless field to the Dynamics interface.
class FieldDynamics final : public Dynamics {
 public:
  explicit FieldDynamics(const VelocityField& field) : field_(field) {}

  std::size_t dim() const override { return field_.dim(); }
  void velocity(const Vector& x, double t, Vector& out) override { field_.eval_into(x, t, out); }

 private:
  const VelocityField& field_;
};

}  // namespace cogflow
