#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cogflow/blend.hpp"
#include "cogflow/cogspace.hpp"
#include "cogflow/field.hpp"
#include "cogflow/polarize.hpp"
#include "cogflow/semantics.hpp"

namespace cogflow {

enum class Solver { euler, midpoint, rk4 };

/// Fixed-step explicit integration on the uniform grid t_i = i / steps.
struct IntegrationConfig {
  Solver solver = Solver::rk4;
  std::size_t steps = 100;
  bool record_trajectory = false;
};

struct IntegrationResult {
  Vector endpoint;
  /// steps + 1 states when recorded; state 0 is x0.
  std::vector<Vector> trajectory;
};

/// Solves dx/dt = v(x, t) from t = 0 (noise) to t = 1 (data).
/// Throws DivergenceError on a non-finite state.
IntegrationResult integrate(Dynamics& field, const Vector& x0, const IntegrationConfig& config);
IntegrationResult integrate(const VelocityField& field, const Vector& x0, const IntegrationConfig& config);

/// Maps latent endpoints to outputs: identity, or y = matrix * x + offset.
class Decoder {
 public:
  static Decoder identity() { return Decoder(); }
  static Decoder affine(Matrix matrix, Vector offset);

  bool is_identity() const noexcept { return !matrix_.has_value(); }
  Vector decode(const Vector& latent) const;
  std::size_t output_dim(std::size_t latent_dim) const;
  const std::optional<Matrix>& matrix() const noexcept { return matrix_; }
  const Vector& offset() const noexcept { return offset_; }

 private:
  std::optional<Matrix> matrix_;
  Vector offset_;
};

struct GenerationRequest {
  std::string base_prompt;
  ScoreVector score;
  std::uint64_t seed = 0;
  std::size_t sample_count = 1;
  BlendMode mode = BlendMode::full_average;
  double lambda = 0.5;
  DrawSchedule draws = DrawSchedule::per_evaluation;
  IntegrationConfig integration;
  Decoder decoder;
  /// Worker threads; 0 means hardware concurrency.
  std::size_t threads = 0;
};

struct BatchMetadata {
  std::uint64_t seed = 0;
  std::uint64_t eval_count = 0;
  std::vector<std::uint64_t> sample_eval_counts;
  double wall_ms = 0.0;
};

struct SampleBatch {
  std::vector<Vector> endpoints;
  std::vector<Vector> decoded;
  std::vector<std::vector<Vector>> trajectories;
  BatchMetadata metadata;
};

/// Everything a prompt needs to become velocity fields.
struct GenerationContext {
  const CognitiveSpace& space;
  const SemanticModel& model;
  PolarizerBackend& backend;
  PolarizationCache& cache;
};

/// Polarizes the base prompt for every anchor and binds base and chain
/// prompts to fields. Non-template backends require explicit bindings.
std::shared_ptr<const BlendSpec> assemble_blend_spec(GenerationContext& ctx, const std::string& base_prompt,
                                                     const ScoreVector& score, BlendMode mode, double lambda,
                                                     DrawSchedule draws = DrawSchedule::per_evaluation);

/// Integrates `count` samples of a blend. Sample i draws x0 and its chain
/// choices from streams keyed by (seed, i), so results do not depend on the
/// thread count or on the other samples.
SampleBatch sample_blend(const std::shared_ptr<const BlendSpec>& spec, std::uint64_t seed, std::size_t count,
                         const IntegrationConfig& integration, const Decoder& decoder = Decoder::identity(),
                         std::size_t threads = 0);

SampleBatch generate(const GenerationRequest& request, GenerationContext& ctx);

/// Distribution-level solution for affine blends: mean and covariance of x_t
/// on the grid t_i = i / steps, starting from N(0, I).
struct MomentPath {
  std::vector<double> times;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;

  const Vector& final_mean() const { return means.back(); }
  const Matrix& final_covariance() const { return covariances.back(); }
};

/// Integrates dm/dt = A m + b and dC/dt = A C + C A^T with RK4, where
/// v(x, t) = A(t) x + b(t) is the full-average blend. Every inner field must
/// be affine.
MomentPath moment_reference(const BlendSpec& spec, std::size_t steps = 2000);

/// One row per sample, header c1..cD.
void write_vectors_csv(const std::filesystem::path& path, const std::vector<Vector>& rows);
std::string vectors_csv(const std::vector<Vector>& rows);
/// sample, step, t, c1..cD
std::string trajectories_csv(const std::vector<std::vector<Vector>>& trajectories);
void write_trajectories_csv(const std::filesystem::path& path, const std::vector<std::vector<Vector>>& trajectories);

std::string format_double(double v);

}  // namespace cogflow
