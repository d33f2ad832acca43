#pragma once

#include <memory>

#include "cogflow/config.hpp"
#include "cogflow/flow.hpp"
#include "cogflow/polarize.hpp"
#include "cogflow/report.hpp"
#include "cogflow/semantics.hpp"

namespace cogflow {

/// Builds the backend a config asks for (LLM key from the environment).
std::unique_ptr<PolarizerBackend> make_backend(const Config& config);
/// In-memory for the template backend; otherwise persisted at
/// COGFLOW_CACHE_PATH or polarize.cache_path.
std::unique_ptr<PolarizationCache> make_cache(const Config& config);

/// Mean Euclidean distance between paired endpoints of two equally sized batches.
double mean_endpoint_displacement(const SampleBatch& a, const SampleBatch& b);

/// Runs the named verification experiments against one configuration.
class Harness {
 public:
  explicit Harness(Config config);
  Harness(Config config, std::unique_ptr<PolarizerBackend> backend, std::unique_ptr<PolarizationCache> cache);

  const Config& config() const noexcept { return config_; }
  const SemanticModel& model() const noexcept { return model_; }
  PolarizerBackend& backend() noexcept { return *backend_; }
  PolarizationCache& cache() noexcept { return *cache_; }

  /// Blend spec for the configured base prompt at `score`.
  std::shared_ptr<const BlendSpec> blend_spec(const ScoreVector& score, BlendMode mode, double lambda);

  /// Anchors as extremes: lambda = 0 at each vertex reproduces that anchor's
  /// target; lambda = 0.5 matches the moment-ODE oracle.
  MetricsReport vertex_recovery();
  /// Endpoint displacement for shrinking score offsets along a path.
  MetricsReport continuity_sweep();
  /// Position-bias asymmetry of single chains versus the Latin-square average.
  MetricsReport order_bias_experiment();
  /// Inner evaluation counts of stochastic versus full-average blending.
  MetricsReport cost_accounting();
  /// Stochastic-mode endpoint mean versus full-average endpoint mean.
  MetricsReport stochastic_equivalence();
  /// Projection of the endpoint mean on one dimension's direction along a sweep of that score.
  MetricsReport monotone_response();

  MetricsReport run();

 private:
  MetricsReport new_report(std::string_view experiment) const;

  Config config_;
  SemanticModel model_;
  std::unique_ptr<PolarizerBackend> backend_;
  std::unique_ptr<PolarizationCache> cache_;
};

}  // namespace cogflow
