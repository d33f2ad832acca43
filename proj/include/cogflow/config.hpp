#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cogflow/blend.hpp"
#include "cogflow/cogspace.hpp"
#include "cogflow/flow.hpp"
#include "cogflow/semantics.hpp"

namespace cogflow {

enum class BackendKind { template_rules, llm };

enum class ExperimentKind {
  vertex_recovery,
  continuity_sweep,
  order_bias,
  cost_accounting,
  stochastic_equivalence,
  monotone_response,
};

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(BlendMode mode);
std::string_view to_string(Solver solver);

struct PolarizeSettings {
  BackendKind backend = BackendKind::template_rules;
  std::string base_prompt = "a valley";
  std::string endpoint = "http://localhost:8000/v1/chat/completions";
  std::string model = "qwen3-14b";
  std::string cache_path = "./polarize_cache.ndjson";
  std::int64_t timeout_ms = 30'000;
  int retries = 3;
  std::int64_t backoff_ms = 500;
};

struct BlendSettings {
  BlendMode mode = BlendMode::full_average;
  double lambda = 0.5;
  /// Empty means 0.5 on every dimension.
  std::vector<double> score;
  DrawSchedule draws = DrawSchedule::per_evaluation;
};

struct FlowSettings {
  IntegrationConfig integration;
  std::size_t samples = 2048;
  std::uint64_t seed = 0;
  Decoder decoder;
  std::size_t threads = 0;
};

struct ExperimentSettings {
  ExperimentKind kind = ExperimentKind::vertex_recovery;
  std::string output_dir = "./cogflow_out";
  /// Score points for stochastic_equivalence and cost_accounting; empty means {blend.score}.
  std::vector<std::vector<double>> score_grid;
  /// Straight path for continuity_sweep; empty endpoints mean 0.2 and 0.8 on every dimension.
  std::vector<double> path_from;
  std::vector<double> path_to;
  std::size_t path_points = 5;
  std::vector<double> deltas = {1e-2, 1e-3, 1e-4};
  std::size_t seeds = 200;
  std::size_t samples_per_seed = 8;
  /// 1-based dimension swept by monotone_response; other coordinates come from blend.score.
  std::size_t sweep_dimension = 1;
  std::size_t sweep_points = 5;
  std::size_t moment_steps = 2000;
  /// Monte-Carlo criteria pass when |empirical - reference| <= z * SE + 1e-9.
  double z_threshold = 3.0;
};

/// The parsed experiment configuration. Every key has a default, so `{}` is
/// a valid document.
struct Config {
  CognitiveSpace space = CognitiveSpace::from_names({"valence", "arousal"});
  SemanticModelParams semantics;
  PolarizeSettings polarize;
  BlendSettings blend;
  FlowSettings flow;
  ExperimentSettings experiment;

  ScoreVector score() const;
  SemanticModel semantic_model() const;
  GenerationRequest request() const;
  /// SHA-256 of the canonical effective configuration.
  std::string digest() const;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
Config parse_config(const nlohmann::json& document);
/// Effective configuration with every default filled in.
nlohmann::json config_to_json(const Config& config);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Applies "dotted.path=value"; the value is parsed as JSON when possible,
/// otherwise taken as a string.
void apply_override(nlohmann::json& document, std::string_view assignment);

}  // namespace cogflow
