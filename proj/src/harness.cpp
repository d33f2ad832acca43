#include "cogflow/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "cogflow/errors.hpp"
#include "cogflow/llm_backend.hpp"
#include "cogflow/stats.hpp"

namespace cogflow {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> to_std(const Matrix& m) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

std::size_t stages(Solver solver) {
  switch (solver) {
    case Solver::euler: return 1;
    case Solver::midpoint: return 2;
    case Solver::rk4: return 4;
  }
  return 1;
}

Criterion at_most(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, std::nullopt,
          value <= threshold ? CriterionStatus::pass : CriterionStatus::fail, std::move(detail)};
}

Criterion at_least(std::string name, double value, double threshold, std::string detail = {}) {
  // Encoded as the range [threshold, +inf).
  return {std::move(name),   value, threshold, std::numeric_limits<double>::max(),
          value >= threshold ? CriterionStatus::pass : CriterionStatus::fail, std::move(detail)};
}

Criterion inconclusive(std::string name, double threshold, std::string detail) {
  return {std::move(name), 0.0, threshold, std::nullopt, CriterionStatus::inconclusive, std::move(detail)};
}

std::string anchor_label(const CognitiveAnchor& a) {
  std::string s = "(";
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a.bit(i));
  return s + ")";
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::unique_ptr<PolarizerBackend> make_backend(const Config& config) {
  if (config.polarize.backend == BackendKind::template_rules) return std::make_unique<TemplateBackend>();
  LlmBackendOptions opts;
  opts.endpoint = config.polarize.endpoint;
  opts.model = config.polarize.model;
  opts.api_key = llm_key_from_environment();
  opts.timeout = std::chrono::milliseconds(config.polarize.timeout_ms);
  opts.retries = config.polarize.retries;
  opts.backoff = std::chrono::milliseconds(config.polarize.backoff_ms);
  return std::make_unique<LlmBackend>(std::move(opts));
}

std::unique_ptr<PolarizationCache> make_cache(const Config& config) {
  if (config.polarize.backend == BackendKind::template_rules) return std::make_unique<PolarizationCache>();
  if (const char* env = std::getenv("COGFLOW_CACHE_PATH"); env && *env) {
    return std::make_unique<PolarizationCache>(std::filesystem::path(env));
  }
  return std::make_unique<PolarizationCache>(std::filesystem::path(config.polarize.cache_path));
}

Harness::Harness(Config config) : Harness(config, make_backend(config), make_cache(config)) {}

Harness::Harness(Config config, std::unique_ptr<PolarizerBackend> backend, std::unique_ptr<PolarizationCache> cache)
    : config_(std::move(config)),
      model_(config_.semantic_model()),
      backend_(std::move(backend)),
      cache_(std::move(cache)) {
  if (!backend_ || !cache_) throw ContractError("harness needs a backend and a cache");
}

MetricsReport Harness::new_report(std::string_view experiment) const {
  MetricsReport report;
  report.config_digest = config_.digest();
  report.experiment = std::string(experiment);
  return report;
}

std::shared_ptr<const BlendSpec> Harness::blend_spec(const ScoreVector& score, BlendMode mode, double lambda) {
  GenerationContext ctx{config_.space, model_, *backend_, *cache_};
  return assemble_blend_spec(ctx, config_.polarize.base_prompt, score, mode, lambda, config_.blend.draws);
}

MetricsReport Harness::vertex_recovery() {
  auto report = new_report("vertex_recovery");
  const auto& cfg = config_;
  const double z = cfg.experiment.z_threshold;

  SemanticModelParams unbiased = cfg.semantics;
  unbiased.position_bias = 0.0;
  const SemanticModel flat(cfg.space, unbiased);

  double worst_target_mean = 0.0;
  double worst_target_cov = 0.0;
  double worst_oracle_mean = 0.0;
  double worst_oracle_cov = 0.0;
  bool oracle_available = true;
  bool target_cov_available = true;

  for (const auto& anchor : enumerate_anchors(cfg.space)) {
    std::vector<double> bits(anchor.bits().begin(), anchor.bits().end());
    const ScoreVector s(cfg.space, bits);

    {
      const auto start = std::chrono::steady_clock::now();
      GenerationContext ctx{cfg.space, flat, *backend_, *cache_};
      auto spec = assemble_blend_spec(ctx, cfg.polarize.base_prompt, s, BlendMode::full_average, 0.0);
      auto batch = sample_blend(spec, cfg.flow.seed, cfg.flow.samples, cfg.flow.integration, Decoder::identity(),
                                cfg.flow.threads);
      const auto set = build_prompt_set(*backend_, cfg.polarize.base_prompt, anchor, cfg.space, *cache_);
      const auto target = flat.bind(set.chains.front().result());
      const auto moments = sample_moments(batch.endpoints);

      Record rec{"lambda0 anchor " + anchor_label(anchor), bits, {}, batch.metadata.eval_count, elapsed_ms(start)};
      rec.metrics["empirical_mean"] = to_std(moments.mean);
      rec.metrics["mean_se"] = to_std(moments.mean_se);
      rec.metrics["target_mean"] = to_std(target.mean());
      rec.metrics["empirical_covariance"] = to_std(moments.covariance);
      const double zm = max_z_score(moments.mean, target.mean(), moments.mean_se);
      worst_target_mean = std::max(worst_target_mean, zm);
      rec.metrics["mean_z"] = {zm};
      if (target.components().size() == 1) {
        const auto d = static_cast<Eigen::Index>(target.dim());
        const Matrix target_cov = target.components().front().variance * Matrix::Identity(d, d);
        const double zc = max_z_score(moments.covariance, target_cov, moments.covariance_se);
        worst_target_cov = std::max(worst_target_cov, zc);
        rec.metrics["target_covariance"] = to_std(target_cov);
        rec.metrics["covariance_z"] = {zc};
      } else {
        target_cov_available = false;
      }
      report.records.push_back(std::move(rec));
    }

    {
      const auto start = std::chrono::steady_clock::now();
      auto spec = blend_spec(s, BlendMode::full_average, 0.5);
      auto batch = sample_blend(spec, cfg.flow.seed, cfg.flow.samples, cfg.flow.integration, Decoder::identity(),
                                cfg.flow.threads);
      const auto moments = sample_moments(batch.endpoints);
      Record rec{"lambda0.5 anchor " + anchor_label(anchor), bits, {}, batch.metadata.eval_count, 0.0};
      rec.metrics["empirical_mean"] = to_std(moments.mean);
      rec.metrics["mean_se"] = to_std(moments.mean_se);
      rec.metrics["empirical_covariance"] = to_std(moments.covariance);
      try {
        const auto oracle = moment_reference(*spec, cfg.experiment.moment_steps);
        const double zm = max_z_score(moments.mean, oracle.final_mean(), moments.mean_se);
        const double zc = max_z_score(moments.covariance, oracle.final_covariance(), moments.covariance_se);
        worst_oracle_mean = std::max(worst_oracle_mean, zm);
        worst_oracle_cov = std::max(worst_oracle_cov, zc);
        rec.metrics["oracle_mean"] = to_std(oracle.final_mean());
        rec.metrics["oracle_covariance"] = to_std(oracle.final_covariance());
        rec.metrics["mean_z"] = {zm};
        rec.metrics["covariance_z"] = {zc};
      } catch (const ContractError&) {
        oracle_available = false;
      }
      rec.wall_ms = elapsed_ms(start);
      report.records.push_back(std::move(rec));
    }
  }

  report.criteria.push_back(at_most("lambda0_vertex_mean_z", worst_target_mean, z));
  if (target_cov_available) {
    report.criteria.push_back(at_most("lambda0_vertex_covariance_z", worst_target_cov, z));
  } else {
    report.criteria.push_back(inconclusive("lambda0_vertex_covariance_z", z, "mixture targets have no closed-form covariance check"));
  }
  if (oracle_available) {
    report.criteria.push_back(at_most("half_base_oracle_mean_z", worst_oracle_mean, z));
    report.criteria.push_back(at_most("half_base_oracle_covariance_z", worst_oracle_cov, z));
  } else {
    report.criteria.push_back(inconclusive("half_base_oracle_mean_z", z, "non-affine fields: no moment oracle"));
    report.criteria.push_back(inconclusive("half_base_oracle_covariance_z", z, "non-affine fields: no moment oracle"));
  }
  return report;
}

double mean_endpoint_displacement(const SampleBatch& a, const SampleBatch& b) {
  if (a.endpoints.size() != b.endpoints.size()) throw ContractError("batches differ in size");
  double total = 0.0;
  for (std::size_t i = 0; i < a.endpoints.size(); ++i) total += (a.endpoints[i] - b.endpoints[i]).norm();
  return total / static_cast<double>(a.endpoints.size());
}

MetricsReport Harness::continuity_sweep() {
  const auto& cfg = config_;
  if (cfg.blend.mode != BlendMode::full_average) {
    throw ConfigError("continuity_sweep needs blend.mode=full_average; stochastic draws break the seed pairing");
  }
  auto report = new_report("continuity_sweep");
  const std::size_t n = cfg.space.size();
  const Eigen::Map<const Vector> from(cfg.experiment.path_from.data(), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Vector> to(cfg.experiment.path_to.data(), static_cast<Eigen::Index>(n));
  const Vector span = to - from;
  if (span.norm() == 0.0) throw ConfigError("continuity_sweep needs path_from != path_to");
  const Vector direction = span / span.norm();
  const auto& deltas = cfg.experiment.deltas;

  auto run = [&](const Vector& s) {
    const ScoreVector score(cfg.space, to_std(s));
    return sample_blend(blend_spec(score, BlendMode::full_average, cfg.blend.lambda), cfg.flow.seed, cfg.flow.samples,
                        cfg.flow.integration, Decoder::identity(), cfg.flow.threads);
  };
  auto inside = [](const Vector& s) { return (s.array() >= 0.0).all() && (s.array() <= 1.0).all(); };

  double worst_low = std::numeric_limits<double>::max();
  double worst_high = 0.0;
  std::size_t ratios_seen = 0;
  Series series{{"point", "delta", "displacement"}, {}};
  const std::size_t points = cfg.experiment.path_points;
  for (std::size_t p = 0; p < points; ++p) {
    const auto start = std::chrono::steady_clock::now();
    const double frac = points == 1 ? 0.0 : static_cast<double>(p) / static_cast<double>(points - 1);
    const Vector s = from + frac * span;
    const auto reference = run(s);
    std::uint64_t evals = reference.metadata.eval_count;

    std::vector<double> displacement;
    for (double delta : deltas) {
      Vector moved = s + delta * direction;
      if (!inside(moved)) moved = s - delta * direction;
      const auto batch = run(moved);
      evals += batch.metadata.eval_count;
      displacement.push_back(mean_endpoint_displacement(batch, reference));
      series.rows.push_back({static_cast<double>(p), delta, displacement.back()});
    }
    std::vector<double> ratios;
    for (std::size_t i = 0; i + 1 < displacement.size(); ++i) {
      if (displacement[i + 1] > 0.0) {
        const double r = displacement[i] / displacement[i + 1];
        ratios.push_back(r);
        worst_low = std::min(worst_low, r);
        worst_high = std::max(worst_high, r);
        ++ratios_seen;
      }
    }
    Record rec{"path point " + std::to_string(p), to_std(s), {}, evals, elapsed_ms(start)};
    rec.metrics["deltas"] = deltas;
    rec.metrics["displacement"] = displacement;
    rec.metrics["ratio"] = ratios;
    report.records.push_back(std::move(rec));
  }
  report.series["displacement_vs_delta"] = std::move(series);

  const std::string name = "displacement_ratio";
  if (ratios_seen == 0) {
    report.criteria.push_back({name, 0.0, 5.0, 20.0, CriterionStatus::inconclusive,
                               "all displacements are zero: the score has no effect on endpoints"});
  } else {
    const bool ok = worst_low >= 5.0 && worst_high <= 20.0;
    const double value = std::abs(std::log(worst_low / 10.0)) > std::abs(std::log(worst_high / 10.0)) ? worst_low
                                                                                                       : worst_high;
    report.criteria.push_back({name, value, 5.0, 20.0, ok ? CriterionStatus::pass : CriterionStatus::fail,
                               "successive delta levels; worst of " + std::to_string(ratios_seen)});
  }
  return report;
}

MetricsReport Harness::order_bias_experiment() {
  if (backend_->backend_id() != "template") {
    throw ConfigError("order_bias needs the template backend");
  }
  auto report = new_report("order_bias");
  const auto& cfg = config_;
  const std::size_t n = cfg.space.size();
  const double beta = model_.position_bias();
  if (beta == 0.0) report.warnings.push_back("position_bias is 0: the order-bias experiment is vacuous");

  SemanticModelParams unbiased = cfg.semantics;
  unbiased.position_bias = 0.0;
  const SemanticModel flat(cfg.space, unbiased);

  const auto d = static_cast<Eigen::Index>(model_.latent_dim());
  Matrix directions(d, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) directions.col(static_cast<Eigen::Index>(i)) = model_.dimension_directions()[i];
  const auto solver = directions.colPivHouseholderQr();

  double worst_chain = 0.0;
  double worst_average = 0.0;
  double worst_mean_gap = 0.0;
  for (const auto& anchor : enumerate_anchors(cfg.space)) {
    const auto start = std::chrono::steady_clock::now();
    const auto set = build_prompt_set(*backend_, cfg.polarize.base_prompt, anchor, cfg.space, *cache_);
    std::vector<double> chain_weights;
    Vector average = Vector::Zero(static_cast<Eigen::Index>(n));
    Vector averaged_mean = Vector::Zero(d);
    double anchor_worst_chain = 0.0;
    for (const auto& chain : set.chains) {
      const Vector mean = model_.bind(chain.result()).mean();
      averaged_mean += mean / static_cast<double>(n);
      const Vector coeff = solver.solve(Vector(mean - model_.base_mean()));
      for (std::size_t i = 0; i < n; ++i) {
        const double sign = anchor.bit(i) ? 1.0 : -1.0;
        const double w = coeff[static_cast<Eigen::Index>(i)] / (sign * model_.effect_magnitudes()[i]);
        chain_weights.push_back(w);
        average[static_cast<Eigen::Index>(i)] += w / static_cast<double>(n);
        anchor_worst_chain = std::max(anchor_worst_chain, std::abs(w - 1.0));
      }
    }
    const double anchor_average = (average.array() - 1.0).abs().maxCoeff();
    const Vector unbiased_mean = flat.bind(set.chains.front().result()).mean();
    const double gap = (averaged_mean - unbiased_mean).cwiseAbs().maxCoeff();
    worst_chain = std::max(worst_chain, anchor_worst_chain);
    worst_average = std::max(worst_average, anchor_average);
    worst_mean_gap = std::max(worst_mean_gap, gap);

    std::vector<double> bits(anchor.bits().begin(), anchor.bits().end());
    Record rec{"anchor " + anchor_label(anchor), bits, {}, 0, elapsed_ms(start)};
    rec.metrics["chain_effective_weights"] = chain_weights;
    rec.metrics["averaged_effective_weights"] = to_std(average);
    rec.metrics["worst_chain_asymmetry"] = {anchor_worst_chain};
    rec.metrics["averaged_asymmetry"] = {anchor_average};
    rec.metrics["averaged_mean_gap"] = {gap};
    report.records.push_back(std::move(rec));
  }

  const double expected = beta * static_cast<double>(n - 1) / (2.0 * static_cast<double>(n));
  report.criteria.push_back(at_most("averaged_asymmetry", worst_average, 1e-12));
  report.criteria.push_back(at_most("averaged_mean_gap", worst_mean_gap, 1e-12));
  report.criteria.push_back(at_most("worst_chain_asymmetry_error", std::abs(worst_chain - expected), 1e-12,
                                    "worst single chain " + std::to_string(worst_chain) + ", expected beta*(n-1)/(2n) = " +
                                        std::to_string(expected)));
  report.series["chain_asymmetry"] = Series{{"position_bias", "worst_chain", "averaged"},
                                            {{beta, worst_chain, worst_average}}};
  return report;
}

MetricsReport Harness::cost_accounting() {
  auto report = new_report("cost_accounting");
  const auto& cfg = config_;
  const std::size_t n = cfg.space.size();
  const std::uint64_t anchors = std::uint64_t{1} << n;
  const std::uint64_t per_call_stochastic = anchors + 1;
  const std::uint64_t per_call_full = n * anchors + 1;
  const std::uint64_t calls = cfg.flow.integration.steps * stages(cfg.flow.integration.solver) * cfg.flow.samples;

  std::uint64_t mismatches = 0;
  bool ratio_ok = true;
  Series series{{"mode_stochastic_evals", "mode_full_evals", "ratio", "expected_ratio", "stochastic_ms", "full_ms"}, {}};
  for (const auto& point : cfg.experiment.score_grid) {
    const ScoreVector s(cfg.space, point);
    std::uint64_t counts[2];
    double wall[2];
    const BlendMode modes[2] = {BlendMode::stochastic, BlendMode::full_average};
    for (int m = 0; m < 2; ++m) {
      auto batch = sample_blend(blend_spec(s, modes[m], cfg.blend.lambda), cfg.flow.seed, cfg.flow.samples,
                                cfg.flow.integration, Decoder::identity(), cfg.flow.threads);
      counts[m] = batch.metadata.eval_count;
      wall[m] = batch.metadata.wall_ms;
    }
    mismatches += counts[0] != calls * per_call_stochastic;
    mismatches += counts[1] != calls * per_call_full;
    ratio_ok = ratio_ok && counts[0] * per_call_full == counts[1] * per_call_stochastic;
    const double ratio = static_cast<double>(counts[0]) / static_cast<double>(counts[1]);
    const double expected = static_cast<double>(per_call_stochastic) / static_cast<double>(per_call_full);

    Record rec{"score point", point, {}, counts[0] + counts[1], wall[0] + wall[1]};
    rec.metrics["stochastic_evals"] = {static_cast<double>(counts[0])};
    rec.metrics["full_evals"] = {static_cast<double>(counts[1])};
    rec.metrics["evals_per_call"] = {static_cast<double>(per_call_stochastic), static_cast<double>(per_call_full)};
    rec.metrics["ratio"] = {ratio};
    rec.metrics["expected_ratio"] = {expected};
    rec.metrics["wall_ms"] = {wall[0], wall[1]};
    report.records.push_back(std::move(rec));
    series.rows.push_back({static_cast<double>(counts[0]), static_cast<double>(counts[1]), ratio, expected, wall[0],
                           wall[1]});
  }
  report.series["cost"] = std::move(series);
  report.criteria.push_back(at_most("eval_count_mismatches", static_cast<double>(mismatches), 0.0,
                                    "per call: stochastic 2^n+1, full n*2^n+1"));
  report.criteria.push_back({"eval_ratio_exact",
                             static_cast<double>(per_call_stochastic) / static_cast<double>(per_call_full),
                             static_cast<double>(per_call_stochastic) / static_cast<double>(per_call_full),
                             std::nullopt, ratio_ok ? CriterionStatus::pass : CriterionStatus::fail,
                             "stochastic:full = " + std::to_string(per_call_stochastic) + ":" +
                                 std::to_string(per_call_full)});
  return report;
}

MetricsReport Harness::stochastic_equivalence() {
  auto report = new_report("stochastic_equivalence");
  const auto& cfg = config_;
  const double z = cfg.experiment.z_threshold;
  if (model_.position_bias() == 0.0 && model_.explicit_bindings().empty()) {
    report.warnings.push_back("position_bias is 0: all chains coincide and the comparison is trivial");
  }
  if (cfg.experiment.seeds < 2) {
    report.criteria.push_back(inconclusive("stochastic_vs_full_mean_z", z, "fewer than two seeds"));
    return report;
  }

  double worst = 0.0;
  Series series{{"point", "coordinate", "stochastic_mean", "full_mean", "paired_se"}, {}};
  for (std::size_t p = 0; p < cfg.experiment.score_grid.size(); ++p) {
    const auto start = std::chrono::steady_clock::now();
    const ScoreVector s(cfg.space, cfg.experiment.score_grid[p]);
    const auto stochastic = blend_spec(s, BlendMode::stochastic, cfg.blend.lambda);
    const auto full = std::make_shared<const BlendSpec>(stochastic->with_mode(BlendMode::full_average));

    std::vector<Vector> stoch_end, full_end, diffs;
    std::uint64_t evals = 0;
    for (std::size_t seed = 0; seed < cfg.experiment.seeds; ++seed) {
      const auto seed_value = cfg.flow.seed + seed;
      auto a = sample_blend(stochastic, seed_value, cfg.experiment.samples_per_seed, cfg.flow.integration,
                            Decoder::identity(), cfg.flow.threads);
      auto b = sample_blend(full, seed_value, cfg.experiment.samples_per_seed, cfg.flow.integration,
                            Decoder::identity(), cfg.flow.threads);
      evals += a.metadata.eval_count + b.metadata.eval_count;
      for (std::size_t i = 0; i < a.endpoints.size(); ++i) {
        diffs.push_back(a.endpoints[i] - b.endpoints[i]);
        stoch_end.push_back(std::move(a.endpoints[i]));
        full_end.push_back(std::move(b.endpoints[i]));
      }
    }
    // Shared seeds give both modes the same x0, so the paired difference
    // carries only the chain-sampling noise.
    const auto dm = sample_moments(diffs);
    const auto sm = sample_moments(stoch_end);
    const auto fm = sample_moments(full_end);
    const double zp = max_z_score(dm.mean, Vector::Zero(dm.mean.size()), dm.mean_se);
    worst = std::max(worst, zp);

    Record rec{"score point " + std::to_string(p), cfg.experiment.score_grid[p], {}, evals, elapsed_ms(start)};
    rec.metrics["stochastic_mean"] = to_std(sm.mean);
    rec.metrics["full_mean"] = to_std(fm.mean);
    rec.metrics["stochastic_se"] = to_std(sm.mean_se);
    rec.metrics["full_se"] = to_std(fm.mean_se);
    rec.metrics["paired_difference"] = to_std(dm.mean);
    rec.metrics["paired_se"] = to_std(dm.mean_se);
    rec.metrics["z"] = {zp};
    report.records.push_back(std::move(rec));
    for (Eigen::Index c = 0; c < sm.mean.size(); ++c) {
      series.rows.push_back({static_cast<double>(p), static_cast<double>(c + 1), sm.mean[c], fm.mean[c], dm.mean_se[c]});
    }
  }
  report.series["stochastic_vs_full"] = std::move(series);
  report.criteria.push_back(at_most("stochastic_vs_full_mean_z", worst, z));
  return report;
}

MetricsReport Harness::monotone_response() {
  auto report = new_report("monotone_response");
  const auto& cfg = config_;
  const double z = cfg.experiment.z_threshold;
  const std::size_t dim = cfg.experiment.sweep_dimension - 1;
  const Vector& direction = model_.dimension_directions()[dim];
  const std::size_t points = cfg.experiment.sweep_points;

  std::vector<double> projections, ses;
  Series series{{"target", "projection", "se"}, {}};
  for (std::size_t p = 0; p < points; ++p) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> score = cfg.blend.score;
    score[dim] = static_cast<double>(p) / static_cast<double>(points - 1);
    const ScoreVector s(cfg.space, score);
    auto batch = sample_blend(blend_spec(s, cfg.blend.mode, cfg.blend.lambda), cfg.flow.seed, cfg.flow.samples,
                              cfg.flow.integration, Decoder::identity(), cfg.flow.threads);
    std::vector<Vector> proj;
    proj.reserve(batch.endpoints.size());
    for (const auto& x : batch.endpoints) proj.push_back(Vector::Constant(1, direction.dot(x)));
    const auto m = sample_moments(proj);
    projections.push_back(m.mean[0]);
    ses.push_back(m.mean_se[0]);
    series.rows.push_back({score[dim], m.mean[0], m.mean_se[0]});

    Record rec{"sweep point " + std::to_string(p), score, {}, batch.metadata.eval_count, elapsed_ms(start)};
    rec.metrics["projection"] = {m.mean[0]};
    rec.metrics["projection_se"] = {m.mean_se[0]};
    report.records.push_back(std::move(rec));
  }

  // Smallest standardized increment; a decrease is tolerated up to z combined SE.
  double worst = std::numeric_limits<double>::max();
  for (std::size_t p = 0; p + 1 < points; ++p) {
    const double step = projections[p + 1] - projections[p];
    const double se = std::hypot(ses[p], ses[p + 1]);
    double standardized;
    if (step >= -1e-9) {
      standardized = se > 0.0 ? std::max(step, 0.0) / se : 0.0;
    } else {
      standardized = se > 0.0 ? (step + 1e-9) / se : -std::numeric_limits<double>::max();
    }
    worst = std::min(worst, standardized);
  }
  report.series["target_vs_projection"] = std::move(series);
  report.criteria.push_back(at_least("min_standardized_increment", worst, -z,
                                     "projection on dimension " + std::to_string(dim + 1) + " direction"));
  return report;
}

MetricsReport Harness::run() {
  switch (config_.experiment.kind) {
    case ExperimentKind::vertex_recovery: return vertex_recovery();
    case ExperimentKind::continuity_sweep: return continuity_sweep();
    case ExperimentKind::order_bias: return order_bias_experiment();
    case ExperimentKind::cost_accounting: return cost_accounting();
    case ExperimentKind::stochastic_equivalence: return stochastic_equivalence();
    case ExperimentKind::monotone_response: return monotone_response();
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace cogflow
