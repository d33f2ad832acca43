#include "cogflow/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <span>

#include "cogflow/digest.hpp"
#include "cogflow/errors.hpp"
#include "cogflow/json_io.hpp"

namespace cogflow {

using nlohmann::json;

namespace {

CognitiveSpace default_space() {
  return CognitiveSpace({
      {"valence", 1, "unpleasant, negative mood", "pleasant, positive mood"},
      {"arousal", 2, "calm, low energy", "excited, high energy"},
  });
}

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown config key '" + std::string(where) + "." + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, std::string_view where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + std::string(where) + "." + key + "' has the wrong type: " + e.what());
  }
}

template <typename E>
E parse_enum(const json& j, std::string_view where, const char* key, E fallback,
             std::span<const std::pair<std::string_view, E>> table) {
  if (!j.contains(key)) return fallback;
  std::string name;
  read(j, where, key, name);
  for (const auto& [label, value] : table) {
    if (label == name) return value;
  }
  std::string options;
  for (const auto& [label, value] : table) options += (options.empty() ? "" : "|") + std::string(label);
  throw ConfigError("config key '" + std::string(where) + "." + key + "' must be one of " + options + ", got '" +
                    name + "'");
}

constexpr std::pair<std::string_view, BlendMode> kModes[] = {{"stochastic", BlendMode::stochastic},
                                                             {"full_average", BlendMode::full_average}};
constexpr std::pair<std::string_view, Solver> kSolvers[] = {
    {"euler", Solver::euler}, {"midpoint", Solver::midpoint}, {"rk4", Solver::rk4}};
constexpr std::pair<std::string_view, ExperimentKind> kKinds[] = {
    {"vertex_recovery", ExperimentKind::vertex_recovery},
    {"continuity_sweep", ExperimentKind::continuity_sweep},
    {"order_bias", ExperimentKind::order_bias},
    {"cost_accounting", ExperimentKind::cost_accounting},
    {"stochastic_equivalence", ExperimentKind::stochastic_equivalence},
    {"monotone_response", ExperimentKind::monotone_response},
};
constexpr std::pair<std::string_view, BackendKind> kBackends[] = {{"template", BackendKind::template_rules},
                                                                  {"llm", BackendKind::llm}};
constexpr std::pair<std::string_view, DrawSchedule> kDraws[] = {{"per_evaluation", DrawSchedule::per_evaluation},
                                                                {"per_step", DrawSchedule::per_step}};

template <typename E, std::size_t N>
std::string_view label_of(const std::pair<std::string_view, E> (&table)[N], E value) {
  for (const auto& [label, v] : table) {
    if (v == value) return label;
  }
  return "?";
}

template <typename E, std::size_t N>
std::span<const std::pair<std::string_view, E>> as_list(const std::pair<std::string_view, E> (&table)[N]) {
  return table;
}

TargetDistribution parse_distribution(const json& j, const std::string& where) {
  check_keys(j, where, {"prompt", "components"});
  if (!j.contains("components") || !j["components"].is_array()) {
    throw ConfigError(where + ".components must be an array");
  }
  std::vector<GaussianComponent> comps;
  for (const auto& c : j["components"]) {
    const auto cw = where + ".components[]";
    check_keys(c, cw, {"weight", "mean", "variance"});
    GaussianComponent comp;
    read(c, cw, "weight", comp.weight);
    read(c, cw, "variance", comp.variance);
    if (!c.contains("mean")) throw ConfigError(cw + ".mean is required");
    comp.mean = vector_from_json(c["mean"]);
    comps.push_back(std::move(comp));
  }
  try {
    return TargetDistribution(std::move(comps));
  } catch (const ContractError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

json distribution_to_json(const TargetDistribution& dist) {
  json comps = json::array();
  for (const auto& c : dist.components()) {
    comps.push_back({{"weight", c.weight}, {"mean", vector_to_json(c.mean)}, {"variance", c.variance}});
  }
  return comps;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) { return label_of(kKinds, kind); }
std::string_view to_string(BlendMode mode) { return label_of(kModes, mode); }
std::string_view to_string(Solver solver) { return label_of(kSolvers, solver); }

json space_to_json(const CognitiveSpace& space) {
  json dims = json::array();
  for (const auto& d : space.dimensions()) {
    dims.push_back({{"name", d.name}, {"low_pole_text", d.low_pole_text}, {"high_pole_text", d.high_pole_text}});
  }
  return dims;
}

CognitiveSpace space_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("space.dimensions must be an array");
  std::vector<DimensionSpec> dims;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& d = j[i];
    check_keys(d, "space.dimensions[]", {"name", "low_pole_text", "high_pole_text"});
    DimensionSpec spec;
    spec.index = i + 1;
    read(d, "space.dimensions[]", "name", spec.name);
    read(d, "space.dimensions[]", "low_pole_text", spec.low_pole_text);
    read(d, "space.dimensions[]", "high_pole_text", spec.high_pole_text);
    dims.push_back(std::move(spec));
  }
  try {
    return CognitiveSpace(std::move(dims));
  } catch (const ContractError& e) {
    throw ConfigError(std::string("space: ") + e.what());
  }
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  std::vector<double> values;
  try {
    values = j.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("expected an array of numbers: ") + e.what());
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty array of rows");
  std::vector<Vector> rows;
  for (const auto& r : j) rows.push_back(vector_from_json(r));
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw ConfigError("matrix rows have different lengths");
    m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
  return m;
}

Config parse_config(const json& document) {
  Config cfg;
  cfg.space = default_space();
  check_keys(document, "config", {"space", "semantics", "polarize", "blend", "flow", "experiment"});
  auto section = [&](const char* name) { return document.contains(name) ? document[name] : json::object(); };

  const json space = section("space");
  check_keys(space, "space", {"dimensions"});
  if (space.contains("dimensions")) cfg.space = space_from_json(space["dimensions"]);

  const json sem = section("semantics");
  check_keys(sem, "semantics",
             {"latent_dim", "base_mean", "directions", "effect_magnitudes", "position_bias", "variance", "bindings"});
  read(sem, "semantics", "latent_dim", cfg.semantics.latent_dim);
  read(sem, "semantics", "base_mean", cfg.semantics.base_mean);
  read(sem, "semantics", "directions", cfg.semantics.dimension_directions);
  read(sem, "semantics", "effect_magnitudes", cfg.semantics.effect_magnitudes);
  read(sem, "semantics", "position_bias", cfg.semantics.position_bias);
  read(sem, "semantics", "variance", cfg.semantics.variance);
  if (sem.contains("bindings")) {
    if (!sem["bindings"].is_array()) throw ConfigError("semantics.bindings must be an array");
    for (const auto& b : sem["bindings"]) {
      std::string prompt;
      read(b, "semantics.bindings[]", "prompt", prompt);
      if (prompt.empty()) throw ConfigError("semantics.bindings[] needs a nonempty prompt");
      cfg.semantics.explicit_bindings.insert_or_assign(prompt, parse_distribution(b, "semantics.bindings[]"));
    }
  }

  const json pol = section("polarize");
  check_keys(pol, "polarize",
             {"backend", "base_prompt", "endpoint", "model", "cache_path", "timeout_ms", "retries", "backoff_ms"});
  cfg.polarize.backend = parse_enum(pol, "polarize", "backend", cfg.polarize.backend, as_list(kBackends));
  read(pol, "polarize", "base_prompt", cfg.polarize.base_prompt);
  read(pol, "polarize", "endpoint", cfg.polarize.endpoint);
  read(pol, "polarize", "model", cfg.polarize.model);
  read(pol, "polarize", "cache_path", cfg.polarize.cache_path);
  read(pol, "polarize", "timeout_ms", cfg.polarize.timeout_ms);
  read(pol, "polarize", "retries", cfg.polarize.retries);
  read(pol, "polarize", "backoff_ms", cfg.polarize.backoff_ms);
  if (cfg.polarize.base_prompt.empty()) throw ConfigError("polarize.base_prompt must be nonempty");
  if (cfg.polarize.retries < 0 || cfg.polarize.timeout_ms <= 0 || cfg.polarize.backoff_ms < 0) {
    throw ConfigError("polarize timeout/retry settings must be non-negative (timeout positive)");
  }

  const json bl = section("blend");
  check_keys(bl, "blend", {"mode", "lambda", "score", "draws"});
  cfg.blend.mode = parse_enum(bl, "blend", "mode", cfg.blend.mode, as_list(kModes));
  cfg.blend.draws = parse_enum(bl, "blend", "draws", cfg.blend.draws, as_list(kDraws));
  read(bl, "blend", "lambda", cfg.blend.lambda);
  read(bl, "blend", "score", cfg.blend.score);
  if (!(cfg.blend.lambda >= 0.0 && cfg.blend.lambda <= 1.0)) throw ConfigError("blend.lambda must lie in [0,1]");
  if (cfg.blend.score.empty()) cfg.blend.score.assign(cfg.space.size(), 0.5);

  const json fl = section("flow");
  check_keys(fl, "flow", {"solver", "steps", "samples", "seed", "record_trajectory", "decoder", "threads"});
  cfg.flow.integration.solver = parse_enum(fl, "flow", "solver", cfg.flow.integration.solver, as_list(kSolvers));
  read(fl, "flow", "steps", cfg.flow.integration.steps);
  read(fl, "flow", "record_trajectory", cfg.flow.integration.record_trajectory);
  read(fl, "flow", "samples", cfg.flow.samples);
  read(fl, "flow", "seed", cfg.flow.seed);
  read(fl, "flow", "threads", cfg.flow.threads);
  if (cfg.flow.integration.steps == 0) throw ConfigError("flow.steps must be positive");
  if (cfg.flow.samples == 0) throw ConfigError("flow.samples must be positive");
  if (fl.contains("decoder")) {
    const auto& dec = fl["decoder"];
    check_keys(dec, "flow.decoder", {"kind", "matrix", "offset"});
    std::string kind = "identity";
    read(dec, "flow.decoder", "kind", kind);
    if (kind == "affine") {
      if (!dec.contains("matrix") || !dec.contains("offset")) {
        throw ConfigError("flow.decoder of kind affine needs matrix and offset");
      }
      try {
        cfg.flow.decoder = Decoder::affine(matrix_from_json(dec["matrix"]), vector_from_json(dec["offset"]));
      } catch (const ContractError& e) {
        throw ConfigError(std::string("flow.decoder: ") + e.what());
      }
    } else if (kind != "identity") {
      throw ConfigError("flow.decoder.kind must be identity|affine, got '" + kind + "'");
    }
  }

  const json ex = section("experiment");
  check_keys(ex, "experiment",
             {"kind", "output_dir", "score_grid", "path_from", "path_to", "path_points", "deltas", "seeds",
              "samples_per_seed", "sweep_dimension", "sweep_points", "moment_steps", "z_threshold"});
  auto& e = cfg.experiment;
  e.kind = parse_enum(ex, "experiment", "kind", e.kind, as_list(kKinds));
  read(ex, "experiment", "output_dir", e.output_dir);
  read(ex, "experiment", "score_grid", e.score_grid);
  read(ex, "experiment", "path_from", e.path_from);
  read(ex, "experiment", "path_to", e.path_to);
  read(ex, "experiment", "path_points", e.path_points);
  read(ex, "experiment", "deltas", e.deltas);
  read(ex, "experiment", "seeds", e.seeds);
  read(ex, "experiment", "samples_per_seed", e.samples_per_seed);
  read(ex, "experiment", "sweep_dimension", e.sweep_dimension);
  read(ex, "experiment", "sweep_points", e.sweep_points);
  read(ex, "experiment", "moment_steps", e.moment_steps);
  read(ex, "experiment", "z_threshold", e.z_threshold);
  const std::size_t n = cfg.space.size();
  if (e.score_grid.empty()) e.score_grid.push_back(cfg.blend.score);
  if (e.path_from.empty()) e.path_from.assign(n, 0.2);
  if (e.path_to.empty()) e.path_to.assign(n, 0.8);
  if (e.path_points == 0 || e.sweep_points < 2 || e.samples_per_seed == 0 || e.moment_steps == 0) {
    throw ConfigError("experiment point/sample counts must be positive (sweep_points >= 2)");
  }
  if (e.sweep_dimension < 1 || e.sweep_dimension > n) throw ConfigError("experiment.sweep_dimension out of range");
  if (e.deltas.empty()) throw ConfigError("experiment.deltas must be nonempty");
  for (double d : e.deltas) {
    if (!(d > 0.0 && d < 0.5)) throw ConfigError("experiment.deltas must lie in (0, 0.5)");
  }

  // Validate every score-valued setting and the semantic model eagerly.
  try {
    (void)cfg.score();
    for (const auto& s : e.score_grid) (void)ScoreVector(cfg.space, s);
    (void)ScoreVector(cfg.space, e.path_from);
    (void)ScoreVector(cfg.space, e.path_to);
    (void)cfg.semantic_model();
  } catch (const ContractError& err) {
    throw ConfigError(err.what());
  }
  return cfg;
}

json config_to_json(const Config& cfg) {
  json bindings = json::array();
  for (const auto& [prompt, dist] : cfg.semantics.explicit_bindings) {
    bindings.push_back({{"prompt", prompt}, {"components", distribution_to_json(dist)}});
  }
  json decoder = {{"kind", "identity"}};
  if (!cfg.flow.decoder.is_identity()) {
    decoder = {{"kind", "affine"},
               {"matrix", matrix_to_json(*cfg.flow.decoder.matrix())},
               {"offset", vector_to_json(cfg.flow.decoder.offset())}};
  }
  const auto& e = cfg.experiment;
  return {
      {"space", {{"dimensions", space_to_json(cfg.space)}}},
      {"semantics",
       {{"latent_dim", cfg.semantics.latent_dim},
        {"base_mean", cfg.semantics.base_mean},
        {"directions", cfg.semantics.dimension_directions},
        {"effect_magnitudes", cfg.semantics.effect_magnitudes},
        {"position_bias", cfg.semantics.position_bias},
        {"variance", cfg.semantics.variance},
        {"bindings", bindings}}},
      {"polarize",
       {{"backend", label_of(kBackends, cfg.polarize.backend)},
        {"base_prompt", cfg.polarize.base_prompt},
        {"endpoint", cfg.polarize.endpoint},
        {"model", cfg.polarize.model},
        {"cache_path", cfg.polarize.cache_path},
        {"timeout_ms", cfg.polarize.timeout_ms},
        {"retries", cfg.polarize.retries},
        {"backoff_ms", cfg.polarize.backoff_ms}}},
      {"blend",
       {{"mode", to_string(cfg.blend.mode)},
        {"lambda", cfg.blend.lambda},
        {"score", cfg.blend.score},
        {"draws", label_of(kDraws, cfg.blend.draws)}}},
      {"flow",
       {{"solver", to_string(cfg.flow.integration.solver)},
        {"steps", cfg.flow.integration.steps},
        {"samples", cfg.flow.samples},
        {"seed", cfg.flow.seed},
        {"record_trajectory", cfg.flow.integration.record_trajectory},
        {"decoder", decoder},
        {"threads", cfg.flow.threads}}},
      {"experiment",
       {{"kind", to_string(e.kind)},
        {"output_dir", e.output_dir},
        {"score_grid", e.score_grid},
        {"path_from", e.path_from},
        {"path_to", e.path_to},
        {"path_points", e.path_points},
        {"deltas", e.deltas},
        {"seeds", e.seeds},
        {"samples_per_seed", e.samples_per_seed},
        {"sweep_dimension", e.sweep_dimension},
        {"sweep_points", e.sweep_points},
        {"moment_steps", e.moment_steps},
        {"z_threshold", e.z_threshold}}},
  };
}

ScoreVector Config::score() const { return ScoreVector(space, blend.score); }

SemanticModel Config::semantic_model() const { return SemanticModel(space, semantics); }

GenerationRequest Config::request() const {
  return GenerationRequest{
      .base_prompt = polarize.base_prompt,
      .score = score(),
      .seed = flow.seed,
      .sample_count = flow.samples,
      .mode = blend.mode,
      .lambda = blend.lambda,
      .draws = blend.draws,
      .integration = flow.integration,
      .decoder = flow.decoder,
      .threads = flow.threads,
  };
}

std::string Config::digest() const {
  // Thread count and output location do not affect results.
  auto doc = config_to_json(*this);
  doc["flow"].erase("threads");
  doc["experiment"].erase("output_dir");
  return sha256_hex(doc.dump());
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

void apply_override(json& document, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key.path=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &document;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override path '" + path + "' crosses a non-object value");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace cogflow
