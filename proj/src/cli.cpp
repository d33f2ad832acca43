#include "cogflow/cli.hpp"

#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "cogflow/config.hpp"
#include "cogflow/errors.hpp"
#include "cogflow/flow.hpp"
#include "cogflow/harness.hpp"
#include "cogflow/json_io.hpp"
#include "cogflow/polarize.hpp"

namespace cogflow {

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  std::string backend;
  bool quiet = false;
  bool verbose = false;
  std::size_t orders_n = 0;
};

class Session {
 public:
  Session(const Options& opts, std::ostream& out, std::ostream& err) : opts_(opts), out_(out), err_(err) {}

  Config load(bool require_config) const {
    if (require_config && opts_.config_path.empty()) throw ConfigError("--config is required for this subcommand");
    nlohmann::json doc = opts_.config_path.empty() ? nlohmann::json::object() : read_json_file(opts_.config_path);
    for (const auto& o : opts_.overrides) apply_override(doc, o);
    if (opts_.seed) apply_override(doc, "flow.seed=" + std::to_string(*opts_.seed));
    if (opts_.threads) apply_override(doc, "flow.threads=" + std::to_string(*opts_.threads));
    if (!opts_.backend.empty()) apply_override(doc, "polarize.backend=\"" + opts_.backend + "\"");
    auto cfg = parse_config(doc);
    if (opts_.verbose) err_ << "config digest " << cfg.digest() << '\n';
    return cfg;
  }

  std::filesystem::path out_dir(const Config& cfg) const {
    return opts_.out_dir.empty() ? std::filesystem::path(cfg.experiment.output_dir)
                                 : std::filesystem::path(opts_.out_dir);
  }

  void info(const std::string& line) const {
    if (!opts_.quiet) out_ << line << '\n';
  }

  int orders() const {
    std::size_t n = opts_.orders_n;
    if (n == 0) n = load(false).space.size();
    std::string line;
    const auto orders = build_chain_orders_checked(n);
    for (std::size_t j = 0; j < orders.size(); ++j) {
      line += j ? ",(" : "(";
      for (std::size_t p = 0; p < orders[j].size(); ++p) line += (p ? "," : "") + std::to_string(orders[j][p]);
      line += ")";
    }
    out_ << line << '\n';
    return kExitOk;
  }

  int polarize() const {
    const auto cfg = load(false);
    auto backend = make_backend(cfg);
    auto cache = make_cache(cfg);
    const auto sets = build_all_sets(*backend, cfg.polarize.base_prompt, cfg.space, *cache);
    const auto doc = export_prompt_sets(cfg.polarize.base_prompt, cfg.space, sets);
    const auto dir = out_dir(cfg);
    write_files_atomically(dir, {{"prompt_sets.json", doc.dump(2) + "\n"}});
    info("wrote " + std::to_string(sets.size()) + " prompt sets to " + (dir / "prompt_sets.json").string() + " (" +
         std::to_string(cache->fetches()) + " backend calls)");
    return kExitOk;
  }

  int generate() const {
    const auto cfg = load(true);
    const auto model = cfg.semantic_model();
    auto backend = make_backend(cfg);
    auto cache = make_cache(cfg);
    GenerationContext ctx{cfg.space, model, *backend, *cache};
    const auto request = cfg.request();
    const auto batch = cogflow::generate(request, ctx);

    nlohmann::json meta = {{"seed", batch.metadata.seed},
                           {"eval_count", batch.metadata.eval_count},
                           {"wall_ms", batch.metadata.wall_ms},
                           {"config_digest", cfg.digest()},
                           {"config", config_to_json(cfg)}};
    std::map<std::string, std::string> files{{"endpoints.csv", vectors_csv(batch.endpoints)},
                                             {"decoded.csv", vectors_csv(batch.decoded)},
                                             {"metadata.json", meta.dump(2) + "\n"}};
    const auto dir = out_dir(cfg);
    if (request.integration.record_trajectory) {
      files["trajectories.csv"] = trajectories_csv(batch.trajectories);
    }
    write_files_atomically(dir, files);
    info("generated " + std::to_string(batch.endpoints.size()) + " samples (" +
         std::to_string(batch.metadata.eval_count) + " field evaluations) into " + dir.string());
    return kExitOk;
  }

  int experiment() const {
    const auto cfg = load(true);
    Harness harness(cfg);
    const auto report = harness.run();
    emit_report(report, out_dir(cfg));
    for (const auto& w : report.warnings) err_ << "warning: " << w << '\n';
    print_criteria(report.criteria);
    return report.passed() ? kExitOk : kExitCriterionFailure;
  }

  int validate() const {
    const auto criteria = builtin_invariants();
    print_criteria(criteria);
    for (const auto& c : criteria) {
      if (c.status == CriterionStatus::fail) return kExitCriterionFailure;
    }
    return kExitOk;
  }

 private:
  static std::vector<std::vector<std::size_t>> build_chain_orders_checked(std::size_t n) {
    try {
      return build_chain_orders(n);
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }

  void print_criteria(const std::vector<Criterion>& criteria) const {
    for (const auto& c : criteria) {
      const char* label = c.status == CriterionStatus::pass ? "PASS" : c.status == CriterionStatus::fail ? "FAIL" : "SKIP";
      out_ << label << ' ' << c.name << " value=" << format_double(c.value) << " threshold=" << format_double(c.threshold);
      if (c.upper) out_ << ".." << format_double(*c.upper);
      if (!c.detail.empty() && (opts_.verbose || c.status != CriterionStatus::pass)) out_ << " (" << c.detail << ')';
      out_ << '\n';
    }
  }

  const Options& opts_;
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous cognitive blending of flow-matching velocity fields", "cogflow"};
  app.require_subcommand(1);
  Options opts;

  app.add_option("--config", opts.config_path, "Experiment config (JSON); required for generate/experiment");
  app.add_option("--out", opts.out_dir, "Output directory (default: experiment.output_dir)");
  app.add_option("--set", opts.overrides, "Override a config key, e.g. blend.lambda=0 (repeatable)");
  app.add_option("--threads", opts.threads, "Worker threads (0 = all cores)");
  app.add_option("--seed", opts.seed, "Base seed (overrides flow.seed)");
  app.add_option("--backend", opts.backend, "Polarization backend")->check(CLI::IsMember({"template", "llm"}));
  auto* quiet = app.add_flag("--quiet", opts.quiet, "Only print results");
  app.add_flag("--verbose", opts.verbose, "Print config digest and criterion details")->excludes(quiet);

  auto* orders = app.add_subcommand("orders", "Print the cyclic chain orders for n dimensions");
  orders->add_option("-n", opts.orders_n, "Number of dimensions (default: size of the configured space)");
  auto* polarize = app.add_subcommand("polarize", "Build and export the polarized prompt set of every anchor");
  auto* generate = app.add_subcommand("generate", "Sample endpoints for the configured prompt and score");
  auto* experiment = app.add_subcommand("experiment", "Run the configured harness experiment and write reports");
  auto* validate = app.add_subcommand("validate", "Run the built-in invariant checks");
  for (auto* sub : {orders, polarize, generate, experiment, validate}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  Session session(opts, out, err);
  try {
    if (*orders) return session.orders();
    if (*polarize) return session.polarize();
    if (*generate) return session.generate();
    if (*experiment) return session.experiment();
    if (*validate) return session.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const BindingError& e) {
    err << "binding error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const ContractError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what();
    if (!e.diagnostics().empty()) err << " [" << e.diagnostics() << ']';
    err << '\n';
    return kExitBackendOrIo;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitBackendOrIo;
  } catch (const DivergenceError& e) {
    err << "integration diverged: " << e.what() << '\n';
    return kExitCriterionFailure;
  }
  return kExitConfigError;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace cogflow
