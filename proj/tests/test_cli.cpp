#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cogflow/cli.hpp"
#include "cogflow/config.hpp"
#include "cogflow/errors.hpp"

#include <unistd.h>

using namespace cogflow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cogflow_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& json) {
  fs::create_directories(dir);
  const auto p = dir / "config.json";
  std::ofstream(p) << json;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallGenerate =
    R"({"semantics":{"position_bias":0.5},"blend":{"score":[0.3,0.8]},"flow":{"samples":64,"seed":3,)"
    R"("solver":"rk4","steps":20}})";

}  // namespace

TEST_CASE("orders prints the cyclic orders") {
  const auto r = cli({"orders", "-n", "3"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "(1,2,3),(2,3,1),(3,1,2)\n");
  CHECK(cli({"orders", "-n", "7"}).code == kExitConfigError);
  CHECK(cli({"orders"}).out == "(1,2),(2,1)\n");
}

TEST_CASE("validate reports every invariant and passes") {
  const auto r = cli({"validate"});
  CHECK(r.code == kExitOk);
  std::istringstream lines(r.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    CHECK(line.rfind("PASS ", 0) == 0);
    ++count;
  }
  CHECK(count >= 6);
}

TEST_CASE("help lists every flag") {
  const auto r = cli({"--help"});
  CHECK(r.code == kExitOk);
  for (const char* flag : {"--config", "--out", "--set", "--threads", "--seed", "--backend", "--quiet", "--verbose",
                           "orders", "polarize", "generate", "experiment", "validate"}) {
    CHECK_MESSAGE(r.out.find(flag) != std::string::npos, flag);
  }
}

TEST_CASE("argument and config errors exit with 2") {
  CHECK(cli({}).code == kExitConfigError);
  CHECK(cli({"frobnicate"}).code == kExitConfigError);
  CHECK(cli({"generate"}).code == kExitConfigError);  // --config is required
  CHECK(cli({"--backend", "oracle", "validate"}).code == kExitConfigError);

  const auto dir = fresh_dir("bad");
  CHECK(cli({"--config", (dir / "missing.json").string(), "generate"}).code == kExitConfigError);
  auto unknown = write_config(dir, R"({"flow":{"sampels":10}})");
  const auto r = cli({"--config", unknown.string(), "generate"});
  CHECK(r.code == kExitConfigError);
  CHECK(r.err.find("sampels") != std::string::npos);
  auto bad_score = write_config(dir, R"({"blend":{"score":[0.5,1.5]}})");
  CHECK(cli({"--config", bad_score.string(), "--out", (dir / "o").string(), "generate"}).code == kExitConfigError);
  fs::remove_all(dir);
}

TEST_CASE("generate writes byte-identical CSVs for a repeated run") {
  const auto dir = fresh_dir("gen");
  const auto cfg = write_config(dir, kSmallGenerate);
  for (const char* sub : {"a", "b"}) {
    CHECK(cli({"--quiet", "--config", cfg.string(), "--out", (dir / sub).string(), "generate"}).code == kExitOk);
  }
  for (const char* file : {"endpoints.csv", "decoded.csv"}) {
    const auto a = slurp(dir / "a" / file);
    CHECK(a.rfind("c1,c2\n", 0) == 0);
    CHECK(a == slurp(dir / "b" / file));
  }
  const auto meta = nlohmann::json::parse(slurp(dir / "a" / "metadata.json"));
  CHECK(meta.at("seed") == 3);
  CHECK(meta.at("eval_count") == 64 * 20 * 4 * 9);
  CHECK(meta.at("config_digest").get<std::string>().size() == 64);

  // Thread count does not change results; --seed and --set do.
  CHECK(cli({"--quiet", "--config", cfg.string(), "--threads", "3", "--out", (dir / "c").string(), "generate"}).code ==
        kExitOk);
  CHECK(slurp(dir / "c" / "endpoints.csv") == slurp(dir / "a" / "endpoints.csv"));
  CHECK(cli({"--quiet", "--config", cfg.string(), "--seed", "4", "--out", (dir / "d").string(), "generate"}).code ==
        kExitOk);
  CHECK(slurp(dir / "d" / "endpoints.csv") != slurp(dir / "a" / "endpoints.csv"));
  CHECK(cli({"--quiet", "--config", cfg.string(), "--set", "flow.record_trajectory=true", "--set",
             "flow.samples=2", "--out", (dir / "e").string(), "generate"})
            .code == kExitOk);
  CHECK(slurp(dir / "e" / "trajectories.csv").rfind("sample,step,t,c1,c2\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("unwritable output directory exits with 3 and leaves nothing") {
  const auto dir = fresh_dir("unwritable");
  const auto cfg = write_config(dir, R"({"experiment":{"kind":"order_bias"},"semantics":{"position_bias":0.5}})");
  std::ofstream(dir / "blocker") << "a file, not a directory";
  const auto target = dir / "blocker" / "out";
  CHECK(cli({"--config", cfg.string(), "--out", target.string(), "experiment"}).code == kExitBackendOrIo);
  CHECK_FALSE(fs::exists(target));
  CHECK(cli({"--config", cfg.string(), "--out", target.string(), "generate"}).code == kExitBackendOrIo);
  CHECK(cli({"--out", target.string(), "polarize"}).code == kExitBackendOrIo);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 2);
  fs::remove_all(dir);
}

TEST_CASE("experiment exit codes follow the criteria") {
  const auto dir = fresh_dir("experiment");
  const auto cfg = write_config(dir, R"({"experiment":{"kind":"order_bias"},"semantics":{"position_bias":0.5}})");
  const auto r = cli({"--config", cfg.string(), "--out", (dir / "out").string(), "experiment"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("PASS averaged_asymmetry") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "metrics.json"));

  // Stochastic draws break the seed pairing the continuity sweep relies on.
  const auto stoch = write_config(dir / "s", R"({"experiment":{"kind":"continuity_sweep"},"blend":{"mode":"stochastic"}})");
  CHECK(cli({"--config", stoch.string(), "--out", (dir / "s" / "out").string(), "experiment"}).code ==
        kExitConfigError);
  fs::remove_all(dir);
}

TEST_CASE("polarize exports prompt sets") {
  const auto dir = fresh_dir("polarize");
  const auto r = cli({"--quiet", "--out", dir.string(), "polarize"});
  CHECK(r.code == kExitOk);
  const auto j = nlohmann::json::parse(slurp(dir / "prompt_sets.json"));
  CHECK(j.at("sets").size() == 4);
  CHECK(j["sets"][3]["chains"][0]["result"] == "a valley «valence:+»«arousal:+»");
  fs::remove_all(dir);
}

TEST_CASE("llm backend failures exit with 3") {
  const auto dir = fresh_dir("llm");
  const auto cfg = write_config(dir, R"({"polarize":{"backend":"llm","endpoint":"http://127.0.0.1:1/v1/chat/completions",)"
                                     R"("retries":0,"timeout_ms":300,"cache_path":")" +
                                         (dir / "cache.ndjson").string() + R"("}})");
  CHECK(cli({"--config", cfg.string(), "--out", (dir / "out").string(), "polarize"}).code == kExitBackendOrIo);
  fs::remove_all(dir);
}

TEST_CASE("config parsing and overrides") {
  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "blend.lambda=0");
  apply_override(doc, "polarize.base_prompt=a quiet lake");
  apply_override(doc, "blend.score=[0.1,0.9]");
  const auto cfg = parse_config(doc);
  CHECK(cfg.blend.lambda == 0.0);
  CHECK(cfg.polarize.base_prompt == "a quiet lake");
  CHECK(cfg.blend.score == std::vector<double>{0.1, 0.9});
  CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"extra", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"blend", {{"mode", "sometimes"}}}}), ConfigError);

  // Effective config round-trips and its digest ignores threads and output dir.
  const auto again = parse_config(config_to_json(cfg));
  CHECK(again.digest() == cfg.digest());
  auto moved = cfg;
  moved.flow.threads = 7;
  moved.experiment.output_dir = "/elsewhere";
  CHECK(moved.digest() == cfg.digest());
  moved.flow.seed = 1;
  CHECK(moved.digest() != cfg.digest());
}
