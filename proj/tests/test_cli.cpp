#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

// Runs the CLI with `args`, discarding its output, and returns the exit status.
int run(const std::string& args) {
  const std::string cmd = std::string("\"") + HESSBOUND_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

struct Workspace {
  fs::path dir;
  fs::path config;

  explicit Workspace(const std::string& name, const nlohmann::json& cfg = default_config()) {
    dir = fs::temp_directory_path() / ("hessbound_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    config = dir / "config.json";
    std::ofstream(config) << cfg.dump(2);
  }

  static nlohmann::json default_config() {
    return {
        {"dataset", {{"kind", "gaussian"}, {"n_per_class", 10}, {"seed", 7}}},
        {"model", {{"layer_widths", {2, 8, 3}}}},
        {"training", {{"optimizer", {{"kind", "adam"}, {"learning_rate", 0.01}}},
                      {"schemes", {"normal", "large_norm"}},
                      {"seeds", {0, 1}}}},
        {"analysis", {{"k", 2}, {"grid_resolution", 10}}},
        {"output", {{"directory", "out"}}},
    };
  }

  std::string q(const fs::path& p) const { return "\"" + p.string() + "\""; }
  fs::path out() const { return dir / "out"; }
};

}  // namespace

TEST_CASE("gen-data writes a reproducible CSV") {
  Workspace w("gen");
  CHECK(run("gen-data --kind gaussian --n-per-class 100 --seed 7 --out " + w.q(w.dir / "a")) == 0);
  CHECK(run("gen-data --kind gaussian --n-per-class 100 --seed 7 --out " + w.q(w.dir / "b")) == 0);
  const fs::path a = w.dir / "a" / "gaussian.csv";
  REQUIRE(fs::exists(a));
  CHECK(line_count(a) == 301);  // header plus 300 rows
  CHECK(slurp(a) == slurp(w.dir / "b" / "gaussian.csv"));
  CHECK(run("gen-data --kind spiral --out " + w.q(w.dir / "c")) == 2);
  CHECK(run("gen-data --kind gaussian --n-per-class 0 --out " + w.q(w.dir / "c")) == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("train, analyze and margin produce their files") {
  Workspace w("pipeline");
  CHECK(run("train --config " + w.q(w.config) + " --checkpoint-at 0,10,100") == 0);
  for (const char* f : {"theta.json", "train_report.json", "checkpoint_epoch_0.json", "checkpoint_epoch_10.json",
                        "checkpoint_epoch_100.json"}) {
    CHECK_MESSAGE(fs::exists(w.out() / f), f);
  }
  const fs::path theta = w.out() / "theta.json";

  CHECK(run("analyze --config " + w.q(w.config) + " --theta " + w.q(theta) + " --per-class 1") == 0);
  for (const char* f : {"spectrum.json", "alignment.csv", "report.json", "grid.json", "grid_predictions.csv",
                        "grid_A1.csv", "grid_A2.csv", "class1_spectrum.json"}) {
    CHECK_MESSAGE(fs::exists(w.out() / f), f);
  }
  CHECK(line_count(w.out() / "grid_predictions.csv") == 10);
  const auto report = nlohmann::json::parse(slurp(w.out() / "report.json"));
  CHECK(report["kind"] == "generalization_report");
  CHECK(report["result"]["param_count"] == 2 * 8 + 8 + 8 * 3 + 3);

  CHECK(run("margin --config " + w.q(w.config) + " --theta " + w.q(theta)) == 0);
  const auto margin = nlohmann::json::parse(slurp(w.out() / "margin.json"));
  CHECK(margin["result"]["margin"].get<double>() >= 0);

  CHECK(run("margin --config " + w.q(w.config) + " --theta " + w.q(w.dir / "missing.json")) == 2);
}

TEST_CASE("compare writes one row per scheme") {
  Workspace w("compare");
  CHECK(run("compare --config " + w.q(w.config)) == 0);
  CHECK(line_count(w.out() / "comparison.csv") == 3);
  const std::string first = slurp(w.out() / "comparison.json");
  CHECK(run("compare --config " + w.q(w.config)) == 0);
  CHECK(slurp(w.out() / "comparison.json") == first);
  CHECK(run("compare --config " + w.q(w.config) + " --reparam-check") == 0);
  CHECK(fs::exists(w.out() / "reparam.json"));
}

TEST_CASE("failures map to exit codes") {
  auto diverging = Workspace::default_config();
  diverging["training"]["optimizer"] = {{"kind", "sgd"}, {"learning_rate", 1e6}};
  Workspace w("diverge", diverging);
  CHECK(run("train --config " + w.q(w.config)) == 4);

  auto unknown = Workspace::default_config();
  unknown["analysis"]["kk"] = 3;
  Workspace u("unknown", unknown);
  CHECK(run("train --config " + u.q(u.config)) == 2);

  auto missing_data = Workspace::default_config();
  missing_data["dataset"] = {{"source", "csv"}, {"path", "nope.csv"}};
  Workspace m("missing_data", missing_data);
  CHECK(run("train --config " + m.q(m.config)) == 3);
}
