#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "trajflow/io.hpp"

// End-to-end checks through the installed binary: exit codes, config-file
// semantics, artifact determinism.

namespace fs = std::filesystem;
using trajflow::io::file_digest;
using trajflow::io::read_json_file;
using trajflow::io::read_text_file;
using trajflow::io::write_text_file;

namespace {

const std::string kCli = TRAJFLOW_CLI_PATH;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "trajflow_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = kCli + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("--help lists every subcommand and exits 0") {
  const fs::path dir = fresh_dir("help");
  const fs::path log = dir / "help.txt";
  CHECK(run("--help", log) == 0);
  const std::string text = read_text_file(log);
  for (const char* sub :
       {"fit", "gen-demos", "train", "bench-repr", "bench-smooth", "run-sim"})
    CHECK(text.find(sub) != std::string::npos);
}

TEST_CASE("missing input file exits 2 and names the path") {
  const fs::path dir = fresh_dir("missing");
  const fs::path log = dir / "log.txt";
  CHECK(run("fit --input " + (dir / "nope.csv").string() + " --out " + dir.string(), log) ==
        2);
  CHECK(read_text_file(log).find("nope.csv") != std::string::npos);
}

TEST_CASE("fit reports a zero residual for a constant column") {
  const fs::path dir = fresh_dir("fit_const");
  const fs::path csv = dir / "const.csv";
  std::string body = "t,dim0\n";
  for (int t = 0; t < 30; ++t) body += std::to_string(t) + ",0.75\n";
  write_text_file(csv, body);

  const fs::path log = dir / "log.txt";
  REQUIRE(run("fit --input " + csv.string() + " --out " + (dir / "out").string(), log) == 0);
  const auto report = read_json_file(dir / "out" / "fit_report.json");
  CHECK(report["residual"].get<double>() < 1e-18);
  CHECK(fs::exists(dir / "out" / "curve.json"));
  CHECK(fs::exists(dir / "out" / "config.json"));
  CHECK(read_text_file(log).find("residual") != std::string::npos);
}

TEST_CASE("config file drives a run; unknown keys are all reported") {
  const fs::path dir = fresh_dir("config");

  SUBCASE("valid config applies, flags still override") {
    const fs::path cfg = dir / "demos.json";
    write_text_file(cfg, R"({"episodes": 2, "horizon": 50, "mode": "static"})");
    const fs::path log = dir / "log.txt";
    REQUIRE(run("gen-demos --config " + cfg.string() + " --out " + (dir / "d").string() +
                    " --episodes 3",
                log) == 0);
    const auto manifest = read_json_file(dir / "d" / "manifest.json");
    CHECK(manifest["episodes"].size() == 3);  // flag wins over config
    const auto snapshot = read_json_file(dir / "d" / "config.json");
    CHECK(snapshot["horizon"].get<int>() == 50);  // config applied
    CHECK(snapshot["episodes"].get<int>() == 3);
  }
  SUBCASE("unknown keys and type errors are enumerated together") {
    const fs::path cfg = dir / "bad.json";
    write_text_file(cfg, R"({"episodes": "many", "bogus": 1, "nonsense": 2})");
    const fs::path log = dir / "log.txt";
    CHECK(run("gen-demos --config " + cfg.string() + " --out " + (dir / "d2").string(),
              log) == 2);
    const std::string text = read_text_file(log);
    CHECK(text.find("bogus") != std::string::npos);
    CHECK(text.find("nonsense") != std::string::npos);
    CHECK(text.find("episodes") != std::string::npos);
  }
}

TEST_CASE("mini pipeline produces deterministic artifacts") {
  const fs::path dir = fresh_dir("mini");
  const fs::path log = dir / "log.txt";

  REQUIRE(run("gen-demos --out " + (dir / "demos").string() +
                  " --episodes 2 --horizon 60 --mode mixed --seed 3",
              log) == 0);
  REQUIRE(run("bench-repr --demos " + (dir / "demos").string() + " --out " +
                  (dir / "repr").string() + " --chunks 8 --seed 1",
              log) == 0);
  REQUIRE(run("bench-smooth --demos " + (dir / "demos").string() + " --out " +
                  (dir / "smooth").string() + " --trials 5 --seed 1",
              log) == 0);
  CHECK(fs::exists(dir / "repr" / "repr_scores.json"));
  CHECK(fs::exists(dir / "smooth" / "smoothness.json"));
  CHECK(fs::exists(dir / "smooth" / "smoothness.csv"));

  // Same seeds, same bytes.
  REQUIRE(run("bench-repr --demos " + (dir / "demos").string() + " --out " +
                  (dir / "repr2").string() + " --chunks 8 --seed 1",
              log) == 0);
  CHECK(file_digest(dir / "repr" / "repr_scores.json") ==
        file_digest(dir / "repr2" / "repr_scores.json"));
}

TEST_CASE("output root environment variable prefixes relative paths") {
  const fs::path root = fresh_dir("envroot");
  const fs::path csv = root / "line.csv";
  std::string body = "t,dim0\n";
  for (int t = 0; t < 10; ++t) body += std::to_string(t) + "," + std::to_string(t) + "\n";
  write_text_file(csv, body);

  const fs::path log = root / "log.txt";
  const std::string cmd = "TRAJFLOW_OUT_ROOT=" + root.string() + " " + kCli + " fit --input " +
                          csv.string() + " --out rooted >" + log.string() + " 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(root / "rooted" / "curve.json"));
}
