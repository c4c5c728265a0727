// End-to-end checks of the CLI binary: schema handling, golden projection
// values through the config path, and byte-identical reports under a fixed
// seed (metadata excluded).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COHERENCE_CLI_PATH) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("coherence_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

json report_without_metadata(const fs::path& p) {
  json j = json::parse(read_file(p));
  j.erase("metadata");
  return j;
}

}  // namespace

TEST_CASE("cli: block toy projection through the config path") {
  const fs::path dir = temp_dir("toy");
  write_file(dir / "cfg.json", R"({
    "version": 1,
    "task": "project",
    "generator": {"kind": "negative_log"},
    "model": {"table": [[0.10], [0.80], [0.40]]},
    "set": {"base": "cube", "blocks": [[0, 1], [2]]}
  })");
  const int code =
      run_cli("run --config " + (dir / "cfg.json").string() + " --out " +
              (dir / "out").string());
  CHECK(code == 0);
  const json rep = json::parse(read_file(dir / "out" / "report.json"));
  const double q = rep["solution"][0][0].get<double>();
  CHECK(q == doctest::Approx(8.0 / 45.0).epsilon(1e-9));
  const std::string csv = read_file(dir / "out" / "solution.csv");
  CHECK(csv.find("0.1777") != std::string::npos);
}

TEST_CASE("cli: malformed config exits 3") {
  const fs::path dir = temp_dir("bad");
  write_file(dir / "broken.json", "{ not json");
  CHECK(run_cli("run --config " + (dir / "broken.json").string()) == 3);

  write_file(dir / "wrong.json", R"({"version": 2, "task": "project"})");
  CHECK(run_cli("run --config " + (dir / "wrong.json").string()) == 3);

  CHECK(run_cli("verify --suite no-such-suite") == 3);
}

TEST_CASE("cli: verify minimax suite and report determinism") {
  const fs::path dir = temp_dir("verify");
  const std::string args = "verify --suite minimax --seed 99 --out ";
  CHECK(run_cli(args + (dir / "a").string()) == 0);
  CHECK(run_cli(args + (dir / "b").string()) == 0);
  const json a = report_without_metadata(dir / "a" / "report.json");
  const json b = report_without_metadata(dir / "b" / "report.json");
  CHECK(a.dump() == b.dump());
  CHECK(a["suites"][0]["passed"].get<bool>());
}

TEST_CASE("cli: two-step task emits the intermediate model") {
  const fs::path dir = temp_dir("twostep");
  write_file(dir / "cfg.json", R"({
    "version": 1,
    "task": "two-step",
    "generator": {"kind": "negative_entropy"},
    "phi": [1, 0],
    "model": {"table": [[0.1, 0.9], [0.8, 0.2]]},
    "set": {"base": "simplex"}
  })");
  CHECK(run_cli("run --config " + (dir / "cfg.json").string() + " --out " +
                (dir / "out").string()) == 0);
  const json rep = json::parse(read_file(dir / "out" / "report.json"));
  CHECK(rep["intermediate"][0][0].get<double>() ==
        doctest::Approx(std::sqrt(0.08)).epsilon(1e-9));
  CHECK(rep["solution"][0][0].get<double>() ==
        doctest::Approx(0.4).epsilon(1e-9));
}
