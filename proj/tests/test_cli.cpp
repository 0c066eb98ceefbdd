#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

std::string cli() { return std::string(GUOT_CLI_PATH); }

std::string data_path(const char* name) { return std::string(GUOT_DATA_DIR) + "/" + name; }

fs::path scratch_file(const char* name) {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "guot_cli_tests";
    fs::create_directories(p);
    return p;
  }();
  return dir / name;
}

int run(const std::string& command) {
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("solve subcommand writes a report and exits cleanly", "[cli]") {
  const fs::path out = scratch_file("solve_out.json");
  const int code = run(cli() + " solve --input " + data_path("reference_1d.json") + " --output " +
                       out.string() + " 2> /dev/null");
  REQUIRE(code == 0);
  const std::string report = slurp(out);
  REQUIRE(contains(report, "\"command\": \"solve\""));
  REQUIRE(contains(report, "\"value\": 0.395206446101"));
  REQUIRE(contains(report, "\"M_star\": 0.767998209416"));
  REQUIRE_FALSE(contains(report, "\"timings\""));
}

TEST_CASE("reports are byte-identical across identical invocations", "[cli]") {
  const fs::path out1 = scratch_file("repeat1.json");
  const fs::path out2 = scratch_file("repeat2.json");
  const std::string base = cli() + " certify --input " + data_path("reference_1d.json") +
                           " --samples 2000 --output ";
  REQUIRE(run(base + out1.string() + " 2> /dev/null") == 0);
  REQUIRE(run(base + out2.string() + " 2> /dev/null") == 0);
  REQUIRE(slurp(out1) == slurp(out2));
}

TEST_CASE("stdout carries the same report as --output", "[cli]") {
  const fs::path redirected = scratch_file("stdout.json");
  const fs::path written = scratch_file("written.json");
  REQUIRE(run(cli() + " solve --input " + data_path("reference_1d.json") + " > " +
              redirected.string() + " 2> /dev/null") == 0);
  REQUIRE(run(cli() + " solve --input " + data_path("reference_1d.json") + " --output " +
              written.string() + " 2> /dev/null") == 0);
  REQUIRE(slurp(redirected) == slurp(written));
}

TEST_CASE("certify honors sample and seed overrides", "[cli]") {
  const fs::path out = scratch_file("certify_out.json");
  const int code = run(cli() + " certify --input " + data_path("reference_1d.json") +
                       " --samples 500 --seed 7 --output " + out.string() + " 2> /dev/null");
  REQUIRE(code == 0);
  const std::string report = slurp(out);
  REQUIRE(contains(report, "\"sample_count\": 500"));
  REQUIRE(contains(report, "\"seed\": 7"));
  REQUIRE(contains(report, "\"within_bounds\": true"));
}

TEST_CASE("grid-bench honors size overrides", "[cli]") {
  const fs::path out = scratch_file("grid_out.json");
  const int code = run(cli() + " grid-bench --input " + data_path("reference_1d.json") +
                       " --sizes 11,21 --output " + out.string() + " 2> /dev/null");
  REQUIRE(code == 0);
  const std::string report = slurp(out);
  REQUIRE(contains(report, "\"n\": 11"));
  REQUIRE(contains(report, "\"n\": 21"));
  REQUIRE_FALSE(contains(report, "\"n\": 31"));
}

TEST_CASE("limit-sweep honors lambda overrides and rejects bad schedules", "[cli]") {
  const fs::path out = scratch_file("sweep_out.json");
  const int code = run(cli() + " limit-sweep --input " + data_path("reference_1d.json") +
                       " --lambdas 1,5 --output " + out.string() + " 2> /dev/null");
  REQUIRE(code == 0);
  const std::string report = slurp(out);
  REQUIRE(contains(report, "\"lambda\": 1"));
  REQUIRE(contains(report, "\"lambda\": 5"));

  REQUIRE(run(cli() + " limit-sweep --input " + data_path("reference_1d.json") +
              " --lambdas 5,1 > /dev/null 2> /dev/null") == 2);
}

TEST_CASE("--timings adds a timing section when requested", "[cli]") {
  const fs::path out = scratch_file("timed_out.json");
  const int code = run(cli() + " solve --input " + data_path("reference_1d.json") +
                       " --timings --output " + out.string() + " 2> /dev/null");
  REQUIRE(code == 0);
  const std::string report = slurp(out);
  REQUIRE(contains(report, "\"timings\""));
  REQUIRE(contains(report, "\"parse_ms\""));
  REQUIRE(contains(report, "\"run_ms\""));
}

TEST_CASE("validation failures exit with code 2", "[cli]") {
  REQUIRE(run(cli() + " solve --input " + data_path("missing.json") +
              " > /dev/null 2> /dev/null") == 2);
  REQUIRE(run(cli() + " solve --input " + data_path("indefinite_cov.json") +
              " > /dev/null 2> /dev/null") == 2);
  REQUIRE(run(cli() + " solve > /dev/null 2> /dev/null") == 2);
  REQUIRE(run(cli() + " > /dev/null 2> /dev/null") == 2);
  REQUIRE(run(cli() + " solve --input " + data_path("reference_1d.json") +
              " --no-such-flag > /dev/null 2> /dev/null") == 2);
  REQUIRE(run(cli() + " certify --input " + data_path("reference_1d.json") +
              " --samples -5 > /dev/null 2> /dev/null") == 2);
}

TEST_CASE("computation failures exit with code 3", "[cli]") {
  // Grid benchmarking is defined for 1-D problems only.
  REQUIRE(run(cli() + " grid-bench --input " + data_path("noncommuting_2d.json") +
              " > /dev/null 2> /dev/null") == 3);
}

TEST_CASE("certificate violations exit with code 4 but still emit the report", "[cli]") {
  const fs::path out = scratch_file("violations_out.json");
  const fs::path err = scratch_file("violations_err.txt");
  const int code = run(cli() + " certify --input " + data_path("extreme_scale.json") +
                       " --output " + out.string() + " 2> " + err.string());
  REQUIRE(code == 4);
  const std::string report = slurp(out);
  REQUIRE(contains(report, "\"within_bounds\": false"));
  REQUIRE(contains(report, "\"certificate\""));
  const std::string diagnostics = slurp(err);
  REQUIRE(contains(diagnostics, "exceeds"));
}

TEST_CASE("help exits zero and shows the subcommands", "[cli]") {
  const fs::path out = scratch_file("help_out.txt");
  REQUIRE(run(cli() + " --help > " + out.string() + " 2> /dev/null") == 0);
  const std::string help = slurp(out);
  REQUIRE(contains(help, "solve"));
  REQUIRE(contains(help, "certify"));
  REQUIRE(contains(help, "grid-bench"));
  REQUIRE(contains(help, "limit-sweep"));
}
