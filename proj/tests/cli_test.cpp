#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_command(const std::string& args) {
  const std::string cmd = std::string(CLI_BINARY_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult result;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string temp_path(const std::string& name) {
  return std::string("cli_test_") + name;
}

}  // namespace

TEST_CASE("calibrate is deterministic and validates parameters") {
  const std::string args = "calibrate --k 16 --r 64 --beta 0.05 --t 10";
  const CommandResult first = run_command(args);
  CHECK(first.exit_code == 0);
  CHECK(first.output.find("engine (iqr-median, paper profile)") != std::string::npos);
  CHECK(first.output.find("verify") != std::string::npos);
  CHECK(first.output.find("pmw") != std::string::npos);

  const CommandResult second = run_command(args);
  CHECK(second.output == first.output);

  CHECK(run_command("calibrate --k 16 --r 64 --beta 1.5 --t 10").exit_code == 2);
  CHECK(run_command("calibrate --k 16 --r 64 --beta 0.05 --t 10 --alpha 0.3 --rho 0.2")
            .exit_code == 2);
  CHECK(run_command("calibrate").exit_code == 2);  // missing required flags
  CHECK(run_command("frobnicate").exit_code == 2);
}

TEST_CASE("run executes the smoke spec and honors exit codes") {
  const std::string report = temp_path("report.json");
  const std::string csv = temp_path("trials.csv");
  const CommandResult ok = run_command("run --spec " SPEC_DIR "/smoke_engine.json --out " +
                                       report + " --csv " + csv + " --workers 2");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("[PASS]") != std::string::npos);

  std::ifstream in(report);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  CHECK(buffer.str().find("\"schema_version\"") != std::string::npos);
  std::ifstream csv_in(csv);
  REQUIRE(csv_in.good());

  CHECK(run_command("run --spec " SPEC_DIR "/does_not_exist.json").exit_code == 2);
}

TEST_CASE("run honors profile overrides and the workers env fallback") {
  // Forcing the paper profile onto the smoke spec raises the calibrated
  // sample requirement far above its n: a configuration error, not a crash.
  CHECK(run_command("run --spec " SPEC_DIR "/smoke_engine.json --profile paper").exit_code == 2);
  // Aggressive override requires the session budget flags.
  CHECK(run_command("run --spec " SPEC_DIR "/smoke_engine.json --profile aggressive").exit_code ==
        2);
  CHECK(run_command("run --spec " SPEC_DIR "/smoke_engine.json --profile aggressive "
                    "--epsilon-star 0.5 --delta-star 1e-7")
            .exit_code == 0);

  CommandResult env_run;
  {
    const std::string cmd = std::string("ADAPTIVE_MEDIAN_WORKERS=1 ") + CLI_BINARY_PATH +
                            " run --spec " SPEC_DIR "/smoke_engine.json 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) env_run.output += buf.data();
    const int status = pclose(pipe);
    env_run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  CHECK(env_run.exit_code == 0);
}

TEST_CASE("run with an unsatisfiable assertion exits 1 and names it") {
  // Force a failing assertion by overriding the smoke spec's trials via a
  // crafted spec file with an impossible threshold.
  const std::string path = temp_path("failing_spec.json");
  {
    std::ofstream out(path);
    out << R"({
      "schema_version": 1, "name": "fail", "seed": 5, "trials": 2,
      "data": {"type": "rademacher_features", "features": 4},
      "n": 200,
      "session": {"t": 2, "k": 3, "beta": 0.05,
                  "grid": {"lo": -1.0, "hi": 1.0, "step": 0.25},
                  "profile": "aggressive", "epsilon_star": 1.0, "delta_star": 1e-6},
      "mechanism": {"type": "engine"},
      "adversary": {"type": "overfit_boost"},
      "assertions": [
        {"name": "impossible", "metric": "iqr_violation_rate", "op": "ge", "value": 2.0}
      ]
    })";
  }
  const CommandResult res = run_command("run --spec " + path);
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("assertion failed: impossible") != std::string::npos);
}

TEST_CASE("audit exact passes and the broken negative control fails") {
  const CommandResult good = run_command("audit --m 4 --range-size 6 --epsilon 0.5 --mode exact");
  CHECK(good.exit_code == 0);
  CHECK(good.output.find("PASS") != std::string::npos);

  const CommandResult broken =
      run_command("audit --m 3 --range-size 6 --epsilon 0.5 --mode broken");
  CHECK(broken.exit_code == 1);
  CHECK(broken.output.find("FAIL") != std::string::npos);
  CHECK(broken.output.find("inf") != std::string::npos);
}

TEST_CASE("replay round-trips a recorded transcript") {
  const std::string transcript = temp_path("session.jsonl");
  const CommandResult rec =
      run_command("run --spec " SPEC_DIR "/smoke_engine.json --transcript-out " + transcript +
                  " --workers 1");
  REQUIRE(rec.exit_code == 0);

  const CommandResult replay = run_command("replay --transcript " + transcript);
  CHECK(replay.exit_code == 0);
  CHECK(replay.output.find("empty diff") != std::string::npos);

  const CommandResult wrong = run_command("replay --transcript " + transcript + " --seed 42");
  CHECK(wrong.exit_code == 1);
  CHECK(wrong.output.find("mismatch") != std::string::npos);

  // Truncated transcript: schema error.
  const std::string truncated = temp_path("truncated.jsonl");
  {
    std::ifstream in(transcript);
    std::string line;
    std::getline(in, line);  // keep only the header? drop it instead
    std::ofstream out(truncated);
    std::getline(in, line);
    out << line << "\n";  // entry without a header
  }
  CHECK(run_command("replay --transcript " + truncated).exit_code == 2);
}
