// adaptive-median: run seeded experiments, calibrate sample sizes, audit DP
// ratios, and replay recorded sessions.
//
// Exit codes: 0 success, 1 assertion/audit/replay failure, 2 configuration
// or schema error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adaptive_median/accountant.hpp"
#include "adaptive_median/dp_median.hpp"
#include "adaptive_median/engine.hpp"
#include "adaptive_median/errors.hpp"
#include "adaptive_median/harness/audit.hpp"
#include "adaptive_median/harness/experiment.hpp"
#include "adaptive_median/pmw.hpp"
#include "adaptive_median/verify.hpp"

namespace am = adaptive_median;
namespace harness = adaptive_median::harness;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw am::DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw am::DataError("cannot write file: " + path);
  out << content;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::size_t workers_from_env() {
  const char* env = std::getenv("ADAPTIVE_MEDIAN_WORKERS");
  if (!env) return 0;
  const long v = std::atol(env);
  return v > 0 ? static_cast<std::size_t>(v) : 0;
}

struct CalibrateArgs {
  std::size_t k = 1;
  std::size_t r = 2;
  double beta = 0.05;
  std::size_t t = 1;
  double rho = 0.1;
  double alpha = 0.05;
  std::size_t ell = 1;
  std::size_t universe = 1024;
};

int cmd_calibrate(const CalibrateArgs& a) {
  const am::SessionCalibration engine = am::calibrate_session(a.k, a.r, a.beta);
  std::cout << "engine (iqr-median, paper profile)\n"
            << "  m             = " << engine.m << "\n"
            << "  n0            = " << engine.m * a.t << "  (t = " << a.t << ")\n"
            << "  epsilon_tilde = " << fmt(engine.epsilon_tilde) << "\n"
            << "  epsilon_hat   = " << fmt(engine.composed.epsilon_hat)
            << "  (k-fold composition at delta' = beta/256, cap 0.05)\n";

  const am::InteriorCalibration interior = am::calibrate_interior_session(a.k, a.r, a.beta);
  std::cout << "engine (interior-point)\n"
            << "  m             = " << interior.m << "\n"
            << "  n0            = " << interior.m * a.t << "\n"
            << "  epsilon_tilde = " << fmt(interior.epsilon_tilde) << "\n"
            << "  delta         = " << fmt(interior.delta) << "\n";

  const am::SvCalibration sv = am::sv_calibration(a.ell, a.alpha, a.beta, a.k, a.rho);
  std::cout << "verify (rho = " << fmt(a.rho) << ", alpha = " << fmt(a.alpha)
            << ", ell = " << a.ell << ")\n"
            << "  m             = " << sv.m << "  (m0 = " << sv.m0 << ", m1 = " << sv.m1 << ")\n"
            << "  n0            = " << sv.m * a.t << "\n"
            << "  epsilon       = " << fmt(sv.epsilon) << "\n"
            << "  delta         = " << fmt(sv.delta) << "\n"
            << "  epsilon_epoch = " << fmt(sv.epsilon_epoch) << "\n";

  const double pmw_alpha = 0.125;
  const std::size_t pmw_m = am::pmw_required_m(a.universe, pmw_alpha, a.beta, a.k);
  std::cout << "pmw (|Z| = " << a.universe << ", alpha = " << fmt(pmw_alpha) << ")\n"
            << "  m             = " << pmw_m << "\n"
            << "  n0            = " << pmw_m * a.t << "\n"
            << "  update_cap    = " << am::pmw_update_cap(a.universe, pmw_alpha) << "\n";
  return kExitPass;
}

struct RunArgs {
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string csv_path;
  std::string transcript_path;
  std::optional<std::size_t> trials;
  std::size_t workers = 0;
  std::string profile;
  double epsilon_star = 0.0;
  double delta_star = 0.0;
};

int cmd_run(const RunArgs& args) {
  const std::string text = read_file(args.spec_path);
  harness::ExperimentSpec spec = harness::ExperimentSpec::from_json(text);
  if (args.seed) spec.seed = *args.seed;
  if (args.trials) spec.trials = *args.trials;
  if (!args.profile.empty()) {
    if (args.profile == "paper") {
      spec.aggressive.reset();
    } else if (args.profile == "aggressive") {
      if (!(args.epsilon_star > 0) || !(args.delta_star > 0))
        throw am::ParameterError("--profile aggressive needs --epsilon-star and --delta-star");
      spec.aggressive = am::AggressiveBudget{args.epsilon_star, args.delta_star};
    } else {
      throw am::ParameterError("--profile must be paper or aggressive");
    }
  }

  const std::size_t workers = args.workers > 0 ? args.workers : workers_from_env();
  const harness::ExperimentReport report = harness::run_experiment(spec, workers);

  std::cout << "experiment " << report.name << ": mechanism=" << report.mechanism
            << " profile=" << report.profile << " trials=" << report.trials << "\n"
            << "  iqr_violation_rate      = " << fmt(report.violation_rate) << "  (cp99 ["
            << fmt(report.violation_cp99.first) << ", " << fmt(report.violation_cp99.second)
            << "])\n"
            << "  final_bias_ge_3se_rate  = " << fmt(report.final_bias_rate) << "\n";
  if (spec.mechanism == "verify")
    std::cout << "  verify_far_correct_rate = " << fmt(report.far_correct_rate) << "\n";

  bool all_pass = true;
  for (const harness::AssertionResult& a : report.assertions) {
    std::cout << "  [" << (a.pass ? "PASS" : "FAIL") << "] " << a.name << ": " << a.metric << " "
              << a.op << " " << fmt(a.threshold) << " (observed " << fmt(a.observed) << ")\n";
    if (!a.pass) all_pass = false;
  }

  if (!args.out_path.empty()) write_file(args.out_path, report.to_json(spec.to_json()));
  if (!args.csv_path.empty()) write_file(args.csv_path, report.to_csv());
  if (!args.transcript_path.empty()) {
    const std::optional<am::Transcript> t = harness::run_trial_transcript(spec, 0);
    if (!t)
      throw am::ParameterError("--transcript-out is only available for engine experiments");
    write_file(args.transcript_path, t->to_jsonl());
  }

  if (!all_pass) {
    for (const harness::AssertionResult& a : report.assertions)
      if (!a.pass) std::cerr << "assertion failed: " << a.name << "\n";
    return kExitFail;
  }
  return kExitPass;
}

struct AuditArgs {
  std::size_t m = 4;
  std::size_t range_size = 8;
  double epsilon = 0.5;
  std::string mode = "exact";
  double tol = 1e-9;
  std::uint64_t seed = 1;
  std::size_t draws = 200000;
};

int cmd_audit(const AuditArgs& args) {
  const am::FiniteRange grid =
      am::FiniteRange::grid(0.0, static_cast<double>(args.range_size - 1), 1.0);
  if (args.mode == "exact" || args.mode == "broken") {
    const harness::AuditResult res =
        args.mode == "exact"
            ? harness::audit_em_exact(args.m, grid, args.epsilon, args.tol)
            : harness::audit_broken_argmin(args.m, grid, args.epsilon);
    std::cout << "audit " << args.mode << ": m=" << args.m << " |T|=" << args.range_size
              << " epsilon=" << fmt(args.epsilon) << "\n"
              << "  instances = " << res.instances << ", neighbor pairs = " << res.pairs << "\n"
              << "  max ratio = " << fmt(res.max_ratio) << " vs bound e^eps = " << fmt(res.bound)
              << "\n"
              << "  " << (res.pass ? "PASS" : "FAIL") << "\n";
    return res.pass ? kExitPass : kExitFail;
  }
  if (args.mode == "sampled") {
    // One adversarial neighbor pair: all mass on the ends.
    std::vector<double> a(args.m, grid.front());
    std::vector<double> b = a;
    b.back() = grid.back();
    am::Rng rng(args.seed);
    const harness::SampledAuditResult res = harness::audit_sampled(
        am::EmpiricalDistribution(a), am::EmpiricalDistribution(b), grid, args.epsilon,
        [](const am::EmpiricalDistribution& values, const am::FiniteRange& range, am::Rng& r) {
          return am::em_median(values, range, 0.5, r);
        },
        args.draws, rng);
    std::cout << "audit sampled: draws=" << res.draws << "\n"
              << "  max ratio lower bound = " << fmt(res.max_ratio_lower_bound)
              << " vs bound = " << fmt(res.bound) << "\n"
              << "  " << (res.refuted ? "FAIL (refuted)" : "PASS (not refuted)") << "\n";
    return res.refuted ? kExitFail : kExitPass;
  }
  throw am::ParameterError("--mode must be exact, sampled or broken");
}

struct ReplayArgs {
  std::string transcript_path;
  std::string dataset_path;
  std::optional<std::uint64_t> seed;
};

int cmd_replay(const ReplayArgs& args) {
  const am::Transcript transcript = am::Transcript::from_jsonl(read_file(args.transcript_path));

  std::optional<std::vector<am::Sample>> samples;
  if (!args.dataset_path.empty()) {
    const nlohmann::json j = nlohmann::json::parse(read_file(args.dataset_path));
    samples = j.get<std::vector<am::Sample>>();
  }

  const std::vector<harness::ReplayDiff> diffs =
      harness::replay_transcript(transcript, args.seed, std::move(samples));
  if (diffs.empty()) {
    std::cout << "replay: " << transcript.entries.size() << " entries, empty diff\n";
    return kExitPass;
  }
  std::cout << "replay: " << diffs.size() << " mismatching entries\n";
  for (const harness::ReplayDiff& d : diffs)
    std::cout << "  entry " << d.entry << ": recorded " << fmt(d.recorded) << ", recomputed "
              << fmt(d.recomputed) << "\n";
  return kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptively-queried private median toolkit"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  CLI::App* calibrate = app.add_subcommand("calibrate", "Print sample-size calibrations");
  calibrate->add_option("--k", cal.k, "Number of queries")->required();
  calibrate->add_option("--r", cal.r, "Maximum per-query range size")->required();
  calibrate->add_option("--beta", cal.beta, "Failure probability")->required();
  calibrate->add_option("--t", cal.t, "Block size")->required();
  calibrate->add_option("--rho", cal.rho, "Verify quantile level");
  calibrate->add_option("--alpha", cal.alpha, "Verify slack");
  calibrate->add_option("--ell", cal.ell, "Verify failure budget");
  calibrate->add_option("--universe", cal.universe, "PMW universe size |Z|");

  RunArgs run;
  CLI::App* runcmd = app.add_subcommand("run", "Run an experiment spec");
  runcmd->add_option("--spec", run.spec_path, "Experiment spec JSON")->required();
  std::uint64_t run_seed = 0;
  CLI::Option* run_seed_opt = runcmd->add_option("--seed", run_seed, "Seed override");
  runcmd->add_option("--out", run.out_path, "Report JSON output path");
  runcmd->add_option("--csv", run.csv_path, "Per-trial CSV output path");
  runcmd->add_option("--transcript-out", run.transcript_path,
                     "Write the first trial's transcript (engine only)");
  std::size_t run_trials = 0;
  CLI::Option* run_trials_opt = runcmd->add_option("--trials", run_trials, "Trials override");
  runcmd->add_option("--workers", run.workers,
                     "Worker threads (default: ADAPTIVE_MEDIAN_WORKERS or hardware)");
  runcmd->add_option("--profile", run.profile, "Profile override: paper or aggressive");
  runcmd->add_option("--epsilon-star", run.epsilon_star, "Aggressive session epsilon");
  runcmd->add_option("--delta-star", run.delta_star, "Aggressive session delta");

  AuditArgs audit;
  CLI::App* auditcmd = app.add_subcommand("audit", "Audit DP likelihood ratios");
  auditcmd->add_option("--m", audit.m, "Dataset size");
  auditcmd->add_option("--range-size", audit.range_size, "Grid size |T|");
  auditcmd->add_option("--epsilon", audit.epsilon, "Privacy parameter");
  auditcmd->add_option("--mode", audit.mode, "exact, sampled or broken");
  auditcmd->add_option("--tol", audit.tol, "Ratio tolerance");
  auditcmd->add_option("--seed", audit.seed, "Sampled-mode seed");
  auditcmd->add_option("--draws", audit.draws, "Sampled-mode draw count");

  ReplayArgs replay;
  CLI::App* replaycmd = app.add_subcommand("replay", "Replay a session transcript");
  replaycmd->add_option("--transcript", replay.transcript_path, "Transcript JSONL")->required();
  replaycmd->add_option("--dataset", replay.dataset_path, "Raw sample JSON array override");
  std::uint64_t replay_seed = 0;
  CLI::Option* replay_seed_opt = replaycmd->add_option("--seed", replay_seed, "Seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*calibrate) return cmd_calibrate(cal);
    if (*runcmd) {
      if (*run_seed_opt) run.seed = run_seed;
      if (*run_trials_opt) run.trials = run_trials;
      return cmd_run(run);
    }
    if (*auditcmd) return cmd_audit(audit);
    if (*replaycmd) {
      if (*replay_seed_opt) replay.seed = replay_seed;
      return cmd_replay(replay);
    }
  } catch (const am::ParameterError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const am::DataError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitConfig;
}
