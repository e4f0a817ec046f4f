#include "adaptive_median/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "adaptive_median/errors.hpp"
#include "adaptive_median/harness/adversary.hpp"
#include "adaptive_median/harness/baseline.hpp"
#include "adaptive_median/harness/stats.hpp"

namespace adaptive_median::harness {

namespace {

using nlohmann::json;

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + ": bad JSON: " + e.what());
  }
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Thread-safe cache of exact query distributions keyed by truth_key.
class TruthCache {
 public:
  TruthCache(const GroundTruthOracle& oracle, const FiniteRange& grid)
      : oracle_(oracle), grid_(grid) {}

  DiscreteDistribution get(const QueryDescriptor& query) {
    const std::string key = query.truth_key();
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(key, oracle_.exact_distribution(query, grid_)).first;
    return it->second;
  }

 private:
  const GroundTruthOracle& oracle_;
  const FiniteRange& grid_;
  std::mutex mutex_;
  std::map<std::string, DiscreteDistribution> cache_;
};

std::uint64_t trial_mechanism_seed(std::uint64_t seed, std::size_t trial) {
  return Rng::derive(seed, 2 * trial + 1).next_u64();
}

std::string dataset_descriptor_json(const ExperimentSpec& spec, std::size_t trial,
                                    std::size_t n) {
  json d;
  d["distribution"] = json::parse(spec.data.to_json());
  d["data_seed"] = spec.seed;
  d["data_stream"] = 2 * trial;
  d["n"] = n;
  d["grid"] = {{"lo", spec.grid.lo}, {"hi", spec.grid.hi}, {"step", spec.grid.step}};
  return d.dump();
}

SessionConfig session_config(const ExperimentSpec& spec, const FiniteRange& grid,
                             std::uint64_t mech_seed) {
  SessionConfig config;
  config.block_size = spec.block_size;
  config.max_queries = spec.max_queries;
  config.max_range_size = grid.size();
  config.beta = spec.beta;
  config.variant = spec.variant;
  config.aggressive = spec.aggressive;
  config.seed = mech_seed;
  return config;
}

std::unique_ptr<AnswerMechanism> make_mechanism(const ExperimentSpec& spec,
                                                std::vector<Sample> samples,
                                                const FiniteRange& grid, std::size_t trial,
                                                std::size_t n) {
  const std::uint64_t mech_seed = trial_mechanism_seed(spec.seed, trial);
  if (spec.mechanism == "engine") {
    Session session = Session::open(std::move(samples), session_config(spec, grid, mech_seed),
                                    dataset_descriptor_json(spec, trial, n));
    return std::make_unique<EngineMechanism>(std::move(session));
  }
  if (spec.mechanism == "naive_empirical")
    return std::make_unique<NaiveEmpiricalMechanism>(std::move(samples), spec.block_size);
  if (spec.mechanism == "data_splitting")
    return std::make_unique<DataSplittingMechanism>(std::move(samples), spec.block_size,
                                                    spec.max_queries);
  if (spec.mechanism == "gaussian_noise")
    return std::make_unique<GaussianNoiseMechanism>(std::move(samples), spec.block_size,
                                                    spec.mechanism_sigma,
                                                    Rng(mech_seed));
  throw DataError("experiment: unknown mechanism '" + spec.mechanism + "'");
}

std::size_t resolve_sample_count(const ExperimentSpec& spec) {
  if (spec.mechanism == "engine") {
    SessionConfig config = session_config(spec, spec.grid.make(), 0);
    const std::size_t required = Session::required_samples(config);
    if (spec.n == 0) return required;
    if (spec.n < required)
      throw DataError("experiment: n = " + std::to_string(spec.n) +
                      " is below the calibrated requirement " + std::to_string(required));
    return spec.n;
  }
  if (spec.mechanism == "verify") {
    if (!spec.verify_probe) throw DataError("experiment: verify mechanism needs a verify block");
    const SvCalibration cal =
        sv_calibration(spec.verify_probe->ell, spec.verify_probe->alpha, spec.beta,
                       spec.max_queries, spec.verify_probe->rho);
    const std::size_t required = cal.m * spec.block_size;
    if (spec.n == 0) return required;
    if (spec.n < required)
      throw DataError("experiment: n below the verify calibration requirement " +
                      std::to_string(required));
    return spec.n;
  }
  if (spec.n == 0) throw DataError("experiment: baseline mechanisms need an explicit n");
  if (spec.n < spec.block_size * std::max<std::size_t>(1, spec.mechanism == "data_splitting"
                                                              ? spec.max_queries
                                                              : 1))
    throw DataError("experiment: n too small for the mechanism");
  return spec.n;
}

void run_answer_trial(const ExperimentSpec& spec, std::size_t n, const FiniteRange& grid,
                      TruthCache& truth, TrialRecord& record, std::size_t trial) {
  Rng data_rng = Rng::derive(spec.seed, 2 * trial);
  std::vector<Sample> samples = generate_samples(spec.data, n, data_rng);
  auto mechanism = make_mechanism(spec, std::move(samples), grid, trial, n);
  auto adversary =
      make_adversary(spec.adversary_json, spec.max_queries, spec.data.features);

  const std::size_t m_blocks = n / spec.block_size;
  std::vector<std::optional<double>> answers;
  answers.reserve(spec.max_queries);

  for (std::size_t j = 0; j < spec.max_queries; ++j) {
    const QueryDescriptor desc = adversary->next(j, answers);
    const EstimatorQuery query = make_query(desc, spec.data, spec.block_size, grid);
    const std::optional<double> ans = mechanism->answer(query);
    answers.push_back(ans);
    if (!ans) {
      record.bottom = true;
      break;
    }
    ++record.answered;

    const DiscreteDistribution dist = truth.get(desc);
    if (!in_quantile_interval(dist, *ans, 0.25, 0.75)) record.any_violation = true;
    const double deviation = std::abs(*ans - dist.mean());
    record.max_abs_deviation = std::max(record.max_abs_deviation, deviation);

    if (j + 1 == spec.max_queries) {
      const double se = dist.sd() / std::sqrt(static_cast<double>(m_blocks));
      record.final_bias_3se = deviation >= 3.0 * se;
    }
  }
}

void run_verify_trial(const ExperimentSpec& spec, std::size_t n, const FiniteRange& grid,
                      TruthCache& truth, TrialRecord& record, std::size_t trial) {
  const VerifyProbeSpec& probe = *spec.verify_probe;
  Rng data_rng = Rng::derive(spec.seed, 2 * trial);
  std::vector<Sample> samples = generate_samples(spec.data, n, data_rng);

  VerifyConfig config;
  config.rho = probe.rho;
  config.alpha = probe.alpha;
  config.ell = probe.ell;
  config.max_queries = spec.max_queries;
  config.beta = spec.beta;
  config.block_size = spec.block_size;
  config.seed = trial_mechanism_seed(spec.seed, trial);
  VerifySession session(std::move(samples), config);

  const QueryDescriptor desc = QueryDescriptor::block_mean();
  const EstimatorQuery query = make_query(desc, spec.data, spec.block_size, grid);
  const DiscreteDistribution dist = truth.get(desc);

  // Effective comparison point of the mechanism and the "far" margin: five
  // noise scales plus sampling slack, the minimum separation for which the
  // Y/N answer is asserted.
  const SvCalibration& cal = session.calibration();
  const std::size_t m_actual = n / spec.block_size;
  const double u_eff = probe.rho - probe.alpha / 2.0;
  const double noise = 6.0 / (cal.epsilon_epoch * static_cast<double>(m_actual));
  const double margin = 5.0 * noise + 5.0 / std::sqrt(static_cast<double>(m_actual));

  for (std::size_t j = 0; j < spec.max_queries; ++j) {
    const double guess = probe.guesses[j % probe.guesses.size()];
    const double tail_low = dist.cdf_leq(guess);
    const double tail_high = 1.0 - dist.cdf_lt(guess);
    const double min_tail = std::min(tail_low, tail_high);

    const VerifyAnswer a = session.verify(query, guess);
    ++record.answered;
    if (a == VerifyAnswer::bottom) {
      record.bottom = true;
      break;
    }
    if (min_tail >= u_eff + margin && a != VerifyAnswer::yes) record.all_far_correct = false;
    if (min_tail <= u_eff - margin && a != VerifyAnswer::no) record.all_far_correct = false;
  }
}

double resolve_threshold(const AssertionSpec& a, const ExperimentSpec& spec) {
  if (!a.beta_plus_3se) return a.value;
  return spec.beta +
         3.0 * std::sqrt(spec.beta * (1.0 - spec.beta) / static_cast<double>(spec.trials));
}

}  // namespace

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
  workers = std::min(resolve_workers(workers), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  const json j = parse_or_throw(text, "experiment spec");
  ExperimentSpec spec;
  try {
    spec.schema_version = j.at("schema_version").get<std::size_t>();
    if (spec.schema_version != 1)
      throw DataError("experiment spec: unsupported schema_version");
    spec.name = j.at("name").get<std::string>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.trials = j.at("trials").get<std::size_t>();
    if (spec.trials == 0) throw DataError("experiment spec: trials must be >= 1");
    spec.workers = j.value("workers", 0);

    spec.data = DistributionDescriptor::from_json(j.at("data").dump());
    spec.n = j.value("n", 0);

    const json& s = j.at("session");
    spec.block_size = s.at("t").get<std::size_t>();
    spec.max_queries = s.at("k").get<std::size_t>();  // 0 = empty adversary (baselines only)
    spec.beta = s.at("beta").get<double>();
    if (!(spec.beta > 0) || !(spec.beta < 1))
      throw DataError("experiment spec: beta must be in (0,1)");
    const json& g = s.at("grid");
    spec.grid = {g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("step").get<double>()};
    const std::string variant = s.value("variant", "iqr_median");
    if (variant == "iqr_median") {
      spec.variant = SessionVariant::iqr_median;
    } else if (variant == "interior_point") {
      spec.variant = SessionVariant::interior_point;
    } else {
      throw DataError("experiment spec: unknown variant '" + variant + "'");
    }
    const std::string profile = s.value("profile", "paper");
    if (profile == "aggressive") {
      spec.aggressive = AggressiveBudget{s.at("epsilon_star").get<double>(),
                                         s.at("delta_star").get<double>()};
    } else if (profile != "paper") {
      throw DataError("experiment spec: unknown profile '" + profile + "'");
    }

    const json& mech = j.at("mechanism");
    spec.mechanism = mech.at("type").get<std::string>();
    spec.mechanism_sigma = mech.value("sigma", 0.0);

    if (spec.mechanism == "verify") {
      const json& v = j.at("verify");
      VerifyProbeSpec probe;
      probe.rho = v.at("rho").get<double>();
      probe.alpha = v.at("alpha").get<double>();
      probe.ell = v.at("ell").get<std::size_t>();
      probe.guesses = v.at("guesses").get<std::vector<double>>();
      if (probe.guesses.empty()) throw DataError("experiment spec: verify needs guesses");
      spec.verify_probe = std::move(probe);
    } else {
      spec.adversary_json = j.at("adversary").dump();
    }

    for (const json& a : j.value("assertions", json::array())) {
      AssertionSpec as;
      as.name = a.at("name").get<std::string>();
      as.metric = a.at("metric").get<std::string>();
      as.op = a.at("op").get<std::string>();
      if (as.op != "le" && as.op != "ge")
        throw DataError("experiment spec: assertion op must be le or ge");
      if (a.at("value").is_string()) {
        if (a.at("value").get<std::string>() != "beta_plus_3se")
          throw DataError("experiment spec: unknown assertion value formula");
        as.beta_plus_3se = true;
      } else {
        as.value = a.at("value").get<double>();
      }
      spec.assertions.push_back(std::move(as));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("experiment spec: schema violation: ") + e.what());
  }
  return spec;
}

std::string ExperimentSpec::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["name"] = name;
  j["seed"] = seed;
  j["trials"] = trials;
  if (workers) j["workers"] = workers;
  j["data"] = json::parse(data.to_json());
  if (n) j["n"] = n;
  j["session"] = {{"t", block_size},
                  {"k", max_queries},
                  {"beta", beta},
                  {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"step", grid.step}}},
                  {"variant", variant == SessionVariant::iqr_median ? "iqr_median"
                                                                    : "interior_point"},
                  {"profile", aggressive ? "aggressive" : "paper"}};
  if (aggressive) {
    j["session"]["epsilon_star"] = aggressive->epsilon_star;
    j["session"]["delta_star"] = aggressive->delta_star;
  }
  j["mechanism"] = {{"type", mechanism}};
  if (mechanism_sigma > 0) j["mechanism"]["sigma"] = mechanism_sigma;
  if (verify_probe) {
    j["verify"] = {{"rho", verify_probe->rho},
                   {"alpha", verify_probe->alpha},
                   {"ell", verify_probe->ell},
                   {"guesses", verify_probe->guesses}};
  } else if (!adversary_json.empty()) {
    j["adversary"] = json::parse(adversary_json);
  }
  j["assertions"] = json::array();
  for (const AssertionSpec& a : assertions) {
    json aj = {{"name", a.name}, {"metric", a.metric}, {"op", a.op}};
    if (a.beta_plus_3se) {
      aj["value"] = "beta_plus_3se";
    } else {
      aj["value"] = a.value;
    }
    j["assertions"].push_back(std::move(aj));
  }
  return j.dump(2);
}

std::string ExperimentReport::to_json(const std::string& spec_echo) const {
  json j;
  j["schema_version"] = 1;
  j["name"] = name;
  j["spec"] = json::parse(spec_echo);
  j["mechanism"] = mechanism;
  j["profile"] = profile;
  j["trials"] = trials;
  j["seed"] = seed;
  j["summary"] = {{"violation_trials", violation_trials},
                  {"iqr_violation_rate", violation_rate},
                  {"violation_cp99", {violation_cp99.first, violation_cp99.second}},
                  {"final_bias_trials", final_bias_trials},
                  {"final_bias_ge_3se_rate", final_bias_rate},
                  {"verify_far_correct_trials", far_correct_trials},
                  {"verify_far_correct_rate", far_correct_rate},
                  {"bottom_trials", bottom_trials},
                  {"guarantee_void", guarantee_void}};
  j["assertions"] = json::array();
  for (const AssertionResult& a : assertions)
    j["assertions"].push_back({{"name", a.name},
                               {"metric", a.metric},
                               {"op", a.op},
                               {"threshold", a.threshold},
                               {"observed", a.observed},
                               {"pass", a.pass}});
  j["pass"] = all_assertions_pass();
  return j.dump(2);
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  out << "trial,answered,any_violation,final_bias_ge_3se,all_far_correct,max_abs_deviation,"
         "bottom\n";
  for (const TrialRecord& r : records) {
    out << r.index << ',' << r.answered << ',' << (r.any_violation ? 1 : 0) << ','
        << (r.final_bias_3se ? 1 : 0) << ',' << (r.all_far_correct ? 1 : 0) << ','
        << r.max_abs_deviation << ',' << (r.bottom ? 1 : 0) << '\n';
  }
  return out.str();
}

bool ExperimentReport::all_assertions_pass() const {
  for (const AssertionResult& a : assertions)
    if (!a.pass) return false;
  return true;
}

double ExperimentReport::metric(const std::string& name) const {
  if (name == "iqr_violation_rate") return violation_rate;
  if (name == "final_bias_ge_3se_rate") return final_bias_rate;
  if (name == "verify_far_correct_rate") return far_correct_rate;
  if (name == "bottom_rate") return static_cast<double>(bottom_trials) / trials;
  throw DataError("experiment: unknown metric '" + name + "'");
}

ExperimentReport run_experiment(const ExperimentSpec& spec, std::size_t workers_override) {
  const std::size_t n = resolve_sample_count(spec);
  const FiniteRange grid = spec.grid.make();
  const GroundTruthOracle oracle(spec.data, spec.block_size);
  TruthCache truth(oracle, grid);

  std::vector<TrialRecord> records(spec.trials);
  const std::size_t workers = workers_override > 0 ? workers_override : spec.workers;

  parallel_for(spec.trials, workers, [&](std::size_t trial) {
    TrialRecord& record = records[trial];
    record.index = trial;
    if (spec.mechanism == "verify") {
      run_verify_trial(spec, n, grid, truth, record, trial);
    } else {
      run_answer_trial(spec, n, grid, truth, record, trial);
    }
  });

  ExperimentReport report;
  report.name = spec.name;
  report.mechanism = spec.mechanism;
  report.profile = spec.mechanism == "engine" ? (spec.aggressive ? "aggressive" : "paper")
                                              : "n/a";
  report.trials = spec.trials;
  report.seed = spec.seed;
  report.records = std::move(records);

  for (const TrialRecord& r : report.records) {
    report.violation_trials += r.any_violation;
    report.final_bias_trials += r.final_bias_3se;
    report.far_correct_trials += r.all_far_correct;
    report.bottom_trials += r.bottom;
  }
  const double trials = static_cast<double>(spec.trials);
  report.violation_rate = static_cast<double>(report.violation_trials) / trials;
  report.final_bias_rate = static_cast<double>(report.final_bias_trials) / trials;
  report.far_correct_rate = static_cast<double>(report.far_correct_trials) / trials;
  report.violation_cp99 = clopper_pearson(report.violation_trials, spec.trials, 0.99);
  if (spec.mechanism == "engine" && spec.aggressive) {
    report.guarantee_void =
        !(spec.aggressive->epsilon_star <= 0.05 &&
          spec.aggressive->delta_star <= spec.beta / 256.0 &&
          static_cast<double>(n / spec.block_size) >=
              2560.0 * std::log(2.0 * static_cast<double>(spec.max_queries) / spec.beta));
  }

  for (const AssertionSpec& a : spec.assertions) {
    AssertionResult res;
    res.name = a.name;
    res.metric = a.metric;
    res.op = a.op;
    res.threshold = resolve_threshold(a, spec);
    res.observed = report.metric(a.metric);
    res.pass = a.op == "le" ? res.observed <= res.threshold : res.observed >= res.threshold;
    report.assertions.push_back(std::move(res));
  }
  return report;
}

std::optional<Transcript> run_trial_transcript(const ExperimentSpec& spec,
                                               std::size_t trial_index) {
  if (spec.mechanism != "engine") return std::nullopt;
  const std::size_t n = resolve_sample_count(spec);
  const FiniteRange grid = spec.grid.make();

  Rng data_rng = Rng::derive(spec.seed, 2 * trial_index);
  std::vector<Sample> samples = generate_samples(spec.data, n, data_rng);
  Session session = Session::open(
      std::move(samples), session_config(spec, grid, trial_mechanism_seed(spec.seed, trial_index)),
      dataset_descriptor_json(spec, trial_index, n));

  auto adversary = make_adversary(spec.adversary_json, spec.max_queries, spec.data.features);
  std::vector<std::optional<double>> answers;
  for (std::size_t j = 0; j < spec.max_queries; ++j) {
    const QueryDescriptor desc = adversary->next(j, answers);
    const EstimatorQuery query = make_query(desc, spec.data, spec.block_size, grid);
    const std::optional<double> ans = session.answer(query);
    answers.push_back(ans);
    if (!ans) break;
  }
  return session.transcript();
}

std::vector<ReplayDiff> replay_transcript(const Transcript& transcript,
                                          std::optional<std::uint64_t> seed_override,
                                          std::optional<std::vector<Sample>> samples_override) {
  const json d = parse_or_throw(transcript.header.dataset_descriptor, "transcript dataset");
  DistributionDescriptor dist;
  std::size_t n = 0;
  GridSpec grid_spec;
  std::uint64_t data_seed = 0;
  std::uint64_t data_stream = 0;
  try {
    dist = DistributionDescriptor::from_json(d.at("distribution").dump());
    n = d.at("n").get<std::size_t>();
    data_seed = d.at("data_seed").get<std::uint64_t>();
    data_stream = d.at("data_stream").get<std::uint64_t>();
    grid_spec = {d.at("grid").at("lo").get<double>(), d.at("grid").at("hi").get<double>(),
                 d.at("grid").at("step").get<double>()};
  } catch (const json::exception& e) {
    throw DataError(std::string("transcript dataset: schema violation: ") + e.what());
  }

  std::vector<Sample> samples;
  if (samples_override) {
    samples = std::move(*samples_override);
  } else {
    Rng data_rng = Rng::derive(data_seed, data_stream);
    samples = generate_samples(dist, n, data_rng);
  }

  SessionConfig config = transcript.header.config;
  if (seed_override) config.seed = *seed_override;
  Session session = Session::open(std::move(samples), config, transcript.header.dataset_descriptor);

  const FiniteRange grid = grid_spec.make();
  std::vector<ReplayDiff> diffs;
  for (const TranscriptEntry& entry : transcript.entries) {
    const QueryDescriptor desc = QueryDescriptor::from_json(entry.query_descriptor);
    const EstimatorQuery query = make_query(desc, dist, config.block_size, grid);
    const std::optional<double> ans = session.answer(query);
    const double recomputed = ans.value_or(std::numeric_limits<double>::quiet_NaN());
    const bool stamp_mismatch =
        !session.transcript().entries.empty() &&
        session.transcript().entries.back().seed_stamp != entry.seed_stamp;
    if (!ans || recomputed != entry.answer || stamp_mismatch)
      diffs.push_back({entry.index, entry.answer, recomputed, stamp_mismatch});
  }
  return diffs;
}

}  // namespace adaptive_median::harness
