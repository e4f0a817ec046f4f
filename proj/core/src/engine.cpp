#include "adaptive_median/engine.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "adaptive_median/dp_median.hpp"
#include "adaptive_median/errors.hpp"

namespace adaptive_median {

namespace {

const char* variant_name(SessionVariant v) {
  return v == SessionVariant::iqr_median ? "iqr_median" : "interior_point";
}

SessionVariant variant_from_name(const std::string& name) {
  if (name == "iqr_median") return SessionVariant::iqr_median;
  if (name == "interior_point") return SessionVariant::interior_point;
  throw DataError("Transcript: unknown session variant '" + name + "'");
}

}  // namespace

void SessionConfig::validate() const {
  if (block_size < 1 || max_queries < 1 || max_range_size < 1)
    throw ParameterError("SessionConfig: t, k and r must be >= 1");
  if (!(beta > 0) || !(beta < 1)) throw ParameterError("SessionConfig: beta must be in (0,1)");
  if (aggressive) {
    if (!(aggressive->epsilon_star > 0) || !(aggressive->delta_star > 0) ||
        !(aggressive->delta_star < 1))
      throw ParameterError("SessionConfig: aggressive budget needs epsilon > 0, delta in (0,1)");
  }
}

std::size_t Session::required_samples(const SessionConfig& config) {
  config.validate();
  if (!config.paper_profile()) return config.block_size;  // any full block will do
  const std::size_t m =
      config.variant == SessionVariant::iqr_median
          ? calibrate_session(config.max_queries, config.max_range_size, config.beta).m
          : calibrate_interior_session(config.max_queries, config.max_range_size, config.beta).m;
  return m * config.block_size;
}

Session Session::open(std::vector<Sample> samples, const SessionConfig& config,
                      std::string dataset_descriptor) {
  config.validate();
  const std::size_t n = samples.size();
  const std::size_t n0 = required_samples(config);
  if (n < n0)
    throw InsufficientDataError("Session: need n >= " + std::to_string(n0) + " samples (" +
                                    std::to_string(n) + " given)",
                                n0);

  BlockedDataset data(std::move(samples), config.block_size);
  const double m = static_cast<double>(data.block_count());
  const double k = static_cast<double>(config.max_queries);
  const double r = static_cast<double>(config.max_range_size);

  double epsilon_tilde = 0.0;
  bool premise_ok = false;
  double delta_slack = config.beta / 256.0;
  std::optional<PrivacyCharge> target;

  if (config.paper_profile()) {
    // All floor(n/t) blocks are used; epsilon_tilde shrinks accordingly, which
    // keeps both the per-query accuracy bound and the composed budget valid.
    if (config.variant == SessionVariant::iqr_median) {
      epsilon_tilde = 16.0 * std::log(k * r / config.beta) / m;
    } else {
      epsilon_tilde = 4.0 * std::log(2.0 * k * r / config.beta) / m;
    }
    target = PrivacyCharge{0.05, delta_slack};
    premise_ok = true;
  } else {
    epsilon_tilde =
        max_per_query_epsilon(config.max_queries, config.aggressive->epsilon_star,
                              config.aggressive->delta_star);
    delta_slack = config.aggressive->delta_star;
    target = PrivacyCharge{config.aggressive->epsilon_star, config.aggressive->delta_star};
    // The distributional guarantee needs the whole interaction to be
    // (1/20, beta/256)-DP and m >= 2560 ln(2k/beta); otherwise we still
    // answer but mark the transcript.
    premise_ok = config.aggressive->epsilon_star <= 0.05 &&
                 config.aggressive->delta_star <= config.beta / 256.0 &&
                 m >= 2560.0 * std::log(2.0 * k / config.beta);
  }

  Transcript::Header header;
  header.config = config;
  header.dataset_descriptor = std::move(dataset_descriptor);
  header.block_count = data.block_count();
  header.discarded = data.discarded();
  header.epsilon_tilde = epsilon_tilde;
  header.guarantee_void = !premise_ok;

  return Session(std::move(data), config, epsilon_tilde, PrivacyLedger(delta_slack, target),
                 std::move(header));
}

Session::Session(BlockedDataset data, const SessionConfig& config, double epsilon_tilde,
                 PrivacyLedger ledger, Transcript::Header header)
    : data_(std::move(data)),
      config_(config),
      epsilon_tilde_(epsilon_tilde),
      ledger_(std::move(ledger)) {
  transcript_.header = std::move(header);
}

std::optional<double> Session::answer(const EstimatorQuery& query) {
  const std::lock_guard<std::mutex> turn(*turn_);
  if (refusing_ || answered_ >= config_.max_queries) return std::nullopt;
  if (query.block_size() != config_.block_size)
    throw ParameterError("Session: query block size does not match the session");
  if (query.range().size() > config_.max_range_size)
    throw ParameterError("Session: query range exceeds the declared maximum r");

  // Charge before the mechanism runs; a refused charge freezes the session.
  if (!ledger_.try_charge({epsilon_tilde_, 0.0})) {
    refusing_ = true;
    return std::nullopt;
  }

  std::vector<std::uint64_t> histogram(query.range().size(), 0);
  for (std::size_t i = 0; i < data_.block_count(); ++i)
    ++histogram[query.evaluate_index(data_.block(i))];
  const EmpiricalDistribution values =
      EmpiricalDistribution::from_histogram(query.range(), histogram);

  Rng rng = Rng::derive(config_.seed, answered_);
  const std::uint64_t stamp = rng.state_stamp();
  const double value = config_.variant == SessionVariant::interior_point
                           ? interior_point(values, query.range(), epsilon_tilde_, rng)
                           : em_median(values, query.range(), epsilon_tilde_, rng);

  TranscriptEntry entry;
  entry.index = answered_;
  entry.query_descriptor = query.descriptor();
  entry.range_lo = query.range().front();
  entry.range_hi = query.range().back();
  entry.range_size = query.range().size();
  entry.answer = value;
  entry.epsilon = epsilon_tilde_;
  entry.seed_stamp = stamp;
  transcript_.entries.push_back(std::move(entry));

  ++answered_;
  return value;
}

std::optional<double> Session::answer_mad(
    const std::function<double(std::span<const Sample>)>& raw_eval, double zeta,
    std::string descriptor) {
  if (!(zeta > 0)) throw ParameterError("answer_mad: zeta must be > 0");
  FiniteRange grid = FiniteRange::centered_grid(5.0, zeta);
  if (grid.size() > config_.max_range_size)
    throw ParameterError("answer_mad: grid [-5,5] at step zeta needs r >= " +
                         std::to_string(grid.size()));
  EstimatorQuery wrapped(config_.block_size, std::move(grid), raw_eval, std::move(descriptor));
  return answer(wrapped);
}

double Session::interior_point_rho() const {
  if (config_.variant != SessionVariant::interior_point)
    throw ParameterError("interior_point_rho: session is not the interior-point variant");
  const double n = static_cast<double>(data_.block_count() * config_.block_size);
  return config_.beta * static_cast<double>(config_.block_size) /
         (4.0 * static_cast<double>(config_.max_queries) * n);
}

std::string Transcript::to_jsonl() const {
  nlohmann::json h;
  h["type"] = "header";
  h["schema_version"] = header.schema_version;
  h["t"] = header.config.block_size;
  h["k"] = header.config.max_queries;
  h["r"] = header.config.max_range_size;
  h["beta"] = header.config.beta;
  h["variant"] = variant_name(header.config.variant);
  if (header.config.aggressive) {
    h["profile"] = "aggressive";
    h["epsilon_star"] = header.config.aggressive->epsilon_star;
    h["delta_star"] = header.config.aggressive->delta_star;
  } else {
    h["profile"] = "paper";
  }
  h["seed"] = header.config.seed;
  h["dataset"] = header.dataset_descriptor;
  h["block_count"] = header.block_count;
  h["discarded"] = header.discarded;
  h["epsilon_tilde"] = header.epsilon_tilde;
  h["guarantee_void"] = header.guarantee_void;

  std::ostringstream out;
  out << h.dump() << '\n';
  for (const TranscriptEntry& e : entries) {
    nlohmann::json j;
    j["type"] = "entry";
    j["index"] = e.index;
    j["query"] = e.query_descriptor;
    j["range"] = {{"lo", e.range_lo}, {"hi", e.range_hi}, {"size", e.range_size}};
    j["answer"] = e.answer;
    j["epsilon"] = e.epsilon;
    j["seed_stamp"] = e.seed_stamp;
    out << j.dump() << '\n';
  }
  return out.str();
}

Transcript Transcript::from_jsonl(const std::string& text) {
  Transcript t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("Transcript: malformed JSON line: ") + e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (have_header) throw DataError("Transcript: duplicate header line");
        t.header.schema_version = j.at("schema_version").get<std::size_t>();
        t.header.config.block_size = j.at("t").get<std::size_t>();
        t.header.config.max_queries = j.at("k").get<std::size_t>();
        t.header.config.max_range_size = j.at("r").get<std::size_t>();
        t.header.config.beta = j.at("beta").get<double>();
        t.header.config.variant = variant_from_name(j.at("variant").get<std::string>());
        if (j.at("profile").get<std::string>() == "aggressive") {
          t.header.config.aggressive =
              AggressiveBudget{j.at("epsilon_star").get<double>(),
                               j.at("delta_star").get<double>()};
        }
        t.header.config.seed = j.at("seed").get<std::uint64_t>();
        t.header.dataset_descriptor = j.at("dataset").get<std::string>();
        t.header.block_count = j.at("block_count").get<std::size_t>();
        t.header.discarded = j.at("discarded").get<std::size_t>();
        t.header.epsilon_tilde = j.at("epsilon_tilde").get<double>();
        t.header.guarantee_void = j.at("guarantee_void").get<bool>();
        have_header = true;
      } else if (type == "entry") {
        if (!have_header) throw DataError("Transcript: entry before header");
        TranscriptEntry e;
        e.index = j.at("index").get<std::size_t>();
        e.query_descriptor = j.at("query").get<std::string>();
        e.range_lo = j.at("range").at("lo").get<double>();
        e.range_hi = j.at("range").at("hi").get<double>();
        e.range_size = j.at("range").at("size").get<std::size_t>();
        e.answer = j.at("answer").get<double>();
        e.epsilon = j.at("epsilon").get<double>();
        e.seed_stamp = j.at("seed_stamp").get<std::uint64_t>();
        t.entries.push_back(std::move(e));
      } else {
        throw DataError("Transcript: unknown line type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("Transcript: schema violation: ") + e.what());
    }
  }
  if (!have_header) throw DataError("Transcript: missing header line");
  return t;
}

}  // namespace adaptive_median
