#include "adaptive_median/harness/adversary.hpp"

#include <utility>

#include <nlohmann/json.hpp>

#include "adaptive_median/errors.hpp"

namespace adaptive_median::harness {

OverfitBoostAdversary::OverfitBoostAdversary(std::size_t features, std::size_t queries)
    : features_(features), queries_(queries) {
  if (features_ == 0 || queries_ < 2)
    throw ParameterError("OverfitBoostAdversary: needs features >= 1 and k >= 2");
}

QueryDescriptor OverfitBoostAdversary::next(std::size_t index,
                                            std::span<const std::optional<double>> answers) {
  if (index + 1 < queries_) return QueryDescriptor::feature_mean(index % features_);

  // Final round: one probe per feature has been answered; boost along the
  // reported signs (bottom or an exact zero counts as +1).
  const std::size_t probes = std::min(queries_ - 1, answers.size());
  std::vector<int> signs(std::min(probes, features_), 1);
  for (std::size_t j = 0; j < signs.size(); ++j) {
    const std::optional<double>& a = answers[j];
    if (a.has_value() && *a < 0) signs[j] = -1;
  }
  return QueryDescriptor::signed_combo(std::move(signs));
}

// queries == 0 is the empty adversary: it is never consulted.
FixedBatchAdversary::FixedBatchAdversary(QueryDescriptor query, std::size_t queries)
    : query_(std::move(query)), queries_(queries) {}

QueryDescriptor FixedBatchAdversary::next(std::size_t,
                                          std::span<const std::optional<double>>) {
  return query_;
}

std::unique_ptr<AdversaryStrategy> make_adversary(const std::string& json_text,
                                                  std::size_t queries, std::size_t features) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("adversary: bad JSON: ") + e.what());
  }
  const std::string type = j.value("type", "");
  if (type == "overfit_boost")
    return std::make_unique<OverfitBoostAdversary>(features, queries);
  if (type == "fixed_batch")
    return std::make_unique<FixedBatchAdversary>(QueryDescriptor::from_json(j.at("query").dump()),
                                                 queries);
  throw DataError("adversary: unknown type '" + type + "'");
}

}  // namespace adaptive_median::harness
