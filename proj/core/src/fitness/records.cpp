#include "genspring/fitness/records.hpp"

#include <algorithm>
#include <limits>

#include "genspring/errors.hpp"

namespace genspring::fitness {

using nlohmann::json;

EvaluationRecord make_record(std::size_t design_id, latent::LatentVector latent, const PrintabilityFlags& printability,
                             bool loadable, std::optional<TrialSet> trials) {
  EvaluationRecord r;
  r.design_id = design_id;
  r.latent = std::move(latent);
  r.rank = assign_rank(printability, loadable, trials);
  r.loadable = loadable;
  r.printability = printability;
  if (r.rank == Rank::kFeasible) r.raw_mse = raw_fitness(*trials);
  r.trials = std::move(trials);
  r.normalized_fitness = infeasible_fitness(r.rank);
  return r;
}

void normalized_fitness(std::vector<EvaluationRecord>& records) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : records) {
    if (!r.feasible()) continue;
    if (!r.raw_mse) throw StateError("feasible record without raw_mse");
    lo = std::min(lo, *r.raw_mse);
    hi = std::max(hi, *r.raw_mse);
  }
  const double span = hi - lo;
  for (auto& r : records) {
    if (!r.feasible()) {
      r.normalized_fitness = infeasible_fitness(r.rank);
    } else if (span > 0.0) {
      // divide first so the extremes land exactly on 0 and 100
      r.normalized_fitness = kFeasibleScaleMax * ((*r.raw_mse - lo) / span);
    } else {
      r.normalized_fitness = 0.0;
    }
  }
}

json to_json(const TrialSet& trials) {
  json d = json::array();
  for (const auto& v : trials.distances) d.push_back(v ? json(*v) : json(nullptr));
  return {{"distances", d}, {"loadable", trials.loadable}, {"broke", trials.broke}};
}

TrialSet trial_set_from_json(const json& j) {
  TrialSet t;
  const auto& d = j.at("distances");
  if (!d.is_array() || d.size() != kTrialCount) throw ProtocolError("trial set needs exactly 10 distances");
  for (std::size_t i = 0; i < kTrialCount; ++i) {
    if (!d[i].is_null()) t.distances[i] = d[i].get<double>();
  }
  t.loadable = j.at("loadable").get<bool>();
  t.broke = j.at("broke").get<bool>();
  return t;
}

json to_json(const EvaluationRecord& r) {
  json j = {
      {"design_id", r.design_id},
      {"latent", r.latent.vector()},
      {"rank", to_int(r.rank)},
      {"raw_mse", r.raw_mse ? json(*r.raw_mse) : json(nullptr)},
      {"normalized_fitness", r.normalized_fitness},
      {"loadable", r.loadable},
      {"trials", r.trials ? to_json(*r.trials) : json(nullptr)},
      {"origin", r.origin},
  };
  if (r.printability) {
    j["printability"] = {{"visible", r.printability->visible}, {"connected", r.printability->connected}};
  } else {
    j["printability"] = nullptr;
  }
  j["bitmap"] = {{"side", r.bitmap_side}, {"bits", r.bitmap_bits}};
  return j;
}

EvaluationRecord record_from_json(const json& j) {
  try {
    EvaluationRecord r;
    r.design_id = j.at("design_id").get<std::size_t>();
    r.latent = latent::LatentVector(j.at("latent").get<std::vector<double>>());
    const int rank = j.at("rank").get<int>();
    if (rank < 1 || rank > 6) throw ProtocolError("record rank out of range");
    r.rank = static_cast<Rank>(rank);
    if (!j.at("raw_mse").is_null()) r.raw_mse = j["raw_mse"].get<double>();
    r.normalized_fitness = j.at("normalized_fitness").get<double>();
    r.loadable = j.at("loadable").get<bool>();
    if (!j.at("trials").is_null()) r.trials = trial_set_from_json(j["trials"]);
    if (!j.at("printability").is_null()) {
      r.printability = PrintabilityFlags{j["printability"].at("visible").get<bool>(),
                                         j["printability"].at("connected").get<bool>()};
    }
    r.origin = j.value("origin", std::string{});
    if (j.contains("bitmap")) {
      r.bitmap_side = j["bitmap"].at("side").get<std::size_t>();
      r.bitmap_bits = j["bitmap"].at("bits").get<std::string>();
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed evaluation record: ") + e.what());
  }
}

}  // namespace genspring::fitness
