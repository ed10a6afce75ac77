#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genspring/fitness/trials.hpp"
#include "genspring/latent/latent_vector.hpp"

namespace genspring::fitness {

// One evaluated design. The filtered bitmap travels with the record as packed
// bits so reports and the service never need the decoder.
struct EvaluationRecord {
  std::size_t design_id = 0;
  latent::LatentVector latent;
  Rank rank = Rank::kBlurry;
  std::optional<double> raw_mse;
  double normalized_fitness = infeasible_fitness(Rank::kBlurry);
  bool loadable = false;
  std::optional<TrialSet> trials;
  std::optional<PrintabilityFlags> printability;
  std::size_t bitmap_side = 0;
  std::string bitmap_bits;  // designgen::pack_bits of the filtered bitmap
  std::string origin;       // "corpus", "gaussian", "infill", "perturbation"

  bool feasible() const noexcept { return rank == Rank::kFeasible; }
  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

// Builds a record with rank and raw_mse filled in; normalized fitness holds
// the rank constant (0 for feasible) until normalized_fitness() runs.
EvaluationRecord make_record(std::size_t design_id, latent::LatentVector latent, const PrintabilityFlags& printability,
                             bool loadable, std::optional<TrialSet> trials);

// Rescales every feasible record so the lowest raw_mse maps to 0 and the
// highest to 100; infeasible records receive their rank constant.
void normalized_fitness(std::vector<EvaluationRecord>& records);

nlohmann::json to_json(const TrialSet& trials);
TrialSet trial_set_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvaluationRecord& record);
EvaluationRecord record_from_json(const nlohmann::json& j);

}  // namespace genspring::fitness
