#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "genspring/fitness/trials.hpp"

namespace genspring::fitness {

// An operator's measurements as entered in the UI. A trial entry without a
// value is a MISSING launch.
struct HumanSubmission {
  std::optional<bool> loadable;
  std::optional<bool> broke;
  std::vector<std::optional<double>> trials;
};

// Structural parse of {"loadable", "broke", "trials": [number|null x10]}.
// Field-level problems surface as ValidationError.
HumanSubmission parse_submission(const nlohmann::json& body);

// Validates a submission and converts it to a TrialSet. When loadable is
// false the trial fields are ignored and the set carries no distances.
TrialSet human_evaluate(std::size_t design_id, const HumanSubmission& submission);

}  // namespace genspring::fitness
