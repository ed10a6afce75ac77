#include "genspring/fitness/human.hpp"

#include <cmath>
#include <string>

#include "genspring/errors.hpp"

namespace genspring::fitness {

using Field = ValidationError::Field;

HumanSubmission parse_submission(const nlohmann::json& body) {
  if (!body.is_object()) throw ValidationError("submission must be a JSON object", {{"body", "expected an object"}});
  std::vector<Field> problems;
  HumanSubmission s;
  auto flag = [&](const char* name, std::optional<bool>& out) {
    if (!body.contains(name) || body[name].is_null()) return;
    if (!body[name].is_boolean()) {
      problems.push_back({name, "expected true or false"});
      return;
    }
    out = body[name].get<bool>();
  };
  flag("loadable", s.loadable);
  flag("broke", s.broke);
  if (body.contains("trials") && !body["trials"].is_null()) {
    const auto& t = body["trials"];
    if (!t.is_array()) {
      problems.push_back({"trials", "expected an array"});
    } else {
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].is_null()) {
          s.trials.emplace_back();
        } else if (t[i].is_number()) {
          s.trials.emplace_back(t[i].get<double>());
        } else {
          problems.push_back({"trials[" + std::to_string(i) + "]", "expected a number or null"});
          s.trials.emplace_back();
        }
      }
    }
  }
  if (!problems.empty()) throw ValidationError("submission is malformed", std::move(problems));
  return s;
}

TrialSet human_evaluate(std::size_t design_id, const HumanSubmission& submission) {
  const std::string what = "submission for design " + std::to_string(design_id) + " is invalid";
  if (!submission.loadable) throw ValidationError(what, {{"loadable", "required"}});
  TrialSet t;
  t.loadable = *submission.loadable;
  if (!t.loadable) return t;

  std::vector<Field> problems;
  if (!submission.broke) problems.push_back({"broke", "required when the spring is loadable"});
  if (submission.trials.size() != kTrialCount) {
    problems.push_back({"trials", "expected exactly 10 entries, got " + std::to_string(submission.trials.size())});
  } else {
    for (std::size_t i = 0; i < kTrialCount; ++i) {
      const auto& d = submission.trials[i];
      if (d && !(std::isfinite(*d) && *d >= 0.0 && *d <= kRailLength)) {
        problems.push_back({"trials[" + std::to_string(i) + "]", "distance must lie in [0, 157] cm"});
      }
    }
  }
  if (!problems.empty()) throw ValidationError(what, std::move(problems));
  t.broke = *submission.broke;
  for (std::size_t i = 0; i < kTrialCount; ++i) t.distances[i] = submission.trials[i];
  return t;
}

}  // namespace genspring::fitness
