#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "genspring/designgen/bitmap.hpp"
#include "genspring/designgen/printability.hpp"
#include "genspring/ego/acquisition.hpp"
#include "genspring/fitness/backend.hpp"
#include "genspring/fitness/records.hpp"
#include "genspring/kriging/kriging.hpp"

namespace genspring::ego {

using Decoder = std::function<designgen::DesignBitmap(const latent::LatentVector&)>;

struct EgoSettings {
  kriging::FitOptions fit;       // MLE search
  rga::GaConfig infill;          // EI search; bounds come from the search box
  std::size_t perturbations = 0;
  double perturbation_sigma = 0.05;
  double threshold = designgen::kDefaultThreshold;
  std::optional<double> ei_threshold;  // stop once the candidate's EI drops below
};

struct EgoState {
  std::vector<fitness::EvaluationRecord> records;
  kriging::KrigingModel model;
  double y_best = 0.0;
  std::size_t iteration = 0;
  std::size_t budget = 0;  // evaluations allowed after the initial set
  std::size_t initial_count = 0;
  bool converged = false;  // EI threshold reached

  std::size_t infill_evaluations() const noexcept { return records.size() - initial_count; }
  bool done() const noexcept { return converged || infill_evaluations() >= budget; }
};

struct IterationTrace {
  std::size_t iteration = 0;
  InfillProposal candidate;
  std::vector<InfillProposal> perturbations;
  std::vector<std::size_t> design_ids;  // records added, in evaluation order
  bool evaluated = true;                // false when the EI threshold stopped the run
  kriging::Hyperparameters hyperparameters;  // of the refitted model
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double sigma2_ri_hat = 0.0;
  double y_best = 0.0;
};

// Decodes, filters and (when printable) evaluates one latent. Unprintable
// designs never reach the backend.
fitness::EvaluationRecord evaluate_design(std::size_t design_id, const latent::LatentVector& z, const Decoder& decoder,
                                          fitness::EvaluatorBackend& backend, double threshold,
                                          const std::string& origin);

double best_fitness(const std::vector<fitness::EvaluationRecord>& records);

kriging::SampleSet samples_of(const std::vector<fitness::EvaluationRecord>& records);

// Normalizes the fitness of evaluated initial records and fits the surrogate.
EgoState initialize(std::vector<fitness::EvaluationRecord> records, std::size_t budget, const EgoSettings& settings,
                    std::uint64_t rng_seed);

// Observers of the evaluations inside a step, e.g. to persist each record as
// soon as it exists.
struct StepHooks {
  std::function<void(std::size_t design_id, const InfillProposal&)> before_evaluate;
  std::function<void(const fitness::EvaluationRecord&)> after_evaluate;
};

// One infill iteration. On any error the state is left untouched.
IterationTrace step(EgoState& state, const Decoder& decoder, fitness::EvaluatorBackend& backend,
                    const EgoSettings& settings, std::uint64_t rng_seed, const StepHooks& hooks = {});

// EGO on an explicit function over a box: Latin-hypercube start, then one
// EI-maximizing infill per iteration.
struct BlackBoxOptions {
  std::size_t initial_samples = 10;
  std::size_t infills = 30;
  kriging::FitOptions fit;
  rga::GaConfig infill;
};

struct BlackBoxResult {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<double> best_trace;  // best value after each evaluation
  std::vector<double> best_x;
  double best = 0.0;
};

BlackBoxResult minimize_black_box(const std::function<double(std::span<const double>)>& f,
                                  const std::vector<double>& lower, const std::vector<double>& upper,
                                  const BlackBoxOptions& options, std::uint64_t rng_seed);

}  // namespace genspring::ego
