#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "genspring/designgen/styles.hpp"
#include "genspring/ego/loop.hpp"
#include "genspring/fitness/backend.hpp"
#include "genspring/latent/vae.hpp"
#include "genspring/runner/config.hpp"

namespace genspring::runner {

struct InitialDesign {
  latent::LatentVector latent;
  std::string origin;  // "corpus" or "gaussian"
  int style_id = 0;    // corpus picks only
};

// The deterministic training corpus a config describes.
std::vector<designgen::CorpusSample> training_corpus(const ExperimentConfig& config);

// Loads the checkpoint, or trains on training_corpus() and saves it when the
// checkpoint is missing and training is enabled.
latent::VaeModel prepare_vae(const ExperimentConfig& config, const std::function<void(const std::string&)>& log = {});

// Corpus picks (posterior means of distinct samples: random, or an equal
// number per style) followed by N(0, I) draws. Duplicate latents are skipped.
std::vector<InitialDesign> build_initial_set(const ExperimentConfig& config, const latent::VaeModel& vae,
                                             const std::vector<designgen::CorpusSample>& corpus,
                                             std::uint64_t rng_seed);

struct RunStatus {
  std::string state = "idle";  // idle, running, waiting, completed, failed
  std::size_t evaluations = 0;
  std::size_t initial_size = 0;
  std::size_t budget = 0;
  std::size_t iteration = 0;
  std::optional<double> y_best;
  std::string error;
  std::optional<std::size_t> pending_design_id;
  std::optional<double> pending_ei;
  std::string pending_origin;
};

struct RunSummary {
  std::vector<fitness::EvaluationRecord> records;  // renormalized over the run
  std::vector<ego::IterationTrace> traces;
  std::vector<double> y_best_trace;  // after the initial set, then per iteration
  std::optional<double> initial_feasible_mse;  // lowest raw_mse among the initial set
  std::optional<double> final_feasible_mse;    // lowest raw_mse over the run
  std::size_t initial_size = 0;
};

// One run of a config against one backend. The simulator backend is built
// from the config unless an external backend is supplied.
class Experiment {
 public:
  Experiment(ExperimentConfig config, latent::VaeModel vae,
             std::shared_ptr<fitness::EvaluatorBackend> backend = nullptr);

  // Writes the log at `log`. With resume, the existing log is replayed: logged
  // evaluations are reused (their latents must match) and the run continues
  // after the last logged line.
  RunSummary run(const std::filesystem::path& log, bool resume = false);

  RunStatus status() const;
  const ExperimentConfig& config() const noexcept { return config_; }
  fitness::EvaluatorBackend& backend() noexcept { return *backend_; }

 private:
  void set_status(const std::function<void(RunStatus&)>& update);

  ExperimentConfig config_;
  latent::VaeModel vae_;
  std::shared_ptr<fitness::EvaluatorBackend> backend_;
  mutable std::mutex status_mutex_;
  RunStatus status_;
};

// prepare_vae + Experiment::run on config.log_path().
RunSummary run(const ExperimentConfig& config, bool resume = false);

}  // namespace genspring::runner
