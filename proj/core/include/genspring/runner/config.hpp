#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "genspring/designgen/printability.hpp"
#include "genspring/fitness/backend.hpp"
#include "genspring/fitness/simulator.hpp"
#include "genspring/latent/vae.hpp"
#include "genspring/rga/rga.hpp"

namespace genspring::runner {

inline constexpr const char* kConfigSchema = "genspring.experiment/1";
inline constexpr const char* kDataDirEnv = "GENSPRING_DATA_DIR";

enum class Protocol { kExperiment1, kExperiment2, kCustom };
enum class PickMode { kRandom, kPerStyle };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& name);

struct InitialSetSpec {
  std::size_t corpus_picks = 16;
  PickMode pick_mode = PickMode::kRandom;
  std::size_t gaussian = 20;

  std::size_t size() const noexcept { return corpus_picks + gaussian; }
};

struct VaeSettings {
  std::string checkpoint = "vae.bin";  // relative to the data directory
  bool train_if_missing = true;
  latent::TrainOptions train;
  std::size_t corpus_per_style = 100;
  std::uint64_t corpus_seed = 7;
};

struct MeshSettings {
  double pixel_mm = 1.0;
  double depth_mm = 5.0;
};

struct ServiceSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct ExperimentConfig {
  Protocol protocol = Protocol::kExperiment1;
  std::uint64_t seed = 1;
  fitness::BackendMode backend = fitness::BackendMode::kSimulator;
  InitialSetSpec initial;
  std::size_t infill_budget = 36;  // evaluations after the initial set
  std::size_t perturbation_count = 0;
  double perturbation_sigma = 0.05;
  rga::GaConfig mle_ga;
  rga::GaConfig ei_ga;
  std::optional<double> fixed_lambda;
  double threshold = designgen::kDefaultThreshold;
  std::optional<double> ei_threshold;
  VaeSettings vae;
  fitness::SimulatorParams simulator = fitness::SimulatorParams::defaults();
  MeshSettings mesh;
  ServiceSettings service;
  std::filesystem::path data_dir = "genspring-data";
  std::string log = "run.jsonl";

  // Protocol defaults: experiment-1 picks 16 training samples at random and
  // evaluates one infill per iteration; experiment-2 takes two samples per
  // style and adds three perturbations (sigma 0.05) to every infill.
  static ExperimentConfig preset(Protocol protocol);
  // Starts from the protocol preset and overrides the fields present.
  // Relative data_dir entries resolve against base_dir.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  void validate() const;  // ConfigError
  // Everything that shapes the run's results; paths and service binding are
  // left out so a moved run still resumes.
  nlohmann::json snapshot() const;
  nlohmann::json to_json() const;  // snapshot plus paths and service

  // GENSPRING_DATA_DIR wins over data_dir.
  std::filesystem::path effective_data_dir() const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path log_path() const { return resolve(log); }
  std::filesystem::path checkpoint_path() const { return resolve(vae.checkpoint); }
};

nlohmann::json ga_to_json(const rga::GaConfig& ga);
rga::GaConfig ga_from_json(const nlohmann::json& j, rga::GaConfig base = {});

}  // namespace genspring::runner
