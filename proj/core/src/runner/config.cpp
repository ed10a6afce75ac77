#include "genspring/runner/config.hpp"

#include <cstdlib>
#include <fstream>

#include "genspring/errors.hpp"

namespace genspring::runner {

using nlohmann::json;

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::kExperiment1: return "experiment-1";
    case Protocol::kExperiment2: return "experiment-2";
    case Protocol::kCustom: return "custom";
  }
  return "custom";
}

Protocol protocol_from_string(const std::string& name) {
  if (name == "experiment-1") return Protocol::kExperiment1;
  if (name == "experiment-2") return Protocol::kExperiment2;
  if (name == "custom") return Protocol::kCustom;
  throw ConfigError("unknown protocol '" + name + "' (expected experiment-1, experiment-2 or custom)");
}

namespace {

const char* to_string(PickMode m) { return m == PickMode::kRandom ? "random" : "per-style"; }

PickMode pick_mode_from_string(const std::string& name) {
  if (name == "random") return PickMode::kRandom;
  if (name == "per-style") return PickMode::kPerStyle;
  throw ConfigError("unknown pick mode '" + name + "' (expected random or per-style)");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_double(const json& j, const char* key, std::optional<double> fallback) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

json train_to_json(const latent::TrainOptions& t) {
  return {{"epochs", t.epochs},         {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
          {"seed", t.seed},             {"hidden", t.hidden},         {"latent_dim", t.latent_dim},
          {"holdout_fraction", t.holdout_fraction}};
}

latent::TrainOptions train_from_json(const json& j, latent::TrainOptions t) {
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.seed = j.value("seed", t.seed);
  t.hidden = j.value("hidden", t.hidden);
  t.latent_dim = j.value("latent_dim", t.latent_dim);
  t.holdout_fraction = j.value("holdout_fraction", t.holdout_fraction);
  return t;
}

}  // namespace

json ga_to_json(const rga::GaConfig& ga) {
  return {{"population_size", ga.population_size},
          {"generations", ga.generations},
          {"tournament_size", ga.tournament_size},
          {"crossover_probability", ga.crossover_probability},
          {"blend_alpha", ga.blend_alpha},
          {"mutation_mean", ga.mutation_mean},
          {"mutation_sigma_fraction", ga.mutation_sigma_fraction},
          {"mutation_probability", ga.mutation_probability}};
}

rga::GaConfig ga_from_json(const json& j, rga::GaConfig ga) {
  ga.population_size = j.value("population_size", ga.population_size);
  ga.generations = j.value("generations", ga.generations);
  ga.tournament_size = j.value("tournament_size", ga.tournament_size);
  ga.crossover_probability = j.value("crossover_probability", ga.crossover_probability);
  ga.blend_alpha = j.value("blend_alpha", ga.blend_alpha);
  ga.mutation_mean = j.value("mutation_mean", ga.mutation_mean);
  ga.mutation_sigma_fraction = j.value("mutation_sigma_fraction", ga.mutation_sigma_fraction);
  ga.mutation_probability = j.value("mutation_probability", ga.mutation_probability);
  return ga;
}

ExperimentConfig ExperimentConfig::preset(Protocol protocol) {
  ExperimentConfig c;
  c.protocol = protocol;
  c.vae.train.epochs = 400;
  // small batches: more plain-SGD steps per epoch; 2e-3 diverges at this size
  c.vae.train.batch_size = 8;
  c.vae.train.learning_rate = 1e-3;
  c.mle_ga.population_size = 40;
  c.mle_ga.generations = 50;
  if (protocol == Protocol::kExperiment2) {
    c.initial.pick_mode = PickMode::kPerStyle;
    c.perturbation_count = 3;
    c.perturbation_sigma = 0.05;
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    if (j.contains("schema") && j["schema"].get<std::string>() != kConfigSchema) {
      throw ConfigError(std::string("experiment config schema must be ") + kConfigSchema);
    }
    ExperimentConfig c = preset(protocol_from_string(j.value("protocol", std::string("experiment-1"))));
    c.seed = j.value("seed", c.seed);
    if (j.contains("backend")) c.backend = fitness::backend_mode_from_string(j["backend"].get<std::string>());
    if (j.contains("initial")) {
      const auto& i = j["initial"];
      c.initial.corpus_picks = i.value("corpus_picks", c.initial.corpus_picks);
      c.initial.gaussian = i.value("gaussian", c.initial.gaussian);
      if (i.contains("pick_mode")) c.initial.pick_mode = pick_mode_from_string(i["pick_mode"].get<std::string>());
    }
    c.infill_budget = j.value("infill_budget", c.infill_budget);
    if (j.contains("perturbation")) {
      c.perturbation_count = j["perturbation"].value("count", c.perturbation_count);
      c.perturbation_sigma = j["perturbation"].value("sigma", c.perturbation_sigma);
    }
    if (j.contains("mle_ga")) c.mle_ga = ga_from_json(j["mle_ga"], c.mle_ga);
    if (j.contains("ei_ga")) c.ei_ga = ga_from_json(j["ei_ga"], c.ei_ga);
    c.fixed_lambda = optional_double(j, "fixed_lambda", c.fixed_lambda);
    c.threshold = j.value("threshold", c.threshold);
    c.ei_threshold = optional_double(j, "ei_threshold", c.ei_threshold);
    if (j.contains("vae")) {
      const auto& v = j["vae"];
      c.vae.checkpoint = v.value("checkpoint", c.vae.checkpoint);
      c.vae.train_if_missing = v.value("train_if_missing", c.vae.train_if_missing);
      c.vae.corpus_per_style = v.value("corpus_per_style", c.vae.corpus_per_style);
      c.vae.corpus_seed = v.value("corpus_seed", c.vae.corpus_seed);
      if (v.contains("train")) c.vae.train = train_from_json(v["train"], c.vae.train);
    }
    if (j.contains("simulator")) {
      const auto& s = j["simulator"];
      if (s.is_string()) {
        std::filesystem::path p = s.get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        c.simulator = fitness::SimulatorParams::load(p);
      } else {
        json merged = c.simulator.to_json();
        merged.update(s);
        c.simulator = fitness::SimulatorParams::from_json(merged);
      }
    }
    if (j.contains("mesh")) {
      c.mesh.pixel_mm = j["mesh"].value("pixel_mm", c.mesh.pixel_mm);
      c.mesh.depth_mm = j["mesh"].value("depth_mm", c.mesh.depth_mm);
    }
    if (j.contains("service")) {
      c.service.host = j["service"].value("host", c.service.host);
      c.service.port = j["service"].value("port", c.service.port);
    }
    if (j.contains("data_dir")) {
      std::filesystem::path p = j["data_dir"].get<std::string>();
      c.data_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else if (!base_dir.empty()) {
      c.data_dir = base_dir / c.data_dir;
    }
    c.log = j.value("log", c.log);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("experiment config " + path.string() + " is not JSON: " + e.what());
  }
  return from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

void ExperimentConfig::validate() const {
  const bool fixed_protocol = protocol != Protocol::kCustom;
  if (fixed_protocol && (initial.corpus_picks != 16 || initial.gaussian != 20)) {
    throw ConfigError(to_string(protocol) + " uses 16 training-set picks and 20 Gaussian draws");
  }
  if (protocol == Protocol::kExperiment1 && (perturbation_count != 0 || initial.pick_mode != PickMode::kRandom)) {
    throw ConfigError("experiment-1 picks training samples at random and uses no perturbations");
  }
  if (protocol == Protocol::kExperiment2 &&
      (perturbation_count != 3 || perturbation_sigma != 0.05 || initial.pick_mode != PickMode::kPerStyle)) {
    throw ConfigError("experiment-2 picks two samples per style and adds 3 perturbations at sigma 0.05");
  }
  if (initial.size() < 2) throw ConfigError("initial set needs at least two designs");
  if (initial.pick_mode == PickMode::kPerStyle && initial.corpus_picks % 8 != 0) {
    throw ConfigError("per-style picks must be a multiple of the 8 styles");
  }
  if (!(perturbation_sigma > 0.0)) throw ConfigError("perturbation sigma must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("print threshold must lie in (0,1)");
  if (fixed_lambda && !(*fixed_lambda >= 0.0)) throw ConfigError("fixed lambda must be non-negative");
  if (vae.train.latent_dim == 0 || vae.train.hidden == 0 || vae.train.batch_size == 0) {
    throw ConfigError("VAE sizes must be positive");
  }
  if (vae.corpus_per_style == 0) throw ConfigError("corpus_per_style must be positive");
  if (!(mesh.pixel_mm > 0.0 && mesh.depth_mm > 0.0)) throw ConfigError("mesh dimensions must be positive");
  if (service.port < 0 || service.port > 65535) throw ConfigError("service port out of range");
  auto check_ga = [](const rga::GaConfig& ga, const char* what) {
    rga::GaConfig probe = ga;
    probe.lower = {0.0};
    probe.upper = {1.0};
    try {
      probe.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  };
  check_ga(mle_ga, "mle_ga");
  check_ga(ei_ga, "ei_ga");
  simulator.validate();
}

json ExperimentConfig::snapshot() const {
  return {
      {"schema", kConfigSchema},
      {"protocol", to_string(protocol)},
      {"seed", seed},
      {"backend", fitness::to_string(backend)},
      {"initial",
       {{"corpus_picks", initial.corpus_picks}, {"pick_mode", to_string(initial.pick_mode)}, {"gaussian", initial.gaussian}}},
      {"infill_budget", infill_budget},
      {"perturbation", {{"count", perturbation_count}, {"sigma", perturbation_sigma}}},
      {"mle_ga", ga_to_json(mle_ga)},
      {"ei_ga", ga_to_json(ei_ga)},
      {"fixed_lambda", optional_json(fixed_lambda)},
      {"threshold", threshold},
      {"ei_threshold", optional_json(ei_threshold)},
      {"vae",
       {{"train_if_missing", vae.train_if_missing},
        {"corpus_per_style", vae.corpus_per_style},
        {"corpus_seed", vae.corpus_seed},
        {"train", train_to_json(vae.train)}}},
      {"simulator", simulator.to_json()},
      {"mesh", {{"pixel_mm", mesh.pixel_mm}, {"depth_mm", mesh.depth_mm}}},
  };
}

json ExperimentConfig::to_json() const {
  json j = snapshot();
  j["vae"]["checkpoint"] = vae.checkpoint;
  j["service"] = {{"host", service.host}, {"port", service.port}};
  j["data_dir"] = data_dir.string();
  j["log"] = log;
  return j;
}

std::filesystem::path ExperimentConfig::effective_data_dir() const {
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return data_dir;
}

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : effective_data_dir() / p;
}

}  // namespace genspring::runner
