#include "genspring/runner/experiment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "genspring/errors.hpp"
#include "genspring/random.hpp"
#include "genspring/runner/runlog.hpp"

namespace genspring::runner {

namespace {

enum Stream : std::uint64_t { kInitialSet = 10, kSimulator = 12, kStep = 13, kInitialFit = 14 };

// Serves logged outcomes for designs already in the log being resumed and
// forwards everything else.
class ReplayBackend final : public fitness::EvaluatorBackend {
 public:
  ReplayBackend(fitness::EvaluatorBackend& inner, std::vector<fitness::EvaluationRecord> logged)
      : inner_(inner), logged_(std::move(logged)) {}

  fitness::BackendMode mode() const noexcept override { return inner_.mode(); }

  fitness::TrialSet evaluate(std::size_t design_id, const latent::LatentVector& latent,
                             const designgen::PrintabilityReport& report) override {
    if (design_id >= logged_.size()) return inner_.evaluate(design_id, latent, report);
    const auto& r = logged_[design_id];
    if (!(r.latent == latent)) {
      throw StateError("resumed run proposed a different design " + std::to_string(design_id) + " than the log");
    }
    if (!r.printability || !r.printability->connected) {
      throw StateError("logged design " + std::to_string(design_id) + " was not printable");
    }
    if (r.trials) return *r.trials;
    fitness::TrialSet unloadable;
    unloadable.loadable = false;
    return unloadable;
  }

 private:
  fitness::EvaluatorBackend& inner_;
  std::vector<fitness::EvaluationRecord> logged_;
};

std::optional<double> lowest_mse(const std::vector<fitness::EvaluationRecord>& records, std::size_t count) {
  std::optional<double> best;
  for (std::size_t i = 0; i < std::min(count, records.size()); ++i) {
    if (records[i].raw_mse && (!best || *records[i].raw_mse < *best)) best = records[i].raw_mse;
  }
  return best;
}

bool contains(const std::vector<InitialDesign>& set, const latent::LatentVector& z) {
  return std::any_of(set.begin(), set.end(), [&](const InitialDesign& d) { return d.latent == z; });
}

ego::EgoSettings ego_settings(const ExperimentConfig& c) {
  ego::EgoSettings s;
  s.fit.ga = c.mle_ga;
  s.fit.fixed_lambda = c.fixed_lambda;
  s.infill = c.ei_ga;
  s.perturbations = c.perturbation_count;
  s.perturbation_sigma = c.perturbation_sigma;
  s.threshold = c.threshold;
  s.ei_threshold = c.ei_threshold;
  return s;
}

}  // namespace

std::vector<designgen::CorpusSample> training_corpus(const ExperimentConfig& config) {
  return designgen::sample_training_corpus(config.vae.corpus_per_style, config.vae.corpus_seed);
}

latent::VaeModel prepare_vae(const ExperimentConfig& config, const std::function<void(const std::string&)>& log) {
  const auto path = config.checkpoint_path();
  if (std::filesystem::exists(path)) {
    latent::VaeModel model = latent::VaeModel::load(path);
    if (model.latent_dim() != config.vae.train.latent_dim) {
      throw ConfigError("checkpoint " + path.string() + " has latent dimension " + std::to_string(model.latent_dim()) +
                        ", config expects " + std::to_string(config.vae.train.latent_dim));
    }
    if (log) log("loaded VAE checkpoint " + path.string());
    return model;
  }
  if (!config.vae.train_if_missing) throw ConfigError("VAE checkpoint " + path.string() + " does not exist");
  if (log) log("training VAE (" + std::to_string(config.vae.train.epochs) + " epochs) -> " + path.string());
  std::vector<designgen::DesignBitmap> bitmaps;
  for (auto& s : training_corpus(config)) bitmaps.push_back(std::move(s.bitmap));
  auto result = latent::train(bitmaps, config.vae.train);
  if (log) {
    log("holdout loss " + std::to_string(result.initial_holdout_loss) + " -> " +
        std::to_string(result.final_holdout_loss));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  result.model.save(path);
  return std::move(result.model);
}

std::vector<InitialDesign> build_initial_set(const ExperimentConfig& config, const latent::VaeModel& vae,
                                             const std::vector<designgen::CorpusSample>& corpus,
                                             std::uint64_t rng_seed) {
  const InitialSetSpec& spec = config.initial;
  std::vector<InitialDesign> out;
  auto take = [&](const std::vector<std::size_t>& candidates, std::size_t count) {
    std::size_t taken = 0;
    for (std::size_t i : candidates) {
      if (taken == count) break;
      latent::LatentVector z(vae.encode(corpus[i].bitmap).mu);
      if (contains(out, z)) continue;
      out.push_back({std::move(z), "corpus", corpus[i].spec.style_id});
      ++taken;
    }
    if (taken < count) throw ConfigError("training corpus has too few distinct samples for the initial set");
  };

  if (spec.pick_mode == PickMode::kRandom) {
    if (corpus.size() < spec.corpus_picks) throw ConfigError("training corpus is smaller than the corpus picks");
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(rng_seed, 1));
    std::shuffle(order.begin(), order.end(), rng);
    take(order, spec.corpus_picks);
  } else {
    const std::size_t per_style = spec.corpus_picks / 8;
    for (int style = 1; style <= 8; ++style) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].spec.style_id == style) members.push_back(i);
      }
      if (members.size() < per_style) {
        throw ConfigError("training corpus has fewer than " + std::to_string(per_style) + " samples of style " +
                          std::to_string(style));
      }
      Rng rng(derive_seed(rng_seed, 2, static_cast<std::uint64_t>(style)));
      std::shuffle(members.begin(), members.end(), rng);
      take(members, per_style);
    }
  }

  Rng rng(derive_seed(rng_seed, 3));
  const std::size_t d = vae.latent_dim();
  while (out.size() < spec.size()) {
    std::vector<double> z(d);
    for (double& v : z) v = standard_normal(rng);
    latent::LatentVector lv(std::move(z));
    if (!contains(out, lv)) out.push_back({std::move(lv), "gaussian", 0});
  }
  return out;
}

Experiment::Experiment(ExperimentConfig config, latent::VaeModel vae,
                       std::shared_ptr<fitness::EvaluatorBackend> backend)
    : config_(std::move(config)), vae_(std::move(vae)), backend_(std::move(backend)) {
  config_.validate();
  if (vae_.latent_dim() == 0) throw ConfigError("experiment needs a VAE model");
  if (!backend_) {
    if (config_.backend != fitness::BackendMode::kSimulator) {
      throw ConfigError("human-entry runs need a backend bound to the service");
    }
    backend_ = std::make_shared<fitness::SimulatorBackend>(config_.simulator, derive_seed(config_.seed, kSimulator));
  }
  if (backend_->mode() != config_.backend) throw ConfigError("backend does not match the configured mode");
  status_.initial_size = config_.initial.size();
  status_.budget = config_.infill_budget;
}

RunStatus Experiment::status() const {
  std::lock_guard lock(status_mutex_);
  return status_;
}

void Experiment::set_status(const std::function<void(RunStatus&)>& update) {
  std::lock_guard lock(status_mutex_);
  update(status_);
}

RunSummary Experiment::run(const std::filesystem::path& log, bool resume) {
  std::vector<fitness::EvaluationRecord> logged;
  const bool replay = resume && std::filesystem::exists(log);
  RunLogWriter writer = replay ? RunLogWriter::resume(log) : RunLogWriter::create(log);
  if (replay && writer.replay_remaining() > 0) logged = read_runlog(log).records;
  ReplayBackend backend(*backend_, std::move(logged));

  RunSummary summary;
  summary.initial_size = config_.initial.size();
  std::vector<fitness::EvaluationRecord> records;
  double y_best = std::numeric_limits<double>::infinity();
  set_status([](RunStatus& s) {
    s.state = "running";
    s.error.clear();
  });

  const ego::Decoder decoder = [this](const latent::LatentVector& z) { return vae_.decode(z); };
  auto announce = [this](std::size_t id, std::optional<double> ei, const std::string& origin) {
    set_status([&](RunStatus& s) {
      s.pending_design_id = id;
      s.pending_ei = ei;
      s.pending_origin = origin;
    });
  };
  auto evaluated = [&](const fitness::EvaluationRecord& r) {
    writer.emit(record_line(r));
    set_status([&](RunStatus& s) {
      s.evaluations = r.design_id + 1;
      s.pending_design_id.reset();
      s.pending_ei.reset();
      s.pending_origin.clear();
    });
  };

  try {
    writer.emit(config_line(config_.snapshot()));
    const auto initial =
        build_initial_set(config_, vae_, training_corpus(config_), derive_seed(config_.seed, kInitialSet));
    for (std::size_t i = 0; i < initial.size(); ++i) {
      announce(i, std::nullopt, initial[i].origin);
      records.push_back(
          ego::evaluate_design(i, initial[i].latent, decoder, backend, config_.threshold, initial[i].origin));
      evaluated(records.back());
    }

    const ego::EgoSettings settings = ego_settings(config_);
    ego::EgoState state =
        ego::initialize(std::move(records), config_.infill_budget, settings, derive_seed(config_.seed, kInitialFit));
    writer.emit(initialized_line(state));
    y_best = state.y_best;
    summary.y_best_trace.push_back(state.y_best);
    set_status([&](RunStatus& s) { s.y_best = state.y_best; });

    ego::StepHooks hooks;
    hooks.before_evaluate = [&](std::size_t id, const ego::InfillProposal& p) {
      announce(id, p.ei_value, p.kind == ego::InfillKind::kEgoCandidate ? "infill" : "perturbation");
    };
    hooks.after_evaluate = evaluated;
    while (!state.done()) {
      auto trace = ego::step(state, decoder, backend, settings, derive_seed(config_.seed, kStep, state.iteration + 1),
                             hooks);
      writer.emit(iteration_line(trace));
      y_best = state.y_best;
      summary.y_best_trace.push_back(state.y_best);
      set_status([&](RunStatus& s) {
        s.iteration = state.iteration;
        s.y_best = state.y_best;
      });
      summary.traces.push_back(std::move(trace));
    }
    writer.emit(status_line("completed", state.records.size(), state.y_best));
    records = std::move(state.records);
  } catch (const std::exception& e) {
    const std::string message = e.what();
    if (!writer.replaying()) {
      try {
        writer.emit(status_line("failed", status().evaluations, y_best, message));
      } catch (const std::exception&) {
        // The original error is the one worth reporting.
      }
    }
    set_status([&](RunStatus& s) {
      s.state = "failed";
      s.error = message;
      s.pending_design_id.reset();
    });
    throw;
  }

  summary.initial_feasible_mse = lowest_mse(records, summary.initial_size);
  summary.final_feasible_mse = lowest_mse(records, records.size());
  summary.records = std::move(records);
  set_status([](RunStatus& s) { s.state = "completed"; });
  return summary;
}

RunSummary run(const ExperimentConfig& config, bool resume) {
  Experiment experiment(config, prepare_vae(config));
  return experiment.run(config.log_path(), resume);
}

}  // namespace genspring::runner
