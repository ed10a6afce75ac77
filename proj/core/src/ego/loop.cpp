#include "genspring/ego/loop.hpp"

#include <algorithm>
#include <limits>

#include "genspring/designgen/bitmap.hpp"
#include "genspring/ego/sampling.hpp"
#include "genspring/errors.hpp"
#include "genspring/random.hpp"

namespace genspring::ego {

namespace {

enum Stream : std::uint64_t { kPropose = 1, kPerturb = 2, kRefit = 3, kDesign = 4 };

}  // namespace

fitness::EvaluationRecord evaluate_design(std::size_t design_id, const latent::LatentVector& z, const Decoder& decoder,
                                          fitness::EvaluatorBackend& backend, double threshold,
                                          const std::string& origin) {
  const designgen::PrintabilityReport report = designgen::filter_connected(decoder(z), threshold);
  const auto flags = fitness::PrintabilityFlags::of(report);
  fitness::EvaluationRecord record;
  if (report.connected) {
    fitness::TrialSet trials = backend.evaluate(design_id, z, report);
    const bool loadable = trials.loadable;
    std::optional<fitness::TrialSet> kept;
    if (loadable) kept = trials;
    record = fitness::make_record(design_id, z, flags, loadable, std::move(kept));
  } else {
    record = fitness::make_record(design_id, z, flags, false, std::nullopt);
  }
  record.origin = origin;
  record.bitmap_side = report.filtered.side();
  record.bitmap_bits = designgen::pack_bits(report.filtered);
  return record;
}

double best_fitness(const std::vector<fitness::EvaluationRecord>& records) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : records) best = std::min(best, r.normalized_fitness);
  return best;
}

kriging::SampleSet samples_of(const std::vector<fitness::EvaluationRecord>& records) {
  if (records.empty()) throw StateError("surrogate needs at least one record");
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto d = static_cast<Eigen::Index>(records.front().latent.dim());
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.latent.dim()) != d) throw StateError("records mix latent dimensions");
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = r.latent[static_cast<std::size_t>(k)];
    y(i) = r.normalized_fitness;
  }
  return kriging::SampleSet(std::move(x), std::move(y));
}

EgoState initialize(std::vector<fitness::EvaluationRecord> records, std::size_t budget, const EgoSettings& settings,
                    std::uint64_t rng_seed) {
  EgoState state;
  fitness::normalized_fitness(records);
  state.model = kriging::fit(samples_of(records), settings.fit, derive_seed(rng_seed, kRefit));
  state.y_best = best_fitness(records);
  state.initial_count = records.size();
  state.records = std::move(records);
  state.budget = budget;
  return state;
}

IterationTrace step(EgoState& state, const Decoder& decoder, fitness::EvaluatorBackend& backend,
                    const EgoSettings& settings, std::uint64_t rng_seed, const StepHooks& hooks) {
  if (state.records.empty()) throw StateError("EGO step before the initial set was evaluated");
  if (state.done()) throw StateError("EGO budget exhausted");

  IterationTrace trace;
  trace.iteration = state.iteration + 1;
  trace.candidate = propose_infill(state.model, state.y_best, settings.infill, derive_seed(rng_seed, kPropose));
  if (settings.ei_threshold && trace.candidate.ei_value < *settings.ei_threshold) {
    trace.evaluated = false;
    trace.hyperparameters = state.model.hyperparameters();
    trace.mu_hat = state.model.mu_hat();
    trace.sigma2_hat = state.model.sigma2_hat();
    trace.sigma2_ri_hat = state.model.sigma2_ri_hat();
    trace.y_best = state.y_best;
    state.converged = true;
    return trace;
  }
  trace.perturbations =
      perturbation_infills(trace.candidate, settings.perturbations, settings.perturbation_sigma,
                           search_box(state.model.samples()), derive_seed(rng_seed, kPerturb), &state.model,
                           state.y_best);

  std::vector<const InfillProposal*> batch{&trace.candidate};
  for (const auto& p : trace.perturbations) batch.push_back(&p);
  batch.resize(std::min(batch.size(), state.budget - state.infill_evaluations()));

  std::vector<fitness::EvaluationRecord> records = state.records;
  for (const InfillProposal* p : batch) {
    const std::size_t id = records.size();
    if (hooks.before_evaluate) hooks.before_evaluate(id, *p);
    records.push_back(evaluate_design(id, p->latent, decoder, backend, settings.threshold,
                                      p->kind == InfillKind::kEgoCandidate ? "infill" : "perturbation"));
    if (hooks.after_evaluate) hooks.after_evaluate(records.back());
    trace.design_ids.push_back(id);
  }
  fitness::normalized_fitness(records);
  kriging::KrigingModel model = kriging::fit(samples_of(records), settings.fit, derive_seed(rng_seed, kRefit));

  state.records = std::move(records);
  state.model = std::move(model);
  state.y_best = best_fitness(state.records);
  state.iteration = trace.iteration;
  trace.hyperparameters = state.model.hyperparameters();
  trace.mu_hat = state.model.mu_hat();
  trace.sigma2_hat = state.model.sigma2_hat();
  trace.sigma2_ri_hat = state.model.sigma2_ri_hat();
  trace.y_best = state.y_best;
  return trace;
}

BlackBoxResult minimize_black_box(const std::function<double(std::span<const double>)>& f,
                                  const std::vector<double>& lower, const std::vector<double>& upper,
                                  const BlackBoxOptions& options, std::uint64_t rng_seed) {
  const std::size_t d = lower.size();
  if (d == 0 || upper.size() != d) throw ParameterError("black-box bounds must be non-empty and matched");
  BlackBoxResult out;
  auto record = [&](std::vector<double> x) {
    const double y = f(x);
    if (out.y.empty() || y < out.best) {
      out.best = y;
      out.best_x = x;
    }
    out.x.push_back(std::move(x));
    out.y.push_back(y);
    out.best_trace.push_back(out.best);
  };

  const Eigen::MatrixXd u = latin_hypercube(options.initial_samples, d, derive_seed(rng_seed, kDesign));
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    std::vector<double> x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = lower[k] + u(i, static_cast<Eigen::Index>(k)) * (upper[k] - lower[k]);
    record(std::move(x));
  }

  const SearchBox box{lower, upper};
  for (std::size_t it = 0; it < options.infills; ++it) {
    const auto n = static_cast<Eigen::Index>(out.x.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) x(i, static_cast<Eigen::Index>(k)) = out.x[static_cast<std::size_t>(i)][k];
    }
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(out.y.data(), n);
    const kriging::SampleSet samples(x, y, lower, upper);
    const auto model = kriging::fit(samples, options.fit, derive_seed(rng_seed, kRefit, it));
    const auto proposal = propose_infill(model, out.best, options.infill, derive_seed(rng_seed, kPropose, it), box);
    record(proposal.latent.vector());
  }
  return out;
}

}  // namespace genspring::ego
