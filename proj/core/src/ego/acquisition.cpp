#include "genspring/ego/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "genspring/errors.hpp"
#include "genspring/random.hpp"

namespace genspring::ego {

double standard_normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

double standard_normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

double expected_improvement(double mean, double spread, double y_best) {
  if (!(spread >= kMinSpread)) return 0.0;
  const double gap = y_best - mean;
  const double u = gap / spread;
  return std::max(0.0, gap * standard_normal_cdf(u) + spread * standard_normal_pdf(u));
}

double expected_improvement(const kriging::KrigingModel& model, std::span<const double> x, double y_best) {
  const double mean = model.predict_mean(x);
  const double spread = std::sqrt(std::max(0.0, model.reinterpolation_variance(x)));
  return expected_improvement(mean, spread, y_best);
}

void SearchBox::clamp(std::vector<double>& x) const {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lower[k], upper[k]);
}

SearchBox search_box(const kriging::SampleSet& samples, double margin) {
  SearchBox box;
  for (std::size_t k = 0; k < samples.d(); ++k) {
    const double lo = samples.lower()[k], hi = samples.upper()[k];
    const double pad = margin * (hi - lo);
    box.lower.push_back(lo - pad);
    box.upper.push_back(hi + pad);
  }
  return box;
}

const char* to_string(InfillKind kind) noexcept {
  return kind == InfillKind::kEgoCandidate ? "ego-candidate" : "perturbation";
}

InfillProposal propose_infill(const kriging::KrigingModel& model, double y_best, const rga::GaConfig& ga,
                              std::uint64_t rng_seed) {
  if (model.samples().n() == 0) throw StateError("infill proposal needs a fitted model");
  return propose_infill(model, y_best, ga, rng_seed, search_box(model.samples()));
}

InfillProposal propose_infill(const kriging::KrigingModel& model, double y_best, const rga::GaConfig& ga,
                              std::uint64_t rng_seed, const SearchBox& box) {
  if (model.samples().n() == 0) throw StateError("infill proposal needs a fitted model");
  if (box.lower.size() != model.samples().d()) throw ParameterError("search box dimension mismatch");
  rga::GaConfig config = ga;
  config.lower = box.lower;
  config.upper = box.upper;
  const auto result = rga::minimize(
      [&](std::span<const double> x) { return -expected_improvement(model, x, y_best); }, config, rng_seed);
  InfillProposal p;
  p.latent = latent::LatentVector(result.best.genome);
  p.ei_value = std::max(0.0, -result.best.fitness.value_or(0.0));
  p.kind = InfillKind::kEgoCandidate;
  p.degenerate = !(p.ei_value > 0.0);
  return p;
}

std::vector<InfillProposal> perturbation_infills(const InfillProposal& proposal, std::size_t count, double sigma,
                                                 const SearchBox& box, std::uint64_t rng_seed,
                                                 const kriging::KrigingModel* model, double y_best) {
  if (!(sigma > 0.0)) throw ParameterError("perturbation sigma must be positive");
  const std::size_t d = proposal.latent.dim();
  if (box.lower.size() != d || box.upper.size() != d) throw ParameterError("search box dimension mismatch");
  Rng rng(rng_seed);
  std::vector<InfillProposal> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> z = proposal.latent.vector();
    for (double& v : z) v += sigma * standard_normal(rng);
    box.clamp(z);
    InfillProposal p;
    p.latent = latent::LatentVector(std::move(z));
    p.kind = InfillKind::kPerturbation;
    if (model) p.ei_value = expected_improvement(*model, p.latent.values(), y_best);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace genspring::ego
