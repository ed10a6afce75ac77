#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "genspring/kriging/kriging.hpp"
#include "genspring/latent/latent_vector.hpp"
#include "genspring/rga/rga.hpp"

namespace genspring::ego {

// Below this predictive spread a point is treated as already known.
inline constexpr double kMinSpread = 1e-12;

double standard_normal_cdf(double u);
double standard_normal_pdf(double u);

// E[max(y_best - Y, 0)] for Y ~ N(mean, spread^2).
double expected_improvement(double mean, double spread, double y_best);

// Uses the re-interpolation spread so sampled points carry no improvement
// even for a regressing model.
double expected_improvement(const kriging::KrigingModel& model, std::span<const double> x, double y_best);

// Per-dimension search interval: the observed range widened by margin*range
// on both sides.
struct SearchBox {
  std::vector<double> lower;
  std::vector<double> upper;

  void clamp(std::vector<double>& x) const;
};

inline constexpr double kSearchMargin = 0.1;
SearchBox search_box(const kriging::SampleSet& samples, double margin = kSearchMargin);

enum class InfillKind { kEgoCandidate, kPerturbation };
const char* to_string(InfillKind kind) noexcept;

struct InfillProposal {
  latent::LatentVector latent;
  double ei_value = 0.0;
  InfillKind kind = InfillKind::kEgoCandidate;
  bool degenerate = false;  // EI vanished at every point the search visited
};

// Maximizes EI over the search box with the rGA. The config's bounds are
// replaced by the box.
InfillProposal propose_infill(const kriging::KrigingModel& model, double y_best, const rga::GaConfig& ga,
                              std::uint64_t rng_seed);
InfillProposal propose_infill(const kriging::KrigingModel& model, double y_best, const rga::GaConfig& ga,
                              std::uint64_t rng_seed, const SearchBox& box);

// count Gaussian steps of standard deviation sigma around the proposal,
// clamped to box. EI is evaluated when a model is given.
std::vector<InfillProposal> perturbation_infills(const InfillProposal& proposal, std::size_t count, double sigma,
                                                 const SearchBox& box, std::uint64_t rng_seed,
                                                 const kriging::KrigingModel* model = nullptr, double y_best = 0.0);

}  // namespace genspring::ego
