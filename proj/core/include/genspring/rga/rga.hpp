#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "genspring/random.hpp"

namespace genspring::rga {

struct GaConfig {
  std::size_t population_size = 60;
  std::size_t generations = 100;
  std::size_t tournament_size = 3;
  double crossover_probability = 0.9;
  double blend_alpha = 0.9;
  double mutation_mean = 0.0;
  double mutation_sigma_fraction = 0.01;  // of (upper - lower), per gene
  double mutation_probability = 0.1;      // chance that a child is mutated at all
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  void validate() const;  // throws ParameterError
};

struct Individual {
  std::vector<double> genome;
  std::optional<double> fitness;
};

enum class Draws { kWithReplacement, kDistinct };

// Lowest fitness among k uniform draws.
const Individual& tournament_select(std::span<const Individual> population, std::size_t k, Rng& rng,
                                    Draws draws = Draws::kWithReplacement);

// BLX-alpha per gene; children are clamped when bounds are given.
std::pair<Individual, Individual> blend_crossover(const Individual& p1, const Individual& p2, double alpha,
                                                  Rng& rng, std::span<const double> lower = {},
                                                  std::span<const double> upper = {});

// Adds N(mean, (sigma_fraction * (upper - lower))^2) to every gene, then clamps.
Individual gaussian_mutate(Individual ind, const GaConfig& config, Rng& rng);

struct GenerationStats {
  std::size_t generation = 0;
  double best_ever = 0.0;
  double generation_best = 0.0;
  double generation_mean = 0.0;  // over finite fitnesses; +inf when none
};

struct GaResult {
  Individual best;
  std::vector<GenerationStats> trace;
  std::size_t evaluations = 0;
  bool all_infinite = false;  // objective never returned a finite value
};

using Objective = std::function<double(std::span<const double>)>;

// Generational rGA with elitism of one. NaN objective values count as +inf.
GaResult minimize(const Objective& objective, const GaConfig& config, std::uint64_t rng_seed);

void write_trace_csv(const std::vector<GenerationStats>& trace, const std::filesystem::path& path);

}  // namespace genspring::rga
