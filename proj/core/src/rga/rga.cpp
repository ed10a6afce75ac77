#include "genspring/rga/rga.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "genspring/errors.hpp"

namespace genspring::rga {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void clamp_to(std::vector<double>& genome, std::span<const double> lower, std::span<const double> upper) {
  if (lower.empty()) return;
  for (std::size_t i = 0; i < genome.size(); ++i) genome[i] = std::clamp(genome[i], lower[i], upper[i]);
}

double evaluate(const Objective& objective, const std::vector<double>& genome) {
  const double v = objective(genome);
  return std::isnan(v) ? kInf : v;
}

}  // namespace

void GaConfig::validate() const {
  if (population_size < 1) throw ParameterError("population size must be positive");
  if (tournament_size < 2) throw ParameterError("tournament size must be at least 2");
  if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0)) {
    throw ParameterError("crossover probability must lie in [0,1]");
  }
  if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0)) {
    throw ParameterError("mutation probability must lie in [0,1]");
  }
  if (!(blend_alpha > 0.0)) throw ParameterError("blend alpha must be positive");
  if (!(mutation_sigma_fraction >= 0.0)) throw ParameterError("mutation sigma fraction must be non-negative");
  if (lower.empty() || lower.size() != upper.size()) throw ParameterError("bounds must be non-empty and equal length");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) throw ParameterError("each lower bound must be below its upper bound");
  }
}

const Individual& tournament_select(std::span<const Individual> population, std::size_t k, Rng& rng,
                                    Draws draws) {
  if (population.empty()) throw ParameterError("tournament over an empty population");
  for (const auto& ind : population) {
    if (!ind.fitness) throw StateError("tournament over an unevaluated individual");
  }
  std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
  std::size_t best = pick(rng);
  if (draws == Draws::kDistinct) {
    if (k > population.size()) throw ParameterError("more distinct draws than individuals");
    std::vector<std::size_t> idx(population.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Partial Fisher-Yates: the first k slots hold distinct uniform picks.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> rest(i, idx.size() - 1);
      std::swap(idx[i], idx[rest(rng)]);
    }
    best = idx[0];
    for (std::size_t i = 1; i < k; ++i) {
      if (*population[idx[i]].fitness < *population[best].fitness) best = idx[i];
    }
    return population[best];
  }
  for (std::size_t i = 1; i < k; ++i) {
    const std::size_t c = pick(rng);
    if (*population[c].fitness < *population[best].fitness) best = c;
  }
  return population[best];
}

std::pair<Individual, Individual> blend_crossover(const Individual& p1, const Individual& p2, double alpha,
                                                  Rng& rng, std::span<const double> lower,
                                                  std::span<const double> upper) {
  if (p1.genome.size() != p2.genome.size()) throw ParameterError("parents have different genome lengths");
  if (lower.size() != upper.size() || (!lower.empty() && lower.size() != p1.genome.size())) {
    throw ParameterError("crossover bounds do not match the genome length");
  }
  Individual c1{p1.genome, std::nullopt};
  Individual c2{p2.genome, std::nullopt};
  for (std::size_t i = 0; i < p1.genome.size(); ++i) {
    const double lo = std::min(p1.genome[i], p2.genome[i]);
    const double hi = std::max(p1.genome[i], p2.genome[i]);
    const double range = hi - lo;
    if (range == 0.0) continue;
    std::uniform_real_distribution<double> draw(lo - alpha * range, hi + alpha * range);
    c1.genome[i] = draw(rng);
    c2.genome[i] = draw(rng);
  }
  clamp_to(c1.genome, lower, upper);
  clamp_to(c2.genome, lower, upper);
  return {std::move(c1), std::move(c2)};
}

Individual gaussian_mutate(Individual ind, const GaConfig& config, Rng& rng) {
  if (ind.genome.size() != config.lower.size()) throw ParameterError("genome length does not match bounds");
  for (std::size_t i = 0; i < ind.genome.size(); ++i) {
    const double sigma = config.mutation_sigma_fraction * (config.upper[i] - config.lower[i]);
    if (sigma > 0.0) {
      ind.genome[i] += config.mutation_mean + sigma * standard_normal(rng);
    } else {
      ind.genome[i] += config.mutation_mean;
    }
  }
  clamp_to(ind.genome, config.lower, config.upper);
  ind.fitness.reset();
  return ind;
}

GaResult minimize(const Objective& objective, const GaConfig& config, std::uint64_t rng_seed) {
  config.validate();
  Rng rng(rng_seed);
  const std::size_t dim = config.dim();
  GaResult result;

  std::vector<Individual> population(config.population_size);
  for (auto& ind : population) {
    ind.genome.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) ind.genome[i] = uniform(rng, config.lower[i], config.upper[i]);
  }

  auto record_generation = [&](std::size_t generation) {
    GenerationStats stats;
    stats.generation = generation;
    const Individual* gen_best = &population.front();
    double sum = 0.0;
    std::size_t finite = 0;
    for (const auto& ind : population) {
      if (*ind.fitness < *gen_best->fitness) gen_best = &ind;
      if (std::isfinite(*ind.fitness)) {
        sum += *ind.fitness;
        ++finite;
      }
    }
    if (!result.best.fitness || *gen_best->fitness < *result.best.fitness) result.best = *gen_best;
    stats.best_ever = *result.best.fitness;
    stats.generation_best = *gen_best->fitness;
    stats.generation_mean = finite > 0 ? sum / static_cast<double>(finite) : kInf;
    result.trace.push_back(stats);
  };

  for (auto& ind : population) {
    ind.fitness = evaluate(objective, ind.genome);
    ++result.evaluations;
  }
  record_generation(0);

  std::vector<Individual> offspring;
  offspring.reserve(config.population_size + 1);
  for (std::size_t generation = 1; generation <= config.generations; ++generation) {
    offspring.clear();
    offspring.push_back(result.best);
    while (offspring.size() < config.population_size) {
      const Individual& a = tournament_select(population, config.tournament_size, rng);
      const Individual& b = tournament_select(population, config.tournament_size, rng);
      Individual c1 = a;
      Individual c2 = b;
      if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.crossover_probability) {
        std::tie(c1, c2) = blend_crossover(a, b, config.blend_alpha, rng, config.lower, config.upper);
      }
      for (Individual* child : {&c1, &c2}) {
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.mutation_probability) {
          *child = gaussian_mutate(std::move(*child), config, rng);
        }
        if (offspring.size() < config.population_size) offspring.push_back(std::move(*child));
      }
    }
    for (auto& ind : offspring) {
      if (!ind.fitness) {
        ind.fitness = evaluate(objective, ind.genome);
        ++result.evaluations;
      }
    }
    population.swap(offspring);
    record_generation(generation);
  }
  result.all_infinite = !std::isfinite(*result.best.fitness);
  return result;
}

void write_trace_csv(const std::vector<GenerationStats>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out.precision(17);
  out << "generation,best_ever,generation_best,generation_mean\n";
  for (const auto& s : trace) {
    out << s.generation << ',' << s.best_ever << ',' << s.generation_best << ',' << s.generation_mean << '\n';
  }
}

}  // namespace genspring::rga
