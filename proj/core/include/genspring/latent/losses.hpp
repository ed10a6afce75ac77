#pragma once

#include <cstdint>
#include <span>

#include "genspring/latent/latent_vector.hpp"

namespace genspring::latent {

// Clamp applied to decoder probabilities before taking logs.
inline constexpr double kProbabilityClamp = 1e-7;

struct VaeLossBreakdown {
  double kl = 0.0;
  double reconstruction_nll = 0.0;
  double total = 0.0;
};

// KL( N(mu, diag exp(log_var)) || N(0, I) ) = 1/2 sum(mu^2 + s^2 - log s^2 - 1).
double kl_divergence(std::span<const double> mu, std::span<const double> log_var);

// Bernoulli negative log-likelihood -sum(x log y + (1-x) log(1-y)), y clamped.
double reconstruction_nll(std::span<const double> x, std::span<const double> y);

// z = mu + exp(log_var / 2) * eps, eps ~ N(0, I) from a generator seeded with rng_seed.
LatentVector reparameterize(std::span<const double> mu, std::span<const double> log_var,
                            std::uint64_t rng_seed);

}  // namespace genspring::latent
