#include "genspring/latent/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "genspring/errors.hpp"
#include "genspring/random.hpp"

namespace genspring::latent {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw ParameterError(std::string(what) + ": size mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

double kl_divergence(std::span<const double> mu, std::span<const double> log_var) {
  check_pair(mu, log_var, "kl_divergence");
  check_finite(mu, "kl_divergence");
  check_finite(log_var, "kl_divergence");
  double sum = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    // expm1(lv) - lv is exactly the variance term minus one, accurate near lv = 0.
    sum += mu[j] * mu[j] + (std::expm1(log_var[j]) - log_var[j]);
  }
  return 0.5 * sum;
}

double reconstruction_nll(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "reconstruction_nll");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = std::clamp(y[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum -= x[i] * std::log(p) + (1.0 - x[i]) * std::log1p(-p);
  }
  return sum;
}

LatentVector reparameterize(std::span<const double> mu, std::span<const double> log_var,
                            std::uint64_t rng_seed) {
  check_pair(mu, log_var, "reparameterize");
  check_finite(mu, "reparameterize");
  check_finite(log_var, "reparameterize");
  Rng rng(rng_seed);
  std::vector<double> z(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) {
    z[j] = mu[j] + std::exp(0.5 * log_var[j]) * standard_normal(rng);
  }
  return LatentVector(std::move(z));
}

}  // namespace genspring::latent
