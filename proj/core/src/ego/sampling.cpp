#include "genspring/ego/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "genspring/errors.hpp"
#include "genspring/random.hpp"

namespace genspring::ego {

Eigen::MatrixXd latin_hypercube(std::size_t n, std::size_t d, std::uint64_t rng_seed) {
  if (n == 0 || d == 0) throw ParameterError("latin hypercube needs n > 0 and d > 0");
  Rng rng(rng_seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::size_t> strata(n);
  for (std::size_t k = 0; k < d; ++k) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          (static_cast<double>(strata[i]) + uniform(rng, 0.0, 1.0)) / static_cast<double>(n);
    }
  }
  return out;
}

}  // namespace genspring::ego
