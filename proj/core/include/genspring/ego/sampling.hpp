#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace genspring::ego {

// n points in [0,1]^d, one per stratum in every dimension, jittered within
// the stratum. Deterministic per seed.
Eigen::MatrixXd latin_hypercube(std::size_t n, std::size_t d, std::uint64_t rng_seed);

}  // namespace genspring::ego
