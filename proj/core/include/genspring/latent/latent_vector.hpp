#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "genspring/errors.hpp"

namespace genspring::latent {

inline constexpr std::size_t kDefaultLatentDim = 12;

// A point of the learned design space; the genome searched by the optimizer.
class LatentVector {
 public:
  LatentVector() = default;
  explicit LatentVector(std::vector<double> z) : z_(std::move(z)) { check(); }
  LatentVector(std::initializer_list<double> z) : z_(z) { check(); }

  std::size_t dim() const noexcept { return z_.size(); }
  double operator[](std::size_t i) const { return z_[i]; }
  std::span<const double> values() const noexcept { return z_; }
  const std::vector<double>& vector() const noexcept { return z_; }

  friend bool operator==(const LatentVector&, const LatentVector&) = default;

 private:
  void check() const {
    for (double v : z_) {
      if (!std::isfinite(v)) throw NumericError("latent vector has a non-finite component");
    }
  }

  std::vector<double> z_;
};

}  // namespace genspring::latent
