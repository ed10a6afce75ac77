#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "genspring/designgen/bitmap.hpp"
#include "genspring/latent/latent_vector.hpp"
#include "genspring/latent/losses.hpp"

namespace genspring::latent {

// Dense encoder/decoder weights:
//   x -> tanh(enc) -> (mu, log_var)      z -> tanh(dec) -> sigmoid(out)
struct VaeParams {
  Eigen::MatrixXd enc_w;
  Eigen::VectorXd enc_b;
  Eigen::MatrixXd mu_w;
  Eigen::VectorXd mu_b;
  Eigen::MatrixXd logvar_w;
  Eigen::VectorXd logvar_b;
  Eigen::MatrixXd dec_w;
  Eigen::VectorXd dec_b;
  Eigen::MatrixXd out_w;
  Eigen::VectorXd out_b;

  // Visits (name, tensor) in the fixed checkpoint order.
  template <typename F>
  void for_each(F&& f) { visit(*this, f); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, f); }

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  friend bool operator==(const VaeParams&, const VaeParams&);

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f("enc_w", self.enc_w); f("enc_b", self.enc_b);
    f("mu_w", self.mu_w); f("mu_b", self.mu_b);
    f("logvar_w", self.logvar_w); f("logvar_b", self.logvar_b);
    f("dec_w", self.dec_w); f("dec_b", self.dec_b);
    f("out_w", self.out_w); f("out_b", self.out_b);
  }
};

struct Posterior {
  std::vector<double> mu;
  std::vector<double> log_var;
};

class VaeModel {
 public:
  VaeModel() = default;

  // Xavier-uniform weights, zero biases, deterministic per seed.
  static VaeModel create(std::size_t input_size, std::size_t hidden, std::size_t latent_dim,
                         std::uint64_t seed);

  std::size_t input_size() const noexcept { return static_cast<std::size_t>(params_.enc_w.cols()); }
  std::size_t hidden() const noexcept { return static_cast<std::size_t>(params_.enc_w.rows()); }
  std::size_t latent_dim() const noexcept { return static_cast<std::size_t>(params_.mu_w.rows()); }

  const VaeParams& params() const noexcept { return params_; }
  VaeParams& params() noexcept { return params_; }

  Posterior encode(std::span<const double> x) const;
  Posterior encode(const designgen::DesignBitmap& x) const;

  // Output probabilities in (0,1).
  std::vector<double> decode_values(std::span<const double> z) const;
  designgen::DesignBitmap decode(const LatentVector& z) const;

  // Loss of one sample with a fixed reparameterization noise vector.
  VaeLossBreakdown loss(std::span<const double> x, std::span<const double> eps) const;

  // Summed loss over the columns of `x` (input_size x B) with matching noise
  // columns (latent_dim x B); accumulates the exact gradient into `grad`.
  VaeLossBreakdown loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps,
                                     VaeParams& grad) const;

  VaeParams zero_like() const;

  void save(const std::filesystem::path& path) const;
  static VaeModel load(const std::filesystem::path& path);

  friend bool operator==(const VaeModel& a, const VaeModel& b) { return a.params_ == b.params_; }

 private:
  VaeParams params_;
};

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  std::size_t hidden = 256;
  std::size_t latent_dim = kDefaultLatentDim;
  double holdout_fraction = 0.1;
};

struct TrainResult {
  VaeModel model;
  std::size_t holdout_count = 0;
  double initial_holdout_loss = 0.0;  // mean total loss, z = mu
  double final_holdout_loss = 0.0;
  std::vector<double> epoch_train_loss;  // mean total loss per sample, per epoch
};

// Minibatch SGD on the summed KL + reconstruction cost. The last
// holdout_fraction of a seeded permutation is held out when the corpus has at
// least 10 samples; otherwise everything is used for training.
TrainResult train(const std::vector<std::vector<double>>& corpus, const TrainOptions& options);
TrainResult train(const std::vector<designgen::DesignBitmap>& corpus, const TrainOptions& options);

// Mean total loss with z = mu over the given samples.
double mean_loss(const VaeModel& model, const std::vector<std::vector<double>>& samples);

}  // namespace genspring::latent
