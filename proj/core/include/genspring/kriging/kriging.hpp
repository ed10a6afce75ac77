#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "genspring/rga/rga.hpp"

namespace genspring::kriging {

// Jitter added to a correlation matrix diagonal, tried in order, before a
// factorization is declared ill-conditioned.
inline constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};
inline constexpr double kSigma2Floor = 1e-12;
inline constexpr double kDuplicateTolerance = 1e-12;

inline constexpr double kLog10ThetaMin = -3.0;
inline constexpr double kLog10ThetaMax = 2.0;
inline constexpr double kLambdaMin = 1e-6;
inline constexpr double kLambdaMax = 1.0;

// Design points (raw coordinates) with responses. Correlations are computed
// on coordinates mapped to [0,1] with the stored per-dimension bounds.
class SampleSet {
 public:
  SampleSet() = default;
  // Bounds default to the bounding box of x.
  SampleSet(Eigen::MatrixXd x, Eigen::VectorXd y);
  SampleSet(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<double> lower, std::vector<double> upper);

  std::size_t n() const noexcept { return static_cast<std::size_t>(x_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(x_.cols()); }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const Eigen::MatrixXd& x_normalized() const noexcept { return u_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

  Eigen::VectorXd normalize(std::span<const double> point) const;
  // Index pair of two rows closer than kDuplicateTolerance (normalized), if any.
  std::optional<std::pair<std::size_t, std::size_t>> find_duplicate() const;

 private:
  void init();

  Eigen::MatrixXd x_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd y_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

struct Hyperparameters {
  std::vector<double> theta;  // positive, one per dimension
  double lambda = 0.0;        // nugget

  // Search genome: log10(theta_k) then log10(lambda).
  std::vector<double> to_genome() const;
  static Hyperparameters from_genome(std::span<const double> genome);
};

// prod_k exp(-theta_k |a_k - b_k|^2)
double correlation(std::span<const double> a, std::span<const double> b, std::span<const double> theta);

// Correlation matrix of the normalized samples (unit diagonal, no nugget).
Eigen::MatrixXd correlation_matrix(const SampleSet& samples, std::span<const double> theta);

// Concentrated negative log-likelihood (n/2) ln sigma2 + (1/2) ln det(R + lambda I).
double neg_log_likelihood(const SampleSet& samples, const Hyperparameters& hp);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;                  // nugget-inclusive MSE estimate
  double reinterpolation_variance = 0.0;  // zero at every sample
};

class KrigingModel {
 public:
  KrigingModel() = default;
  // Factors the system for fixed hyperparameters. Throws ConditioningError.
  KrigingModel(SampleSet samples, Hyperparameters hp);

  const SampleSet& samples() const noexcept { return samples_; }
  const Hyperparameters& hyperparameters() const noexcept { return hp_; }
  double mu_hat() const noexcept { return mu_hat_; }
  double sigma2_hat() const noexcept { return sigma2_hat_; }
  double sigma2_ri_hat() const noexcept { return sigma2_ri_hat_; }
  double neg_log_likelihood() const noexcept { return nll_; }
  double jitter() const noexcept { return jitter_; }
  // Lower Cholesky factor of R + (lambda + jitter) I.
  Eigen::MatrixXd cholesky_factor() const { return chol_.matrixL(); }

  // Points are in raw (unnormalized) coordinates.
  double predict_mean(std::span<const double> x) const;
  double predict_variance(std::span<const double> x) const;
  double reinterpolation_variance(std::span<const double> x) const;
  Prediction predict(std::span<const double> x) const;

  nlohmann::json to_json() const;

 private:
  Eigen::VectorXd correlations(std::span<const double> x) const;

  SampleSet samples_;
  Hyperparameters hp_;
  Eigen::LLT<Eigen::MatrixXd> chol_;    // R + lambda I
  Eigen::LLT<Eigen::MatrixXd> chol_r_;  // R alone (re-interpolation); unused when lambda == 0
  bool shares_factor_ = false;
  double jitter_ = 0.0;
  double mu_hat_ = 0.0;
  double sigma2_hat_ = 0.0;
  double sigma2_ri_hat_ = 0.0;
  double nll_ = 0.0;
  Eigen::VectorXd alpha_;        // (R + lambda I)^-1 (y - 1 mu)
  Eigen::VectorXd l_inv_one_;    // L^-1 1 for the nugget system
  double one_a_one_ = 0.0;       // 1^T (R + lambda I)^-1 1
  Eigen::VectorXd lr_inv_one_;   // L_R^-1 1
  double one_r_one_ = 0.0;       // 1^T R^-1 1
};

struct FitOptions {
  rga::GaConfig ga;                     // bounds are filled in by fit()
  std::optional<double> fixed_lambda;   // search theta only
};

// Maximum-likelihood hyperparameters via the rGA, deterministic per seed.
KrigingModel fit(const SampleSet& samples, const FitOptions& options, std::uint64_t rng_seed);

}  // namespace genspring::kriging
