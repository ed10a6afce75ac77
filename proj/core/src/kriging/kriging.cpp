#include "genspring/kriging/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "genspring/errors.hpp"

namespace genspring::kriging {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& base, double nugget, bool has_duplicates,
                                   double& jitter_used) {
  if (nugget < kDuplicateTolerance && has_duplicates) {
    throw ConditioningError("duplicate samples make the correlation matrix singular");
  }
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd a = base;
    a.diagonal().array() += nugget + jitter;
    llt.compute(a);
    if (llt.info() == Eigen::Success) {
      const auto diag = llt.matrixLLT().diagonal();
      if (diag.allFinite() && diag.minCoeff() > 0.0) {
        jitter_used = jitter;
        return llt;
      }
    }
  }
  throw ConditioningError("correlation matrix is not positive definite after jitter escalation");
}

struct Concentrated {
  double mu = 0.0;
  double sigma2 = 0.0;
  double nll = 0.0;
};

Concentrated concentrate(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y) {
  const auto n = static_cast<double>(y.size());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(y.size());
  const Eigen::VectorXd a_one = llt.solve(ones);
  const Eigen::VectorXd a_y = llt.solve(y);
  Concentrated c;
  c.mu = a_y.sum() / a_one.sum();
  const Eigen::VectorXd resid = y - ones * c.mu;
  const Eigen::VectorXd l_resid = llt.matrixL().solve(resid);
  c.sigma2 = std::max(l_resid.squaredNorm() / n, kSigma2Floor);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  c.nll = 0.5 * n * std::log(c.sigma2) + 0.5 * log_det;
  if (!std::isfinite(c.nll) || !std::isfinite(c.mu)) {
    throw ConditioningError("likelihood is not finite for these hyperparameters");
  }
  return c;
}

// Pairwise squared coordinate differences, reused across likelihood calls.
class LikelihoodWorkspace {
 public:
  explicit LikelihoodWorkspace(const SampleSet& samples)
      : samples_(samples), has_duplicates_(samples.find_duplicate().has_value()) {
    const std::size_t n = samples.n();
    const std::size_t d = samples.d();
    pairs_.resize(static_cast<Eigen::Index>(n * (n - 1) / 2), static_cast<Eigen::Index>(d));
    const Eigen::MatrixXd& u = samples.x_normalized();
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < u.rows(); ++j, ++row) {
        pairs_.row(row) = (u.row(i) - u.row(j)).array().square();
      }
    }
  }

  double evaluate(const Hyperparameters& hp) const {
    const auto n = static_cast<Eigen::Index>(samples_.n());
    const Eigen::Map<const Eigen::VectorXd> theta(hp.theta.data(), static_cast<Eigen::Index>(hp.theta.size()));
    const Eigen::VectorXd corr = (-(pairs_ * theta)).array().exp().matrix();
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j, ++row) r(j, i) = corr(row);  // LLT reads the lower triangle
    }
    double jitter = 0.0;
    const auto llt = factor(r, hp.lambda, has_duplicates_, jitter);
    return concentrate(llt, samples_.y()).nll;
  }

 private:
  const SampleSet& samples_;
  bool has_duplicates_;
  Eigen::MatrixXd pairs_;
};

void check_hyperparameters(const SampleSet& samples, const Hyperparameters& hp) {
  if (hp.theta.size() != samples.d()) throw ParameterError("theta length does not match the sample dimension");
  for (double t : hp.theta) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("theta entries must be positive and finite");
  }
  if (!(hp.lambda >= 0.0) || !std::isfinite(hp.lambda)) throw ParameterError("lambda must be non-negative");
}

}  // namespace

SampleSet::SampleSet(Eigen::MatrixXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() > 0) {
    for (Eigen::Index k = 0; k < x_.cols(); ++k) {
      lower_.push_back(x_.col(k).minCoeff());
      upper_.push_back(x_.col(k).maxCoeff());
    }
  }
  init();
}

SampleSet::SampleSet(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<double> lower, std::vector<double> upper)
    : x_(std::move(x)), y_(std::move(y)), lower_(std::move(lower)), upper_(std::move(upper)) {
  init();
}

void SampleSet::init() {
  if (x_.rows() < 2) throw ParameterError("a sample set needs at least two points");
  if (x_.cols() < 1) throw ParameterError("sample points need at least one dimension");
  if (y_.size() != x_.rows()) throw ParameterError("response count does not match the number of points");
  if (!x_.allFinite() || !y_.allFinite()) throw NumericError("sample set contains non-finite values");
  if (lower_.size() != static_cast<std::size_t>(x_.cols()) || upper_.size() != lower_.size()) {
    throw ParameterError("normalization bounds do not match the sample dimension");
  }
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    if (!(upper_[k] >= lower_[k])) throw ParameterError("normalization upper bound below lower bound");
  }
  u_.resize(x_.rows(), x_.cols());
  std::vector<double> row(static_cast<std::size_t>(x_.cols()));
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    for (Eigen::Index k = 0; k < x_.cols(); ++k) row[static_cast<std::size_t>(k)] = x_(i, k);
    u_.row(i) = normalize(row).transpose();
  }
}

Eigen::VectorXd SampleSet::normalize(std::span<const double> point) const {
  if (point.size() != lower_.size()) throw ParameterError("point dimension does not match the sample set");
  Eigen::VectorXd out(static_cast<Eigen::Index>(point.size()));
  for (std::size_t k = 0; k < point.size(); ++k) {
    const double range = upper_[k] - lower_[k];
    out(static_cast<Eigen::Index>(k)) = range > 0.0 ? (point[k] - lower_[k]) / range : point[k] - lower_[k];
  }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> SampleSet::find_duplicate() const {
  for (Eigen::Index i = 0; i < u_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < u_.rows(); ++j) {
      if ((u_.row(i) - u_.row(j)).norm() < kDuplicateTolerance) {
        return std::pair{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
      }
    }
  }
  return std::nullopt;
}


std::vector<double> Hyperparameters::to_genome() const {
  std::vector<double> genome;
  genome.reserve(theta.size() + 1);
  for (double t : theta) genome.push_back(std::log10(t));
  genome.push_back(std::log10(lambda));
  return genome;
}

Hyperparameters Hyperparameters::from_genome(std::span<const double> genome) {
  if (genome.size() < 2) throw ParameterError("hyperparameter genome needs theta entries and lambda");
  Hyperparameters hp;
  for (std::size_t k = 0; k + 1 < genome.size(); ++k) hp.theta.push_back(std::pow(10.0, genome[k]));
  hp.lambda = std::pow(10.0, genome.back());
  return hp;
}

double correlation(std::span<const double> a, std::span<const double> b, std::span<const double> theta) {
  if (a.size() != b.size() || a.size() != theta.size()) throw ParameterError("correlation: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += theta[k] * diff * diff;
  }
  return std::exp(-s);
}

Eigen::MatrixXd correlation_matrix(const SampleSet& samples, std::span<const double> theta) {
  if (theta.size() != samples.d()) throw ParameterError("theta length does not match the sample dimension");
  const Eigen::MatrixXd& u = samples.x_normalized();
  const Eigen::Index n = u.rows();
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < u.cols(); ++k) {
        const double diff = u(i, k) - u(j, k);
        s += theta[static_cast<std::size_t>(k)] * diff * diff;
      }
      r(i, j) = r(j, i) = std::exp(-s);
    }
  }
  return r;
}

double neg_log_likelihood(const SampleSet& samples, const Hyperparameters& hp) {
  check_hyperparameters(samples, hp);
  return LikelihoodWorkspace(samples).evaluate(hp);
}

KrigingModel::KrigingModel(SampleSet samples, Hyperparameters hp) : samples_(std::move(samples)), hp_(std::move(hp)) {
  check_hyperparameters(samples_, hp_);
  const bool duplicates = samples_.find_duplicate().has_value();
  const Eigen::MatrixXd r = correlation_matrix(samples_, hp_.theta);
  chol_ = factor(r, hp_.lambda, duplicates, jitter_);
  const Concentrated c = concentrate(chol_, samples_.y());
  mu_hat_ = c.mu;
  sigma2_hat_ = c.sigma2;
  nll_ = c.nll;

  const auto n = static_cast<Eigen::Index>(samples_.n());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  alpha_ = chol_.solve(samples_.y() - ones * mu_hat_);
  l_inv_one_ = chol_.matrixL().solve(ones);
  one_a_one_ = l_inv_one_.squaredNorm();

  sigma2_ri_hat_ = std::max(0.0, alpha_.dot(r * alpha_) / static_cast<double>(n));

  shares_factor_ = hp_.lambda == 0.0;
  if (!shares_factor_) {
    double jitter_r = 0.0;
    chol_r_ = factor(r, 0.0, duplicates, jitter_r);
  }
  const auto& llt_r = shares_factor_ ? chol_ : chol_r_;
  lr_inv_one_ = llt_r.matrixL().solve(ones);
  one_r_one_ = lr_inv_one_.squaredNorm();
}

Eigen::VectorXd KrigingModel::correlations(std::span<const double> x) const {
  const Eigen::VectorXd u = samples_.normalize(x);
  const Eigen::MatrixXd& xs = samples_.x_normalized();
  const Eigen::Map<const Eigen::VectorXd> theta(hp_.theta.data(), static_cast<Eigen::Index>(hp_.theta.size()));
  const Eigen::VectorXd dist = (xs.rowwise() - u.transpose()).array().square().matrix() * theta;
  return (-dist.array()).exp().matrix();
}

Prediction KrigingModel::predict(std::span<const double> x) const {
  const Eigen::VectorXd r = correlations(x);
  Prediction p;
  p.mean = mu_hat_ + r.dot(alpha_);

  const Eigen::VectorXd w = chol_.matrixL().solve(r);
  const double one_term = 1.0 - l_inv_one_.dot(w);
  p.variance =
      std::max(0.0, sigma2_hat_ * (1.0 + hp_.lambda - w.squaredNorm() + one_term * one_term / one_a_one_));

  const auto& llt_r = shares_factor_ ? chol_ : chol_r_;
  const Eigen::VectorXd wr = shares_factor_ ? w : Eigen::VectorXd(llt_r.matrixL().solve(r));
  const double one_term_r = 1.0 - lr_inv_one_.dot(wr);
  p.reinterpolation_variance =
      std::max(0.0, sigma2_ri_hat_ * (1.0 - wr.squaredNorm() + one_term_r * one_term_r / one_r_one_));
  return p;
}

double KrigingModel::predict_mean(std::span<const double> x) const {
  return mu_hat_ + correlations(x).dot(alpha_);
}

double KrigingModel::predict_variance(std::span<const double> x) const { return predict(x).variance; }

double KrigingModel::reinterpolation_variance(std::span<const double> x) const {
  return predict(x).reinterpolation_variance;
}

nlohmann::json KrigingModel::to_json() const {
  nlohmann::json j;
  j["schema"] = "genspring.kriging/1";
  const auto& x = samples_.x();
  auto& rows = j["X"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index k = 0; k < x.cols(); ++k) row[static_cast<std::size_t>(k)] = x(i, k);
    rows.push_back(row);
  }
  j["y"] = std::vector<double>(samples_.y().data(), samples_.y().data() + samples_.y().size());
  j["lower"] = samples_.lower();
  j["upper"] = samples_.upper();
  j["theta"] = hp_.theta;
  j["lambda"] = hp_.lambda;
  j["mu_hat"] = mu_hat_;
  j["sigma2_hat"] = sigma2_hat_;
  j["sigma2_ri_hat"] = sigma2_ri_hat_;
  j["neg_log_likelihood"] = nll_;
  j["jitter"] = jitter_;
  return j;
}

KrigingModel fit(const SampleSet& samples, const FitOptions& options, std::uint64_t rng_seed) {
  const std::size_t d = samples.d();
  rga::GaConfig ga = options.ga;
  ga.lower.assign(d, kLog10ThetaMin);
  ga.upper.assign(d, kLog10ThetaMax);
  if (!options.fixed_lambda) {
    ga.lower.push_back(std::log10(kLambdaMin));
    ga.upper.push_back(std::log10(kLambdaMax));
  }
  const LikelihoodWorkspace workspace(samples);
  auto decode = [&](std::span<const double> genome) {
    Hyperparameters hp;
    hp.theta.resize(d);
    for (std::size_t k = 0; k < d; ++k) hp.theta[k] = std::pow(10.0, genome[k]);
    hp.lambda = options.fixed_lambda ? *options.fixed_lambda : std::pow(10.0, genome[d]);
    return hp;
  };
  const auto objective = [&](std::span<const double> genome) {
    try {
      return workspace.evaluate(decode(genome));
    } catch (const ConditioningError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const rga::GaResult result = rga::minimize(objective, ga, rng_seed);
  if (result.all_infinite) {
    throw ConditioningError("no hyperparameters in the search box give a factorable correlation matrix");
  }
  return KrigingModel(samples, decode(result.best.genome));
}

}  // namespace genspring::kriging
