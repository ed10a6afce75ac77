#include "genspring/latent/vae.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "genspring/errors.hpp"
#include "genspring/random.hpp"

namespace genspring::latent {

namespace {

constexpr char kCheckpointMagic[8] = {'G', 'S', 'P', 'R', 'V', 'A', 'E', '1'};
constexpr const char* kCheckpointSchema = "genspring.vae/1";

template <typename Tensor>
void xavier(Tensor& t, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = uniform(rng, -limit, limit);
  }
}

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& a) { return 1.0 / (1.0 + (-a).exp()); }

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ParameterError(std::string(what) + ": expected " + std::to_string(want) + " values, got " +
                         std::to_string(got));
  }
}

struct Forward {
  Eigen::MatrixXd h1, mu, log_var, sd, z, h3, y;
};

Forward forward(const VaeParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps) {
  Forward f;
  f.h1 = ((p.enc_w * x).colwise() + p.enc_b).array().tanh().matrix();
  f.mu = (p.mu_w * f.h1).colwise() + p.mu_b;
  f.log_var = (p.logvar_w * f.h1).colwise() + p.logvar_b;
  f.sd = (0.5 * f.log_var.array()).exp().matrix();
  f.z = f.mu + f.sd.cwiseProduct(eps);
  f.h3 = ((p.dec_w * f.z).colwise() + p.dec_b).array().tanh().matrix();
  f.y = sigmoid(((p.out_w * f.h3).colwise() + p.out_b).array()).matrix();
  return f;
}

VaeLossBreakdown sum_losses(const Forward& f, const Eigen::MatrixXd& x) {
  VaeLossBreakdown loss;
  for (Eigen::Index b = 0; b < x.cols(); ++b) {
    loss.kl += kl_divergence({f.mu.col(b).data(), static_cast<std::size_t>(f.mu.rows())},
                             {f.log_var.col(b).data(), static_cast<std::size_t>(f.log_var.rows())});
    loss.reconstruction_nll += reconstruction_nll({x.col(b).data(), static_cast<std::size_t>(x.rows())},
                                                  {f.y.col(b).data(), static_cast<std::size_t>(f.y.rows())});
  }
  loss.total = loss.kl + loss.reconstruction_nll;
  return loss;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& samples, std::span<const std::size_t> idx,
                          std::size_t rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t b = 0; b < idx.size(); ++b) {
    m.col(static_cast<Eigen::Index>(b)) = Eigen::Map<const Eigen::VectorXd>(samples[idx[b]].data(),
                                                                           static_cast<Eigen::Index>(rows));
  }
  return m;
}

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

}  // namespace

std::size_t VaeParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&n](const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

std::vector<double> VaeParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for_each([&flat](const char*, const auto& t) { flat.insert(flat.end(), t.data(), t.data() + t.size()); });
  return flat;
}

void VaeParams::assign(std::span<const double> flat) {
  require_size(flat.size(), parameter_count(), "VaeParams::assign");
  std::size_t offset = 0;
  for_each([&](const char*, auto& t) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.data());
    offset += static_cast<std::size_t>(t.size());
  });
}

bool operator==(const VaeParams& a, const VaeParams& b) {
  if (a.parameter_count() != b.parameter_count()) return false;
  const auto fa = a.flatten();
  const auto fb = b.flatten();
  return std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0 &&
         a.enc_w.rows() == b.enc_w.rows() && a.mu_w.rows() == b.mu_w.rows();
}

VaeModel VaeModel::create(std::size_t input_size, std::size_t hidden, std::size_t latent_dim,
                          std::uint64_t seed) {
  if (input_size == 0 || hidden == 0 || latent_dim == 0) throw ParameterError("VAE layer sizes must be positive");
  const auto n = static_cast<Eigen::Index>(input_size);
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto d = static_cast<Eigen::Index>(latent_dim);
  VaeModel model;
  VaeParams& p = model.params_;
  p.enc_w.resize(h, n);
  p.enc_b = Eigen::VectorXd::Zero(h);
  p.mu_w.resize(d, h);
  p.mu_b = Eigen::VectorXd::Zero(d);
  p.logvar_w.resize(d, h);
  p.logvar_b = Eigen::VectorXd::Zero(d);
  p.dec_w.resize(h, d);
  p.dec_b = Eigen::VectorXd::Zero(h);
  p.out_w.resize(n, h);
  p.out_b = Eigen::VectorXd::Zero(n);
  Rng rng(seed);
  xavier(p.enc_w, rng);
  xavier(p.mu_w, rng);
  xavier(p.logvar_w, rng);
  xavier(p.dec_w, rng);
  xavier(p.out_w, rng);
  return model;
}

VaeParams VaeModel::zero_like() const {
  VaeParams g = params_;
  g.for_each([](const char*, auto& t) { t.setZero(); });
  return g;
}

Posterior VaeModel::encode(std::span<const double> x) const {
  require_size(x.size(), input_size(), "encode");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd h1 = (params_.enc_w * xv + params_.enc_b).array().tanh().matrix();
  const Eigen::VectorXd mu = params_.mu_w * h1 + params_.mu_b;
  const Eigen::VectorXd lv = params_.logvar_w * h1 + params_.logvar_b;
  Posterior post{{mu.data(), mu.data() + mu.size()}, {lv.data(), lv.data() + lv.size()}};
  for (double v : post.mu) {
    if (!std::isfinite(v)) throw NumericError("encoder produced a non-finite mean");
  }
  return post;
}

Posterior VaeModel::encode(const designgen::DesignBitmap& x) const { return encode(x.values()); }

std::vector<double> VaeModel::decode_values(std::span<const double> z) const {
  require_size(z.size(), latent_dim(), "decode");
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  const Eigen::VectorXd h3 = (params_.dec_w * zv + params_.dec_b).array().tanh().matrix();
  const Eigen::ArrayXd logits = (params_.out_w * h3 + params_.out_b).array();
  const Eigen::ArrayXd y = 1.0 / (1.0 + (-logits).exp());
  return {y.data(), y.data() + y.size()};
}

designgen::DesignBitmap VaeModel::decode(const LatentVector& z) const {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(input_size()))));
  if (side * side != input_size()) throw ParameterError("VAE input is not a square bitmap");
  return designgen::DesignBitmap(side, decode_values(z.values()));
}

VaeLossBreakdown VaeModel::loss(std::span<const double> x, std::span<const double> eps) const {
  require_size(x.size(), input_size(), "loss");
  require_size(eps.size(), latent_dim(), "loss noise");
  const Eigen::MatrixXd xm = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd em = Eigen::Map<const Eigen::VectorXd>(eps.data(), static_cast<Eigen::Index>(eps.size()));
  return sum_losses(forward(params_, xm, em), xm);
}

VaeLossBreakdown VaeModel::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps,
                                             VaeParams& grad) const {
  require_size(static_cast<std::size_t>(x.rows()), input_size(), "loss_and_gradient");
  require_size(static_cast<std::size_t>(eps.rows()), latent_dim(), "loss_and_gradient noise");
  if (x.cols() != eps.cols()) throw ParameterError("loss_and_gradient: batch size mismatch");
  const VaeParams& p = params_;
  const Forward f = forward(p, x, eps);

  // d(BCE)/d(logit) = y - x, except where the log clamp is active.
  Eigen::MatrixXd d_logit = f.y - x;
  for (Eigen::Index i = 0; i < d_logit.size(); ++i) {
    const double y = f.y.data()[i];
    if (y < kProbabilityClamp || y > 1.0 - kProbabilityClamp) d_logit.data()[i] = 0.0;
  }
  grad.out_w.noalias() += d_logit * f.h3.transpose();
  grad.out_b += d_logit.rowwise().sum();

  const Eigen::MatrixXd d_a3 =
      (p.out_w.transpose() * d_logit).cwiseProduct((1.0 - f.h3.array().square()).matrix());
  grad.dec_w.noalias() += d_a3 * f.z.transpose();
  grad.dec_b += d_a3.rowwise().sum();

  const Eigen::MatrixXd d_z = p.dec_w.transpose() * d_a3;
  const Eigen::MatrixXd d_mu = d_z + f.mu;
  const Eigen::MatrixXd d_lv =
      (0.5 * d_z.array() * eps.array() * f.sd.array() + 0.5 * (f.log_var.array().exp() - 1.0)).matrix();
  grad.mu_w.noalias() += d_mu * f.h1.transpose();
  grad.mu_b += d_mu.rowwise().sum();
  grad.logvar_w.noalias() += d_lv * f.h1.transpose();
  grad.logvar_b += d_lv.rowwise().sum();

  const Eigen::MatrixXd d_a1 = (p.mu_w.transpose() * d_mu + p.logvar_w.transpose() * d_lv)
                                   .cwiseProduct((1.0 - f.h1.array().square()).matrix());
  grad.enc_w.noalias() += d_a1 * x.transpose();
  grad.enc_b += d_a1.rowwise().sum();

  return sum_losses(f, x);
}

void VaeModel::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["schema"] = kCheckpointSchema;
  header["input_size"] = input_size();
  header["hidden"] = hidden();
  header["latent_dim"] = latent_dim();
  header["activation"] = "tanh";
  header["layout"] = "column-major float64 little-endian";
  auto& tensors = header["tensors"] = nlohmann::json::array();
  params_.for_each([&tensors](const char* name, const auto& t) {
    tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write checkpoint " + path.string());
  put_bytes(out, kCheckpointMagic, sizeof kCheckpointMagic);
  const std::uint64_t len = to_little_endian(text.size());
  put_bytes(out, &len, sizeof len);
  put_bytes(out, text.data(), text.size());
  for (double v : params_.flatten()) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    put_bytes(out, &bits, sizeof bits);
  }
  if (!out) throw ParameterError("failed writing checkpoint " + path.string());
}

VaeModel VaeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw ParameterError(path.string() + " is not a genspring VAE checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  len = to_little_endian(len);
  if (!in || len > (1u << 24)) throw ParameterError("corrupt checkpoint header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (header.value("schema", "") != kCheckpointSchema) throw ParameterError("unsupported checkpoint schema");
  VaeModel model = create(header.at("input_size").get<std::size_t>(), header.at("hidden").get<std::size_t>(),
                          header.at("latent_dim").get<std::size_t>(), 0);
  std::vector<double> flat(model.params_.parameter_count());
  for (double& v : flat) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    v = std::bit_cast<double>(to_little_endian(bits));
  }
  if (!in) throw ParameterError("truncated checkpoint payload");
  model.params_.assign(flat);
  return model;
}

double mean_loss(const VaeModel& model, const std::vector<std::vector<double>>& samples) {
  if (samples.empty()) return 0.0;
  const std::vector<double> zero(model.latent_dim(), 0.0);
  double total = 0.0;
  for (const auto& x : samples) total += model.loss(x, zero).total;
  return total / static_cast<double>(samples.size());
}

TrainResult train(const std::vector<std::vector<double>>& corpus, const TrainOptions& options) {
  if (corpus.empty()) throw ParameterError("cannot train a VAE on an empty corpus");
  if (options.batch_size == 0) throw ParameterError("batch size must be positive");
  const std::size_t n = corpus.front().size();
  for (const auto& x : corpus) require_size(x.size(), n, "training corpus bitmap");

  TrainResult result;
  result.model = VaeModel::create(n, options.hidden, options.latent_dim, derive_seed(options.seed, 1));
  Rng rng(derive_seed(options.seed, 2));

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  if (corpus.size() >= 10) {
    result.holdout_count = static_cast<std::size_t>(std::floor(options.holdout_fraction * corpus.size()));
  }
  const std::vector<std::size_t> holdout(order.end() - static_cast<std::ptrdiff_t>(result.holdout_count),
                                         order.end());
  std::vector<std::size_t> training(order.begin(), order.end() - static_cast<std::ptrdiff_t>(result.holdout_count));

  std::vector<std::vector<double>> holdout_samples;
  for (std::size_t i : holdout) holdout_samples.push_back(corpus[i]);
  result.initial_holdout_loss = mean_loss(result.model, holdout_samples);

  const auto d = static_cast<Eigen::Index>(options.latent_dim);
  VaeParams grad = result.model.zero_like();
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(training.begin(), training.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < training.size(); start += options.batch_size) {
      const std::size_t count = std::min(options.batch_size, training.size() - start);
      const std::span<const std::size_t> idx(training.data() + start, count);
      const Eigen::MatrixXd x = to_matrix(corpus, idx, n);
      Eigen::MatrixXd eps(d, static_cast<Eigen::Index>(count));
      for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = standard_normal(rng);

      grad.for_each([](const char*, auto& t) { t.setZero(); });
      epoch_loss += result.model.loss_and_gradient(x, eps, grad).total;
      const double step = options.learning_rate / static_cast<double>(count);
      std::vector<double*> targets;
      result.model.params().for_each([&targets](const char*, auto& t) { targets.push_back(t.data()); });
      std::size_t k = 0;
      grad.for_each([&](const char*, const auto& g) {
        double* w = targets[k++];
        for (Eigen::Index i = 0; i < g.size(); ++i) w[i] -= step * g.data()[i];
      });
    }
    result.epoch_train_loss.push_back(epoch_loss / static_cast<double>(training.size()));
  }
  result.final_holdout_loss = mean_loss(result.model, holdout_samples);
  return result;
}

TrainResult train(const std::vector<designgen::DesignBitmap>& corpus, const TrainOptions& options) {
  std::vector<std::vector<double>> flat;
  flat.reserve(corpus.size());
  for (const auto& b : corpus) flat.emplace_back(b.values().begin(), b.values().end());
  return train(flat, options);
}

}  // namespace genspring::latent
