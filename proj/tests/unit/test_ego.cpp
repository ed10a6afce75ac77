#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "genspring/designgen/styles.hpp"
#include "genspring/ego/acquisition.hpp"
#include "genspring/ego/loop.hpp"
#include "genspring/ego/sampling.hpp"
#include "genspring/errors.hpp"
#include "genspring/random.hpp"
#include "oracles.hpp"

using namespace genspring;
using designgen::DesignBitmap;
using latent::LatentVector;

namespace {

constexpr std::size_t kSide = 32;

// Smooth, fully feasible landscape: distance depends linearly on the latent,
// so raw_mse is a quadratic bowl around z = (0.3, -0.2).
class LinearBackend final : public fitness::EvaluatorBackend {
 public:
  fitness::BackendMode mode() const noexcept override { return fitness::BackendMode::kSimulator; }
  fitness::TrialSet evaluate(std::size_t, const LatentVector& z, const designgen::PrintabilityReport&) override {
    ++calls;
    if (fail) throw StateError("launcher jammed");
    fitness::TrialSet t;
    const double d = fitness::kTargetDistance + 40.0 * (z[0] - 0.3) + 25.0 * (z[1] + 0.2);
    for (std::size_t i = 0; i < fitness::kTrialCount; ++i) t.distances[i] = std::clamp(d, 0.0, 150.0) + 0.1 * i;
    return t;
  }
  int calls = 0;
  bool fail = false;
};

DesignBitmap bar_bitmap(std::size_t width) {
  DesignBitmap b(kSide);
  for (std::size_t r = 0; r < kSide; ++r) {
    for (std::size_t c = kSide / 2; c < kSide / 2 + width; ++c) b.at(r, c) = 1.0;
  }
  return b;
}

// Printable except in the far corner of the latent space.
DesignBitmap toy_decoder(const LatentVector& z) {
  if (z[0] > 1.5) return DesignBitmap(kSide);
  return bar_bitmap(2);
}

DesignBitmap blank_decoder(const LatentVector&) { return DesignBitmap(kSide); }

ego::EgoSettings fast_settings() {
  ego::EgoSettings s;
  s.fit.ga.population_size = 20;
  s.fit.ga.generations = 20;
  s.infill.population_size = 30;
  s.infill.generations = 30;
  return s;
}

std::vector<fitness::EvaluationRecord> initial_records(LinearBackend& backend, std::size_t n = 8) {
  const Eigen::MatrixXd u = ego::latin_hypercube(n, 2, 5);
  std::vector<fitness::EvaluationRecord> out;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const LatentVector z{2.0 * u(i, 0) - 1.0, 2.0 * u(i, 1) - 1.0};
    out.push_back(ego::evaluate_design(out.size(), z, toy_decoder, backend, 0.5, "corpus"));
  }
  return out;
}

double mc_expected_improvement(double mean, double spread, double y_best, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  double s = 0.0;
  for (std::size_t i = 0; i < draws; ++i) s += std::max(y_best - (mean + spread * standard_normal(rng)), 0.0);
  return s / static_cast<double>(draws);
}

}  // namespace

TEST_SUITE("expected improvement") {
  TEST_CASE("worked values") {
    CHECK(ego::expected_improvement(0.0, 0.0, 0.0) == 0.0);
    CHECK(ego::expected_improvement(3.0, 1e-13, 5.0) == 0.0);
    CHECK(ego::expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(ego::expected_improvement(2.0, 2.0, 1.0) == doctest::Approx(0.39559).epsilon(1e-4));
    const double mc = mc_expected_improvement(2.0, 2.0, 1.0, 1000000, 1);
    CHECK(std::abs(ego::expected_improvement(2.0, 2.0, 1.0) - mc) < 1e-3);
  }

  TEST_CASE("normal helpers") {
    CHECK(ego::standard_normal_cdf(0.0) == 0.5);
    CHECK(ego::standard_normal_cdf(-40.0) >= 0.0);
    CHECK(ego::standard_normal_cdf(-8.0) == doctest::Approx(6.22096057e-16).epsilon(1e-6));
    CHECK(ego::standard_normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  }

  TEST_CASE("matches monte carlo within three standard errors") {
    Rng rng(2);
    for (int t = 0; t < 25; ++t) {
      const double mean = uniform(rng, -3, 3), spread = uniform(rng, 0.05, 3), y_best = uniform(rng, -3, 3);
      const std::size_t draws = 200000;
      Rng mc(100 + t);
      double s = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < draws; ++i) {
        const double v = std::max(y_best - (mean + spread * standard_normal(mc)), 0.0);
        s += v;
        ss += v * v;
      }
      const double m = s / draws;
      const double se = std::sqrt((ss / draws - m * m) / draws);
      // deep in the tail every draw is zero while the true value is merely tiny
      CHECK(std::abs(ego::expected_improvement(mean, spread, y_best) - m) <= 3.0 * se + 1e-8);
    }
  }

  TEST_CASE("non-negative and monotone in the gap") {
    Rng rng(3);
    for (int t = 0; t < 10000; ++t) {
      const double mean = uniform(rng, -50, 50), spread = std::pow(10.0, uniform(rng, -14, 2));
      CHECK(ego::expected_improvement(mean, spread, uniform(rng, -50, 50)) >= 0.0);
    }
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double ei = ego::expected_improvement(-5.0 + 0.1 * i, 1.0, 0.0);
      if (i > 0) CHECK(ei <= prev);
      prev = ei;
    }
  }

  TEST_CASE("vanishes at training points of a regressing model") {
    const auto s = kriging::SampleSet(Eigen::MatrixXd::Random(12, 2), Eigen::VectorXd::Random(12));
    const kriging::KrigingModel model(s, {{2.0, 3.0}, 0.1});
    const double y_best = s.y().minCoeff();
    for (Eigen::Index i = 0; i < 12; ++i) {
      const std::vector<double> xi{s.x()(i, 0), s.x()(i, 1)};
      CHECK(ego::expected_improvement(model, xi, y_best) < 1e-9);
      // the nugget spread alone would still promise improvement here
      CHECK(model.predict_variance(xi) > 0.0);
    }
  }
}

TEST_SUITE("proposal") {
  kriging::KrigingModel toy_model() {
    // one deep basin near 0.6
    Eigen::MatrixXd x(8, 1);
    Eigen::VectorXd y(8);
    const double pts[8] = {0.0, 0.14, 0.29, 0.43, 0.57, 0.71, 0.86, 1.0};
    for (int i = 0; i < 8; ++i) {
      x(i, 0) = pts[i];
      y(i) = 1.0 - 3.0 * std::exp(-40.0 * (pts[i] - 0.62) * (pts[i] - 0.62));
    }
    return kriging::KrigingModel(kriging::SampleSet(x, y), {{30.0}, 0.0});
  }

  TEST_CASE("finds the grid arg-max of a one dimensional toy") {
    const auto model = toy_model();
    const double y_best = model.samples().y().minCoeff();
    const auto box = ego::search_box(model.samples());
    CHECK(box.lower[0] == doctest::Approx(-0.1));
    CHECK(box.upper[0] == doctest::Approx(1.1));
    double best_x = 0.0, best_ei = -1.0;
    for (int i = 0; i < 10000; ++i) {
      const std::vector<double> p{box.lower[0] + (box.upper[0] - box.lower[0]) * i / 9999.0};
      const double ei = ego::expected_improvement(model, p, y_best);
      if (ei > best_ei) {
        best_ei = ei;
        best_x = p[0];
      }
    }
    const auto prop = ego::propose_infill(model, y_best, rga::GaConfig{}, 1);
    CHECK(std::abs(prop.latent[0] - best_x) < 0.05);
    CHECK(prop.ei_value == doctest::Approx(best_ei).epsilon(1e-3));
    CHECK(prop.kind == ego::InfillKind::kEgoCandidate);
    CHECK_FALSE(prop.degenerate);
  }

  TEST_CASE("deterministic per seed") {
    const auto model = toy_model();
    const auto a = ego::propose_infill(model, 0.0, rga::GaConfig{}, 7);
    const auto b = ego::propose_infill(model, 0.0, rga::GaConfig{}, 7);
    CHECK(a.latent == b.latent);
    CHECK(a.ei_value == b.ei_value);
  }

  TEST_CASE("never resamples an existing point") {
    Rng rng(4);
    Eigen::MatrixXd x(30, 2);
    Eigen::VectorXd y(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
      x(i, 0) = uniform(rng, 0, 1);
      x(i, 1) = uniform(rng, 0, 1);
      y(i) = oracle::branin(15 * x(i, 0) - 5, 15 * x(i, 1));
    }
    const kriging::KrigingModel model(kriging::SampleSet(x, y), {{5.0, 5.0}, 0.0});
    const auto prop = ego::propose_infill(model, y.minCoeff(), rga::GaConfig{}, 5);
    CHECK(prop.ei_value > 0.0);
    for (Eigen::Index i = 0; i < 30; ++i) {
      CHECK(std::hypot(prop.latent[0] - x(i, 0), prop.latent[1] - x(i, 1)) > 1e-6);
    }
  }

  TEST_CASE("degenerate when nothing improves") {
    rga::GaConfig ga;
    ga.population_size = 10;
    ga.generations = 5;
    const auto model = toy_model();
    // no point can beat a target far below every plausible prediction
    const auto prop = ego::propose_infill(model, -1e6, ga, 2);
    CHECK(prop.ei_value == 0.0);
    CHECK(prop.degenerate);
  }

  TEST_CASE("perturbations") {
    const auto model = toy_model();
    const auto box = ego::search_box(model.samples());
    ego::InfillProposal p;
    p.latent = LatentVector{0.5};
    CHECK(ego::perturbation_infills(p, 0, 0.05, box, 1).empty());
    const auto three = ego::perturbation_infills(p, 3, 0.05, box, 1, &model, 0.0);
    REQUIRE(three.size() == 3);
    for (const auto& q : three) {
      CHECK(q.kind == ego::InfillKind::kPerturbation);
      CHECK(q.ei_value >= 0.0);
      CHECK(q.latent != p.latent);
    }
    for (const auto& q : ego::perturbation_infills(p, 5, 1e-12, box, 2)) CHECK(std::abs(q.latent[0] - 0.5) < 1e-9);
    CHECK_THROWS_AS(ego::perturbation_infills(p, 1, 0.0, box, 3), ParameterError);
  }

  TEST_CASE("perturbation spread matches sigma") {
    ego::SearchBox box{{-10.0, -10.0}, {10.0, 10.0}};
    ego::InfillProposal p;
    p.latent = LatentVector{0.2, -0.1};
    const auto many = ego::perturbation_infills(p, 20000, 0.05, box, 4);
    double s = 0.0, ss = 0.0;
    for (const auto& q : many) {
      for (std::size_t k = 0; k < 2; ++k) {
        const double dz = q.latent[k] - p.latent[k];
        s += dz;
        ss += dz * dz;
      }
    }
    const double n = 2.0 * many.size();
    CHECK(std::sqrt(ss / n - (s / n) * (s / n)) == doctest::Approx(0.05).epsilon(0.02));
  }

  TEST_CASE("perturbations are clamped to the box") {
    ego::SearchBox box{{0.0}, {1.0}};
    ego::InfillProposal p;
    p.latent = LatentVector{0.99};
    for (const auto& q : ego::perturbation_infills(p, 500, 0.5, box, 5)) {
      CHECK(q.latent[0] >= 0.0);
      CHECK(q.latent[0] <= 1.0);
    }
  }
}

TEST_SUITE("sampling") {
  TEST_CASE("latin hypercube strata") {
    const std::size_t n = 17, d = 5;
    const auto u = ego::latin_hypercube(n, d, 3);
    REQUIRE(u.rows() == 17);
    REQUIRE(u.cols() == 5);
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
      std::set<int> strata;
      for (Eigen::Index i = 0; i < u.rows(); ++i) {
        CHECK(u(i, k) >= 0.0);
        CHECK(u(i, k) <= 1.0);
        strata.insert(static_cast<int>(std::floor(u(i, k) * n)));
      }
      CHECK(strata.size() == n);
    }
    CHECK(ego::latin_hypercube(n, d, 3) == u);
    CHECK(ego::latin_hypercube(n, d, 4) != u);
  }
}

TEST_SUITE("loop") {
  TEST_CASE("unprintable designs skip the backend") {
    LinearBackend backend;
    const auto r = ego::evaluate_design(3, LatentVector{0.0, 0.0}, blank_decoder, backend, 0.5, "infill");
    CHECK(backend.calls == 0);
    CHECK(r.rank == fitness::Rank::kBlurry);
    CHECK(r.normalized_fitness == 250.0);
    CHECK(r.design_id == 3);
    CHECK(r.origin == "infill");
    CHECK(r.bitmap_side == kSide);
    const auto ok = ego::evaluate_design(4, LatentVector{0.3, -0.2}, toy_decoder, backend, 0.5, "corpus");
    CHECK(backend.calls == 1);
    CHECK(ok.feasible());
    CHECK(*ok.raw_mse < 1.0);
  }

  TEST_CASE("initialize fits on normalized fitness") {
    LinearBackend backend;
    const auto state = ego::initialize(initial_records(backend), 5, fast_settings(), 1);
    CHECK(state.initial_count == 8);
    CHECK(state.infill_evaluations() == 0);
    CHECK(state.y_best == 0.0);
    CHECK(state.model.samples().n() == 8);
    CHECK(state.model.samples().y().maxCoeff() == doctest::Approx(100.0));
  }

  TEST_CASE("steps improve monotonically and respect the budget") {
    LinearBackend backend;
    auto settings = fast_settings();
    auto state = ego::initialize(initial_records(backend), 6, settings, 2);
    std::vector<double> raw_best;
    auto best_raw = [&] {
      double b = 1e300;
      for (const auto& r : state.records) {
        if (r.raw_mse) b = std::min(b, *r.raw_mse);
      }
      return b;
    };
    raw_best.push_back(best_raw());
    double y_best = state.y_best;
    std::size_t hooks_before = 0, hooks_after = 0;
    ego::StepHooks hooks{[&](std::size_t, const ego::InfillProposal&) { ++hooks_before; },
                         [&](const fitness::EvaluationRecord&) { ++hooks_after; }};
    std::uint64_t it = 0;
    while (!state.done()) {
      const auto trace = ego::step(state, toy_decoder, backend, settings, derive_seed(9, ++it), hooks);
      CHECK(trace.iteration == it);
      CHECK(trace.design_ids.size() == 1);
      CHECK(trace.y_best <= y_best);
      CHECK(state.y_best == ego::best_fitness(state.records));
      y_best = state.y_best;
      raw_best.push_back(best_raw());
      CHECK(raw_best.back() <= raw_best[raw_best.size() - 2]);
    }
    CHECK(state.records.size() == 14);
    CHECK(hooks_before == 6);
    CHECK(hooks_after == 6);
    CHECK(raw_best.back() < raw_best.front());
    CHECK_THROWS_AS(ego::step(state, toy_decoder, backend, settings, 1), StateError);
  }

  TEST_CASE("batch of candidate plus perturbations is truncated to the budget") {
    LinearBackend backend;
    auto settings = fast_settings();
    settings.perturbations = 3;
    auto state = ego::initialize(initial_records(backend), 6, settings, 3);
    auto t1 = ego::step(state, toy_decoder, backend, settings, 1);
    CHECK(t1.perturbations.size() == 3);
    CHECK(t1.design_ids == std::vector<std::size_t>{8, 9, 10, 11});
    CHECK(state.records[8].origin == "infill");
    CHECK(state.records[9].origin == "perturbation");
    auto t2 = ego::step(state, toy_decoder, backend, settings, 2);
    CHECK(t2.design_ids.size() == 2);
    CHECK(state.done());
    CHECK(state.records.size() == 14);
  }

  TEST_CASE("blank proposal is ranked without the backend") {
    LinearBackend backend;
    auto settings = fast_settings();
    auto state = ego::initialize(initial_records(backend), 3, settings, 4);
    const int calls = backend.calls;
    ego::step(state, blank_decoder, backend, settings, 5);
    CHECK(backend.calls == calls);
    CHECK(state.records.back().rank == fitness::Rank::kBlurry);
    CHECK(state.records.back().normalized_fitness == 250.0);
  }

  TEST_CASE("backend failure leaves the state untouched") {
    LinearBackend backend;
    auto settings = fast_settings();
    auto state = ego::initialize(initial_records(backend), 3, settings, 5);
    const auto before = state.records;
    const double y_best = state.y_best;
    const auto hp = state.model.hyperparameters().theta;
    backend.fail = true;
    CHECK_THROWS_AS(ego::step(state, toy_decoder, backend, settings, 6), StateError);
    CHECK(state.records == before);
    CHECK(state.y_best == y_best);
    CHECK(state.iteration == 0);
    CHECK(state.model.hyperparameters().theta == hp);
    backend.fail = false;
    CHECK_NOTHROW(ego::step(state, toy_decoder, backend, settings, 6));
    CHECK(state.iteration == 1);
  }

  TEST_CASE("ei threshold stops the run") {
    LinearBackend backend;
    auto settings = fast_settings();
    settings.ei_threshold = 1e300;
    auto state = ego::initialize(initial_records(backend), 3, settings, 6);
    const auto trace = ego::step(state, toy_decoder, backend, settings, 7);
    CHECK_FALSE(trace.evaluated);
    CHECK(trace.design_ids.empty());
    CHECK(state.converged);
    CHECK(state.done());
    CHECK(state.records.size() == 8);
  }

  TEST_CASE("steps are deterministic per seed") {
    auto run = [] {
      LinearBackend backend;
      auto settings = fast_settings();
      auto state = ego::initialize(initial_records(backend), 3, settings, 7);
      for (std::uint64_t i = 1; i <= 3; ++i) ego::step(state, toy_decoder, backend, settings, i);
      return state.records;
    };
    CHECK(run() == run());
  }
}

TEST_SUITE("black box") {
  TEST_CASE("one dimensional quadratic") {
    ego::BlackBoxOptions opt;
    opt.initial_samples = 5;
    opt.infills = 10;
    opt.fit.fixed_lambda = 1e-6;
    const auto res = ego::minimize_black_box([](std::span<const double> x) { return (x[0] - 1.3) * (x[0] - 1.3); },
                                             {-4.0}, {4.0}, opt, 1);
    CHECK(res.y.size() == 15);
    CHECK(res.best < 1e-3);
    for (std::size_t i = 1; i < res.best_trace.size(); ++i) CHECK(res.best_trace[i] <= res.best_trace[i - 1]);
    for (const auto& x : res.x) {
      CHECK(x[0] >= -4.0);
      CHECK(x[0] <= 4.0);
    }
  }

  TEST_CASE("branin single seed") {
    ego::BlackBoxOptions opt;
    opt.fit.fixed_lambda = 1e-6;
    const auto res = ego::minimize_black_box([](std::span<const double> x) { return oracle::branin(x[0], x[1]); },
                                             {-5.0, 0.0}, {10.0, 15.0}, opt, 1);
    CHECK(res.y.size() == 40);
    CHECK(res.best < 0.45);
  }
}
