#include <doctest.h>

#include <chrono>
#include <cmath>
#include <future>
#include <thread>

#include "genspring/designgen/printability.hpp"
#include "genspring/designgen/styles.hpp"
#include "genspring/errors.hpp"
#include "genspring/fitness/backend.hpp"
#include "genspring/fitness/human.hpp"
#include "genspring/fitness/records.hpp"
#include "genspring/fitness/simulator.hpp"
#include "genspring/fitness/trials.hpp"
#include "genspring/random.hpp"

using namespace genspring;
using namespace genspring::fitness;
using designgen::DesignBitmap;

namespace {

TrialSet constant_trials(double d, std::size_t missing = 0) {
  TrialSet t;
  for (std::size_t i = 0; i < kTrialCount; ++i) {
    if (i >= missing) t.distances[i] = d;
  }
  return t;
}

const PrintabilityFlags kPrintable{true, true};

EvaluationRecord feasible_record(std::size_t id, double offset) {
  // constant offset gives raw_mse = offset^2
  return make_record(id, latent::LatentVector{0.0, static_cast<double>(id)}, kPrintable, true,
                     constant_trials(kTargetDistance + offset));
}

// A vertical bar of the given width, with base strips, as a filtered report.
designgen::PrintabilityReport bar(std::size_t side, std::size_t width) {
  DesignBitmap b(side);
  const auto strips = designgen::base_strips(side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const bool base = (r < strips.rows || r >= side - strips.rows) && c >= strips.col_begin && c < strips.col_end;
      if (base || (c >= side / 2 - width / 2 && c < side / 2 - width / 2 + width)) b.at(r, c) = 1.0;
    }
  }
  return designgen::filter_connected(b);
}

SimulatorParams test_params() {
  SimulatorParams p = SimulatorParams::defaults();
  p.c1 = 1.0;
  p.k_max = 1.0;
  p.c2 = 150000.0;  // k = 1e-3 below -> mean 75
  p.c3 = 0.0;
  p.d_unstable = kRailLength;
  return p;
}

}  // namespace

TEST_SUITE("raw fitness") {
  TEST_CASE("worked values") {
    CHECK(raw_fitness(constant_trials(75.0)) == 0.0);
    CHECK(raw_fitness(constant_trials(85.0)) == doctest::Approx(100.0));
    TrialSet t;
    for (std::size_t i = 0; i < kTrialCount; ++i) t.distances[i] = i % 2 ? 80.0 : 70.0;
    CHECK(raw_fitness(t) == doctest::Approx(25.0));
  }

  TEST_CASE("missing trials are excluded from the mean") {
    TrialSet t = constant_trials(85.0, 4);
    CHECK(t.missing_count() == 4);
    CHECK(t.observed_count() == 6);
    CHECK(raw_fitness(t) == doctest::Approx(100.0));
    CHECK_THROWS_AS(raw_fitness(constant_trials(85.0, kTrialCount)), ProtocolError);
  }
}

TEST_SUITE("rank") {
  TEST_CASE("worked rank examples") {
    CHECK(assign_rank({false, false}, false, std::nullopt) == Rank::kBlurry);
    CHECK(assign_rank({true, false}, false, std::nullopt) == Rank::kDisconnected);
    CHECK(assign_rank(kPrintable, false, std::nullopt) == Rank::kUnloadable);
    CHECK(assign_rank(kPrintable, true, constant_trials(70.0, 6)) == Rank::kUnstable);
  }

  TEST_CASE("broken, unstable and feasible") {
    auto broke = constant_trials(70.0);
    broke.broke = true;
    CHECK(assign_rank(kPrintable, true, broke) == Rank::kBroken);
    // breakage is checked before stability
    auto both = constant_trials(70.0, 8);
    both.broke = true;
    CHECK(assign_rank(kPrintable, true, both) == Rank::kBroken);
    CHECK(assign_rank(kPrintable, true, constant_trials(70.0, 5)) == Rank::kFeasible);
    CHECK(assign_rank(kPrintable, true, constant_trials(70.0)) == Rank::kFeasible);
  }

  TEST_CASE("the tree is total over consistent inputs") {
    // every consistent combination lands on exactly one rank; inconsistent
    // ones are rejected rather than silently ranked
    int ranked = 0, rejected = 0;
    for (int visible = 0; visible < 2; ++visible) {
      for (int connected = 0; connected < 2; ++connected) {
        for (int loadable = 0; loadable < 2; ++loadable) {
          for (int has_trials = 0; has_trials < 2; ++has_trials) {
            for (int broke = 0; broke < 2; ++broke) {
              for (std::size_t missing = 0; missing <= kTrialCount; ++missing) {
                std::optional<TrialSet> trials;
                if (has_trials) {
                  trials = constant_trials(60.0, missing);
                  trials->broke = broke;
                  trials->loadable = loadable;
                }
                const PrintabilityFlags flags{visible != 0, connected != 0};
                const bool consistent = !(connected && !visible) &&
                                        (has_trials == (visible && connected && loadable)) &&
                                        (has_trials || (broke == 0 && missing == 0));
                if (!has_trials && (broke || missing)) continue;
                try {
                  const Rank r = assign_rank(flags, loadable != 0, trials);
                  CHECK(consistent);
                  CHECK(to_int(r) >= 1);
                  CHECK(to_int(r) <= 6);
                  ++ranked;
                } catch (const StateError&) {
                  CHECK_FALSE(consistent);
                  ++rejected;
                }
              }
            }
          }
        }
      }
    }
    CHECK(ranked > 0);
    CHECK(rejected > 0);
  }

  TEST_CASE("inconsistent inputs") {
    CHECK_THROWS_AS(assign_rank({false, true}, false, std::nullopt), StateError);
    CHECK_THROWS_AS(assign_rank(kPrintable, true, std::nullopt), StateError);
    CHECK_THROWS_AS(assign_rank({true, false}, true, constant_trials(70.0)), StateError);
    auto t = constant_trials(70.0);
    t.loadable = false;
    CHECK_THROWS_AS(assign_rank(kPrintable, true, t), StateError);
  }
}

TEST_SUITE("normalized fitness") {
  TEST_CASE("endpoints") {
    std::vector<EvaluationRecord> rs{feasible_record(0, 2.0), feasible_record(1, 10.0)};
    normalized_fitness(rs);
    CHECK(rs[0].normalized_fitness == doctest::Approx(0.0));
    CHECK(rs[1].normalized_fitness == doctest::Approx(100.0));
  }

  TEST_CASE("extremes are exact for arbitrary spreads") {
    Rng rng(31);
    for (int set = 0; set < 300; ++set) {
      std::vector<EvaluationRecord> rs;
      for (std::size_t i = 0; i < 2 + static_cast<std::size_t>(set % 7); ++i) {
        rs.push_back(feasible_record(i, uniform(rng, 0.0, 70.0)));
      }
      normalized_fitness(rs);
      double lo = 1e9, hi = -1e9;
      for (const auto& r : rs) {
        lo = std::min(lo, r.normalized_fitness);
        hi = std::max(hi, r.normalized_fitness);
      }
      CHECK(lo == 0.0);
      CHECK(hi == 100.0);
    }
  }

  TEST_CASE("affine interior and rank constants") {
    std::vector<EvaluationRecord> rs{feasible_record(0, 2.0), feasible_record(1, std::sqrt(52.0)),
                                     feasible_record(2, 10.0),
                                     make_record(3, latent::LatentVector{1.0, 1.0}, kPrintable, false, std::nullopt)};
    normalized_fitness(rs);
    CHECK(rs[0].normalized_fitness == doctest::Approx(0.0));
    CHECK(rs[1].normalized_fitness == doctest::Approx(50.0));
    CHECK(rs[2].normalized_fitness == doctest::Approx(100.0));
    CHECK(rs[3].rank == Rank::kUnloadable);
    CHECK(rs[3].normalized_fitness == 160.0);
  }

  TEST_CASE("a lone feasible record sits at zero") {
    std::vector<EvaluationRecord> rs{feasible_record(0, 4.0),
                                     make_record(1, latent::LatentVector{1.0, 1.0}, {false, false}, false, std::nullopt)};
    normalized_fitness(rs);
    CHECK(rs[0].normalized_fitness == 0.0);
    CHECK(rs[1].normalized_fitness == 250.0);
  }

  TEST_CASE("no feasible records keep their constants") {
    auto broke = constant_trials(70.0);
    broke.broke = true;
    std::vector<EvaluationRecord> rs{
        make_record(0, latent::LatentVector{0.0}, {true, false}, false, std::nullopt),
        make_record(1, latent::LatentVector{1.0}, kPrintable, true, broke),
        make_record(2, latent::LatentVector{2.0}, kPrintable, true, constant_trials(70.0, 7)),
    };
    normalized_fitness(rs);
    CHECK(rs[0].normalized_fitness == 200.0);
    CHECK(rs[1].normalized_fitness == 130.0);
    CHECK(rs[2].normalized_fitness == 110.0);
    CHECK_FALSE(rs[2].raw_mse.has_value());
  }

  TEST_CASE("ordering is strictly monotone and infeasible dominates") {
    Rng rng(1);
    std::vector<EvaluationRecord> rs;
    for (std::size_t i = 0; i < 30; ++i) rs.push_back(feasible_record(i, uniform(rng, 0.0, 40.0)));
    rs.push_back(make_record(30, latent::LatentVector{0.0}, kPrintable, false, std::nullopt));
    normalized_fitness(rs);
    for (const auto& a : rs) {
      for (const auto& b : rs) {
        if (a.feasible() && b.feasible() && *a.raw_mse < *b.raw_mse) CHECK(a.normalized_fitness < b.normalized_fitness);
        if (a.feasible() && !b.feasible()) CHECK(a.normalized_fitness < b.normalized_fitness);
      }
      if (a.feasible()) {
        CHECK(a.normalized_fitness >= 0.0);
        CHECK(a.normalized_fitness <= kFeasibleScaleMax);
      }
    }
  }

  TEST_CASE("record json round trip") {
    auto r = feasible_record(7, 3.0);
    r.trials->distances[2].reset();
    r.printability = kPrintable;
    r.bitmap_side = 16;
    r.bitmap_bits = designgen::pack_bits(DesignBitmap(16, 1.0));
    r.origin = "infill";
    r.raw_mse = raw_fitness(*r.trials);
    const auto back = record_from_json(to_json(r));
    CHECK(back == r);
    CHECK(to_json(r).at("trials").at("distances")[2].is_null());
    CHECK_THROWS_AS(record_from_json(nlohmann::json{{"design_id", "x"}}), ProtocolError);
  }
}

TEST_SUITE("simulator") {
  TEST_CASE("features of a straight bar") {
    const auto report = bar(32, 3);
    const auto f = extract_features(report);
    CHECK(f.min_thickness == 3.0);
    CHECK(f.path_length == 32.0);
    CHECK(f.area == static_cast<double>(report.filtered.count_above(0.5)));
    designgen::PrintabilityReport disconnected;
    disconnected.visible = true;
    disconnected.filtered = DesignBitmap(32);
    CHECK_THROWS_AS(extract_features(disconnected), ProtocolError);
  }

  TEST_CASE("stiff limit is unloadable") {
    const auto params = SimulatorParams::defaults();
    const auto f = extract_features(bar(32, 28));
    const auto t = sim_evaluate(f, params, 1);
    CHECK_FALSE(t.loadable);
    CHECK(t.missing_count() == kTrialCount);
    CHECK(assign_rank(kPrintable, t.loadable, std::nullopt) == Rank::kUnloadable);
  }

  TEST_CASE("soft limit barely moves the car") {
    const auto params = SimulatorParams::defaults();
    const SpringFeatures f{1.0, 1000.0, 1000.0};
    CHECK(params.mean_distance(params.stiffness(f)) < 1e-3);
    const auto t = sim_evaluate(f, params, 2);
    REQUIRE(t.loadable);
    CHECK_FALSE(t.broke);
    CHECK(t.missing_count() == 0);
    CHECK(assign_rank(kPrintable, true, t) == Rank::kFeasible);
    CHECK(raw_fitness(t) > 3000.0);
  }

  TEST_CASE("deterministic per seed") {
    const auto params = SimulatorParams::defaults();
    const auto f = extract_features(bar(32, 2));
    CHECK(sim_evaluate(f, params, 9) == sim_evaluate(f, params, 9));
    CHECK(sim_evaluate(f, params, 9).distances != sim_evaluate(f, params, 10).distances);
  }

  TEST_CASE("distance noise matches sigma") {
    const auto params = test_params();
    const SpringFeatures f{1.0, 10.0, 100.0};
    CHECK(params.mean_distance(params.stiffness(f)) == doctest::Approx(75.0));
    double s = 0.0, ss = 0.0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      for (const auto& d : sim_evaluate(f, params, seed).distances) {
        REQUIRE(d.has_value());
        s += *d;
        ss += *d * *d;
        ++n;
      }
    }
    CHECK(n == 10000);
    const double mean = s / n;
    const double sd = std::sqrt(ss / n - mean * mean);
    CHECK(std::abs(sd - params.sigma_d) < 0.05 * params.sigma_d);
    CHECK(mean == doctest::Approx(75.0).epsilon(0.01));
  }

  TEST_CASE("end of rail and flips are missing") {
    auto params = test_params();
    params.c2 = 1e9;  // mean clamps at the rail
    const SpringFeatures f{1.0, 10.0, 100.0};
    CHECK(params.mean_distance(params.stiffness(f)) == kRailLength);
    std::size_t missing = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) missing += sim_evaluate(f, params, seed).missing_count();
    CHECK(missing > 400);  // half of the draws land past the end
    params.c2 = 150000.0;
    params.d_unstable = 50.0;
    params.p_f = 1.0;
    CHECK(sim_evaluate(f, params, 1).missing_count() == kTrialCount);
  }

  TEST_CASE("breakage follows the logistic") {
    auto params = test_params();
    params.c3 = 1e9;
    params.k_frag = 1e-4;
    const SpringFeatures f{1.0, 10.0, 100.0};
    CHECK(params.breakage_probability(1e-3) == doctest::Approx(1.0));
    CHECK(sim_evaluate(f, params, 3).broke);
    params.k_frag = 1.0;
    CHECK_FALSE(sim_evaluate(f, params, 3).broke);
    params.c3 = 0.0;
    CHECK(params.breakage_probability(5.0) == doctest::Approx(0.5));
  }

  TEST_CASE("defaults are versioned and round trip") {
    const auto p = SimulatorParams::defaults();
    CHECK_FALSE(p.version.empty());
    CHECK(p.rail_length == kRailLength);
    const auto back = SimulatorParams::from_json(p.to_json());
    CHECK(back.to_json() == p.to_json());
    auto j = p.to_json();
    j.erase("schema");
    CHECK_THROWS_AS(SimulatorParams::from_json(j), ConfigError);
    j = p.to_json();
    j["p_f"] = 2.0;
    CHECK_THROWS_AS(SimulatorParams::from_json(j), ConfigError);
  }

  TEST_CASE("feasible share over random style samples") {
    const auto params = SimulatorParams::defaults();
    int feasible = 0, total = 0;
    for (int style = 1; style <= designgen::kStyleCount; ++style) {
      for (std::uint64_t i = 0; i < 25; ++i) {
        const auto spec = designgen::sample_style_spec(style, designgen::kDeskSide, i * 31 + style);
        const auto report = designgen::filter_connected(designgen::generate_style(spec, i));
        ++total;
        if (!report.connected) continue;
        const auto t = sim_evaluate(extract_features(report), params, i);
        if (!t.loadable) continue;
        feasible += assign_rank(kPrintable, true, t) == Rank::kFeasible;
      }
    }
    const double share = static_cast<double>(feasible) / total;
    CHECK(share >= 0.3);
    CHECK(share <= 0.6);
  }
}

TEST_SUITE("human entry") {
  HumanSubmission valid() {
    HumanSubmission s;
    s.loadable = true;
    s.broke = false;
    for (int i = 0; i < 10; ++i) s.trials.push_back(70.0 + i);
    return s;
  }

  TEST_CASE("ten valid distances") {
    const auto t = human_evaluate(1, valid());
    CHECK(t.loadable);
    CHECK(t.observed_count() == 10);
    CHECK(assign_rank(kPrintable, true, t) == Rank::kFeasible);
  }

  TEST_CASE("out of range and wrong count") {
    auto s = valid();
    s.trials[3] = 200.0;
    try {
      human_evaluate(1, s);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      REQUIRE(e.fields().size() == 1);
      CHECK(e.fields()[0].name == "trials[3]");
    }
    s = valid();
    s.trials[0] = -1.0;
    CHECK_THROWS_AS(human_evaluate(1, s), ValidationError);
    s = valid();
    s.trials.pop_back();
    CHECK_THROWS_AS(human_evaluate(1, s), ValidationError);
    s = valid();
    s.broke.reset();
    CHECK_THROWS_AS(human_evaluate(1, s), ValidationError);
    s = valid();
    s.loadable.reset();
    CHECK_THROWS_AS(human_evaluate(1, s), ValidationError);
  }

  TEST_CASE("unloadable ignores the trials") {
    HumanSubmission s;
    s.loadable = false;
    s.trials = {500.0};
    const auto t = human_evaluate(1, s);
    CHECK_FALSE(t.loadable);
    CHECK(t.observed_count() == 0);
    CHECK(assign_rank(kPrintable, false, std::nullopt) == Rank::kUnloadable);
  }

  TEST_CASE("missing entries are null") {
    const auto body = nlohmann::json::parse(
        R"({"loadable":true,"broke":false,"trials":[70,null,71,72,73,74,75,76,77,null]})");
    const auto t = human_evaluate(2, parse_submission(body));
    CHECK(t.missing_count() == 2);
    CHECK_THROWS_AS(parse_submission(nlohmann::json::parse(R"({"loadable":"yes"})")), ValidationError);
    CHECK_THROWS_AS(parse_submission(nlohmann::json::parse(R"({"loadable":true,"trials":[1,"a"]})")),
                    ValidationError);
    CHECK_THROWS_AS(parse_submission(nlohmann::json::parse("[1,2]")), ValidationError);
  }

  TEST_CASE("backend hands designs to the operator") {
    HumanEntryBackend backend;
    CHECK_FALSE(backend.pending().has_value());
    CHECK(backend.submit(5, valid()) == HumanEntryBackend::SubmitStatus::kNotPending);
    const auto report = bar(32, 2);
    auto result = std::async(std::launch::async,
                             [&] { return backend.evaluate(5, latent::LatentVector{0.1, 0.2}, report); });
    REQUIRE(backend.wait_for_pending(std::chrono::milliseconds(5000)));
    const auto pending = backend.pending();
    REQUIRE(pending.has_value());
    CHECK(pending->design_id == 5);
    CHECK(pending->latent == latent::LatentVector{0.1, 0.2});
    CHECK(backend.submit(6, valid()) == HumanEntryBackend::SubmitStatus::kNotPending);
    auto bad = valid();
    bad.trials[0] = 1000.0;
    CHECK_THROWS_AS(backend.submit(5, bad), ValidationError);
    CHECK(backend.pending().has_value());
    CHECK(backend.submit(5, valid()) == HumanEntryBackend::SubmitStatus::kAccepted);
    const auto t = result.get();
    CHECK(t == human_evaluate(5, valid()));
    CHECK_FALSE(backend.pending().has_value());
    CHECK(backend.submit(5, valid()) == HumanEntryBackend::SubmitStatus::kNotPending);
  }

  TEST_CASE("cancel wakes a blocked evaluation") {
    HumanEntryBackend backend;
    const auto report = bar(32, 2);
    auto result = std::async(std::launch::async, [&] { return backend.evaluate(1, latent::LatentVector{0.0}, report); });
    REQUIRE(backend.wait_for_pending(std::chrono::milliseconds(5000)));
    backend.cancel();
    CHECK_THROWS_AS(result.get(), StateError);
  }

  TEST_CASE("mode names") {
    CHECK(to_string(BackendMode::kSimulator) == "simulator");
    CHECK(to_string(BackendMode::kHumanEntry) == "human");
    CHECK(backend_mode_from_string("human") == BackendMode::kHumanEntry);
    CHECK_THROWS(backend_mode_from_string("robot"));
  }

  TEST_CASE("simulator backend is deterministic per design") {
    SimulatorBackend a(SimulatorParams::defaults(), 3), b(SimulatorParams::defaults(), 3);
    const auto report = bar(32, 2);
    const latent::LatentVector z{0.0};
    CHECK(a.evaluate(4, z, report) == b.evaluate(4, z, report));
    CHECK(a.evaluate(4, z, report).distances != a.evaluate(5, z, report).distances);
  }
}
