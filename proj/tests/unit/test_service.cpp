#include <doctest.h>

#include <chrono>
#include <cstring>
#include <functional>
#include <thread>

#include <nlohmann/json.hpp>

#include "genspring/designgen/bitmap.hpp"
#include "genspring/errors.hpp"
#include "genspring/runner/runlog.hpp"
#include "genspring/runner/service.hpp"
#include "oracles.hpp"

// after Eigen: <resolv.h> defines a _res macro that collides with Eigen names
#include <httplib.h>

using namespace genspring;
using namespace genspring::runner;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig human_config(const fs::path& dir) {
  ExperimentConfig c = ExperimentConfig::preset(Protocol::kCustom);
  c.backend = fitness::BackendMode::kHumanEntry;
  c.seed = 2;
  c.initial.corpus_picks = 4;
  c.initial.gaussian = 4;
  c.infill_budget = 3;
  c.mle_ga.population_size = 10;
  c.mle_ga.generations = 10;
  c.ei_ga.population_size = 20;
  c.ei_ga.generations = 20;
  c.vae.corpus_per_style = 4;
  c.vae.train.hidden = 8;
  c.vae.train.latent_dim = 4;
  c.data_dir = dir;
  return c;
}

// A decoder that draws a full-height bar whenever its first hidden unit is
// positive and nothing otherwise, so roughly half of all latents are
// printable and the session does not depend on training quality.
const latent::VaeModel& vae() {
  static const latent::VaeModel model = [] {
    const std::size_t side = designgen::kDeskSide, hidden = 8, d = 4;
    auto m = latent::VaeModel::create(side * side, hidden, d, 5);
    auto& p = m.params();
    p.out_w.setZero();
    p.out_b.setConstant(-6.0);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 14; c < 17; ++c) {
        p.out_b(static_cast<Eigen::Index>(r * side + c)) = 0.0;
        p.out_w(static_cast<Eigen::Index>(r * side + c), 0) = 6.0;
      }
    }
    return m;
  }();
  return model;
}

bool eventually(const std::function<bool()>& cond, std::chrono::milliseconds timeout = std::chrono::seconds(60)) {
  const auto until = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < until) {
    if (cond()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return cond();
}

json get_json(httplib::Client& cli, const std::string& path, int expect = 200) {
  auto res = cli.Get(path);
  REQUIRE(res);
  CHECK(res->status == expect);
  return json::parse(res->body);
}

json valid_submission(double base = 70.0) {
  json trials = json::array();
  for (int i = 0; i < 10; ++i) trials.push_back(base + i);
  return {{"loadable", true}, {"broke", false}, {"trials", trials}};
}

httplib::Result post(httplib::Client& cli, const std::string& path, const std::string& body) {
  return cli.Post(path, body, "application/json");
}

std::string eval_path(std::size_t id) { return "/api/v1/design/" + std::to_string(id) + "/evaluation"; }

}  // namespace

TEST_CASE("service needs the human backend") {
  auto c = human_config(oracle::scratch_dir("service-config"));
  c.backend = fitness::BackendMode::kSimulator;
  CHECK_THROWS_AS(Service(c, vae()), ConfigError);
}

TEST_CASE("scripted human session drives the run to completion") {
  const auto dir = oracle::scratch_dir("service-session");
  const auto config = human_config(dir);
  Service service(config, vae());
  const int port = service.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(30, 0);

  const auto status = get_json(cli, "/api/v1/run/status");
  CHECK(status.at("protocol") == "custom");
  CHECK(status.at("backend") == "human");
  CHECK(status.at("initial_size") == 8);
  CHECK(status.at("budget") == 3);
  CHECK(status.at("total") == 11);

  // malformed ids and queries
  CHECK(cli.Get("/api/v1/design/abc/bitmap")->status == 400);
  CHECK(cli.Get("/api/v1/design/999/bitmap")->status == 404);
  CHECK(cli.Get("/api/v1/design/999/stl")->status == 404);
  CHECK(cli.Get("/api/v1/records?limit=0")->status == 400);
  CHECK(cli.Get("/api/v1/records?offset=-1")->status == 400);
  CHECK(post(cli, "/api/v1/design/x/evaluation", valid_submission().dump())->status == 400);

  // CORS preflight for the browser UI
  auto pre = cli.Options("/api/v1/run/status");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Origin") == "*");

  std::size_t submissions = 0;
  bool checked_errors = false;
  while (true) {
    json pending;
    REQUIRE(eventually([&] {
      pending = get_json(cli, "/api/v1/design/pending");
      const auto s = service.status().state;
      return pending.at("pending").get<bool>() || s == "completed" || s == "failed";
    }));
    if (!pending.at("pending").get<bool>()) break;

    const std::size_t id = pending.at("design_id").get<std::size_t>();
    CHECK(get_json(cli, "/api/v1/run/status").at("state") == "waiting");
    CHECK(get_json(cli, "/api/v1/run/status").at("pending_design_id") == id);
    CHECK(pending.at("latent").size() == config.vae.train.latent_dim);
    CHECK(pending.at("side") == designgen::kDeskSide);

    auto bitmap = cli.Get(pending.at("bitmap_url").get<std::string>());
    REQUIRE(bitmap);
    CHECK(bitmap->status == 200);
    const auto decoded = designgen::decode_pgm(bitmap->body);
    CHECK(decoded.side() == designgen::kDeskSide);
    CHECK(decoded.count_above(0.5) > 0);
    auto stl = cli.Get(pending.at("stl_url").get<std::string>());
    REQUIRE(stl);
    CHECK(stl->status == 200);
    REQUIRE(stl->body.size() >= 84);
    std::uint32_t triangles = 0;
    std::memcpy(&triangles, stl->body.data() + 80, 4);
    CHECK(stl->body.size() == 84 + 50 * static_cast<std::size_t>(triangles));

    if (!checked_errors) {
      checked_errors = true;
      auto bad = valid_submission();
      bad["trials"][4] = 200.0;
      auto r = post(cli, eval_path(id), bad.dump());
      REQUIRE(r);
      CHECK(r->status == 422);
      const auto err = json::parse(r->body).at("error");
      CHECK(err.at("code") == "validation");
      REQUIRE(err.at("fields").size() == 1);
      CHECK(err.at("fields")[0].at("field") == "trials[4]");

      auto short_trials = valid_submission();
      short_trials["trials"].erase(0);
      CHECK(post(cli, eval_path(id), short_trials.dump())->status == 422);
      CHECK(post(cli, eval_path(id), "{not json")->status == 400);
      auto conflict = post(cli, eval_path(id + 1), valid_submission().dump());
      REQUIRE(conflict);
      CHECK(conflict->status == 409);
      CHECK(json::parse(conflict->body).at("error").at("code") == "not_pending");
      // rejected submissions leave the design pending
      CHECK(get_json(cli, "/api/v1/design/pending").at("design_id") == id);
    }

    // alternate feasible and unloadable springs
    json body = submissions % 2 == 0 ? valid_submission(72.0) : json{{"loadable", false}};
    auto ok = post(cli, eval_path(id), body.dump());
    REQUIRE(ok);
    CHECK(ok->status == 200);
    CHECK(json::parse(ok->body).at("accepted") == true);
    ++submissions;
    // the same design cannot be answered twice
    REQUIRE(eventually([&] {
      const auto p = get_json(cli, "/api/v1/design/pending");
      return !p.at("pending").get<bool>() || p.at("design_id") != id;
    }));
    CHECK(post(cli, eval_path(id), valid_submission().dump())->status == 409);
  }

  REQUIRE(eventually([&] { return service.status().state == "completed"; }));
  const auto final_status = get_json(cli, "/api/v1/run/status");
  CHECK(final_status.at("state") == "completed");
  CHECK(final_status.at("evaluations") == 11);
  CHECK(final_status.at("pending_design_id").is_null());
  CHECK(get_json(cli, "/api/v1/design/pending").at("pending") == false);
  MESSAGE("operator answered " << submissions << " designs");
  CHECK(submissions >= 3);

  // records, paginated, agree with the log
  const auto log = read_runlog(config.log_path());
  REQUIRE(log.records.size() == 11);
  const auto all = get_json(cli, "/api/v1/records");
  CHECK(all.at("total") == 11);
  CHECK(all.at("limit") == 100);
  CHECK(all.at("records").size() == 11);
  const auto page = get_json(cli, "/api/v1/records?offset=8&limit=5");
  CHECK(page.at("records").size() == 3);
  CHECK(page.at("records")[0].at("design_id") == 8);
  CHECK(get_json(cli, "/api/v1/records?offset=20").at("records").empty());
  std::size_t answered = 0;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    CHECK(fitness::record_from_json(all.at("records")[i]) == r);
    const bool printable = r.printability && r.printability->connected;
    answered += printable;
    // logged designs stay downloadable; unprintable ones have no mesh
    const auto base = "/api/v1/design/" + std::to_string(i);
    CHECK(cli.Get(base + "/bitmap")->status == 200);
    CHECK(cli.Get(base + "/stl")->status == (printable ? 200 : 422));
  }
  CHECK(answered == submissions);
  service.stop();
}

TEST_CASE("stopping mid-run leaves a resumable log") {
  const auto dir = oracle::scratch_dir("service-stop");
  const auto config = human_config(dir);
  std::size_t first_id = 0;
  {
    Service service(config, vae());
    const int port = service.start("127.0.0.1", 0);
    httplib::Client cli("127.0.0.1", port);
    json pending;
    REQUIRE(eventually([&] {
      pending = get_json(cli, "/api/v1/design/pending");
      return pending.at("pending").get<bool>() || service.status().state == "completed";
    }));
    REQUIRE(pending.at("pending").get<bool>());
    first_id = pending.at("design_id").get<std::size_t>();
    service.stop();
    CHECK(service.status().state == "failed");
  }
  const auto partial = read_runlog(config.log_path());
  CHECK(partial.records.size() == first_id);
  REQUIRE(partial.status.has_value());
  CHECK(partial.status->at("state") == "failed");

  Service resumed(config, vae(), true);
  const int port = resumed.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);
  json pending;
  REQUIRE(eventually([&] {
    pending = get_json(cli, "/api/v1/design/pending");
    return pending.at("pending").get<bool>();
  }));
  CHECK(pending.at("design_id") == first_id);
  resumed.stop();
}
