#include "genspring/runner/service.hpp"

#include <atomic>
#include <cstdio>
#include <optional>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "genspring/designgen/bitmap.hpp"
#include "genspring/designgen/mesh.hpp"
#include "genspring/errors.hpp"
#include "genspring/fitness/backend.hpp"
#include "genspring/fitness/human.hpp"
#include "genspring/runner/runlog.hpp"

namespace genspring::runner {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const std::vector<ValidationError::Field>& fields = {}) {
  json f = json::array();
  for (const auto& field : fields) f.push_back({{"field", field.name}, {"message", field.message}});
  send_json(res, status, {{"error", {{"code", code}, {"message", message}, {"fields", f}}}});
}

std::optional<std::size_t> parse_index(const std::string& text) {
  if (text.empty() || text.size() > 12) return std::nullopt;
  std::size_t v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

struct Service::Impl {
  ExperimentConfig config;
  std::shared_ptr<fitness::HumanEntryBackend> backend = std::make_shared<fitness::HumanEntryBackend>();
  Experiment experiment;
  bool resume;
  httplib::Server server;
  std::thread runner;
  std::thread listener;
  std::atomic<bool> stopped{false};

  Impl(ExperimentConfig c, latent::VaeModel vae, bool r)
      : config(std::move(c)), experiment(checked(config), std::move(vae), backend), resume(r) {
    routes();
  }

  static ExperimentConfig checked(const ExperimentConfig& c) {
    if (c.backend != fitness::BackendMode::kHumanEntry) throw ConfigError("the service needs backend \"human\"");
    return c;
  }

  std::vector<fitness::EvaluationRecord> logged_records() const {
    const auto path = config.log_path();
    if (!std::filesystem::exists(path)) return {};
    try {
      return read_runlog(path).records;
    } catch (const ProtocolError&) {
      return {};
    }
  }

  // Filtered bitmap and printability of a pending or logged design.
  std::optional<designgen::PrintabilityReport> design(std::size_t id) const {
    if (auto p = backend->pending(); p && p->design_id == id) return p->report;
    const auto records = logged_records();
    if (id >= records.size() || records[id].bitmap_side == 0) return std::nullopt;
    const auto& r = records[id];
    designgen::PrintabilityReport report;
    report.filtered = designgen::unpack_bits(r.bitmap_side, r.bitmap_bits);
    report.visible = r.printability && r.printability->visible;
    report.connected = r.printability && r.printability->connected;
    return report;
  }

  json status_json() const {
    const RunStatus s = experiment.status();
    const auto pending = backend->pending();
    return {{"state", pending && s.state == "running" ? "waiting" : s.state},
            {"protocol", to_string(config.protocol)},
            {"backend", fitness::to_string(config.backend)},
            {"evaluations", s.evaluations},
            {"initial_size", s.initial_size},
            {"budget", s.budget},
            {"total", s.initial_size + s.budget},
            {"iteration", s.iteration},
            {"y_best", optional_json(s.y_best)},
            {"pending_design_id", pending ? json(pending->design_id) : json(nullptr)},
            {"error", s.error.empty() ? json(nullptr) : json(s.error)}};
  }

  void routes() {
    const std::string api = kApiPrefix;
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get(api + "/run/status",
               [this](const httplib::Request&, httplib::Response& res) { send_json(res, 200, status_json()); });

    server.Get(api + "/design/pending", [this](const httplib::Request&, httplib::Response& res) {
      const auto p = backend->pending();
      const RunStatus s = experiment.status();
      if (!p) {
        send_json(res, 200, {{"pending", false}, {"state", s.state}});
        return;
      }
      const std::string base = std::string(kApiPrefix) + "/design/" + std::to_string(p->design_id);
      send_json(res, 200,
                {{"pending", true},
                 {"design_id", p->design_id},
                 {"iteration", s.iteration},
                 {"ei_value", s.pending_design_id == p->design_id ? optional_json(s.pending_ei) : json(nullptr)},
                 {"origin", s.pending_design_id == p->design_id ? s.pending_origin : std::string{}},
                 {"latent", p->latent.vector()},
                 {"side", p->report.filtered.side()},
                 {"bitmap_url", base + "/bitmap"},
                 {"stl_url", base + "/stl"}});
    });

    server.Get(R"(/api/v1/design/([^/]+)/bitmap)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = parse_index(req.matches[1]);
      if (!id) return send_error(res, 400, "bad_id", "design id must be a non-negative integer");
      const auto report = design(*id);
      if (!report) return send_error(res, 404, "unknown_design", "no design " + std::to_string(*id));
      res.status = 200;
      res.set_content(designgen::encode_pgm(report->filtered), "image/x-portable-graymap");
    });

    server.Get(R"(/api/v1/design/([^/]+)/stl)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = parse_index(req.matches[1]);
      if (!id) return send_error(res, 400, "bad_id", "design id must be a non-negative integer");
      const auto report = design(*id);
      if (!report) return send_error(res, 404, "unknown_design", "no design " + std::to_string(*id));
      if (!report->connected) return send_error(res, 422, "not_printable", "design is not printable");
      const auto mesh = designgen::extrude_to_mesh(*report, config.mesh.depth_mm, config.mesh.pixel_mm);
      res.status = 200;
      res.set_header("Content-Disposition", "attachment; filename=\"design_" + std::to_string(*id) + ".stl\"");
      res.set_content(designgen::encode_stl(mesh), "model/stl");
    });

    server.Post(R"(/api/v1/design/([^/]+)/evaluation)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = parse_index(req.matches[1]);
      if (!id) return send_error(res, 400, "bad_id", "design id must be a non-negative integer");
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        return send_error(res, 400, "bad_json", std::string("request body is not JSON: ") + e.what());
      }
      try {
        const auto submission = fitness::parse_submission(body);
        const auto outcome = backend->submit(*id, submission);
        if (outcome == fitness::HumanEntryBackend::SubmitStatus::kNotPending) {
          return send_error(res, 409, "not_pending", "design " + std::to_string(*id) + " is not awaiting measurements");
        }
        send_json(res, 200, {{"accepted", true}, {"design_id", *id}});
      } catch (const ValidationError& e) {
        send_error(res, 422, "validation", e.what(), e.fields());
      }
    });

    server.Get(api + "/records", [this](const httplib::Request& req, httplib::Response& res) {
      std::size_t offset = 0, limit = 100;
      if (req.has_param("offset")) {
        const auto v = parse_index(req.get_param_value("offset"));
        if (!v) return send_error(res, 400, "bad_query", "offset must be a non-negative integer");
        offset = *v;
      }
      if (req.has_param("limit")) {
        const auto v = parse_index(req.get_param_value("limit"));
        if (!v || *v == 0 || *v > 1000) return send_error(res, 400, "bad_query", "limit must lie in [1, 1000]");
        limit = *v;
      }
      const auto records = logged_records();
      json page = json::array();
      for (std::size_t i = offset; i < records.size() && i < offset + limit; ++i) {
        page.push_back(fitness::to_json(records[i]));
      }
      send_json(res, 200, {{"total", records.size()}, {"offset", offset}, {"limit", limit}, {"records", page}});
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    });
  }
};

Service::Service(ExperimentConfig config, latent::VaeModel vae, bool resume)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(vae), resume)) {}

Service::~Service() { stop(); }

int Service::start() { return start(impl_->config.service.host, impl_->config.service.port); }

int Service::start(const std::string& host, int port) {
  Impl& s = *impl_;
  const int bound = port == 0 ? s.server.bind_to_any_port(host) : (s.server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  s.listener = std::thread([&s] { s.server.listen_after_bind(); });
  s.runner = std::thread([&s] {
    try {
      s.experiment.run(s.config.log_path(), s.resume);
    } catch (const std::exception& e) {
      if (!s.stopped) std::fprintf(stderr, "genspring: run failed: %s\n", e.what());
    }
  });
  s.server.wait_until_ready();
  return bound;
}

void Service::wait() {
  if (impl_->listener.joinable()) impl_->listener.join();
}

void Service::stop() {
  if (!impl_) return;
  Impl& s = *impl_;
  s.stopped = true;
  s.backend->cancel();
  s.server.stop();
  if (s.runner.joinable()) s.runner.join();
  if (s.listener.joinable()) s.listener.join();
}

RunStatus Service::status() const { return impl_->experiment.status(); }

void serve(const ExperimentConfig& config, bool resume) {
  Service service(config, prepare_vae(config), resume);
  const int port = service.start();
  std::printf("genspring: serving %s on http://%s:%d%s\n", to_string(config.protocol).c_str(),
              config.service.host.c_str(), port, kApiPrefix);
  std::fflush(stdout);
  service.wait();
}

}  // namespace genspring::runner
