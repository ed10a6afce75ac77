#include "genspring/runner/runlog.hpp"

#include <sstream>

#include "genspring/errors.hpp"

namespace genspring::runner {

using nlohmann::json;

namespace {

json model_summary(const kriging::Hyperparameters& hp, double mu, double sigma2, double sigma2_ri) {
  return {{"theta", hp.theta}, {"lambda", hp.lambda}, {"mu", mu}, {"sigma2", sigma2}, {"sigma2_ri", sigma2_ri}};
}

json proposal_json(const ego::InfillProposal& p) {
  return {{"latent", p.latent.vector()},
          {"ei", p.ei_value},
          {"kind", ego::to_string(p.kind)},
          {"degenerate", p.degenerate}};
}

std::vector<std::string> complete_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot open run log " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t pos = text.find('\n'); pos != std::string::npos; pos = text.find('\n', start)) {
    if (pos > start) lines.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return lines;
}

}  // namespace

json config_line(const json& snapshot) {
  return {{"type", "config"}, {"schema", kRunLogSchema}, {"config", snapshot}};
}

json record_line(const fitness::EvaluationRecord& record) {
  return {{"type", "record"}, {"index", record.design_id}, {"record", fitness::to_json(record)}};
}

json initialized_line(const ego::EgoState& state) {
  const auto& m = state.model;
  return {{"type", "initialized"},
          {"count", state.records.size()},
          {"model", model_summary(m.hyperparameters(), m.mu_hat(), m.sigma2_hat(), m.sigma2_ri_hat())},
          {"y_best", state.y_best}};
}

json iteration_line(const ego::IterationTrace& t) {
  json perturbations = json::array();
  for (const auto& p : t.perturbations) perturbations.push_back(proposal_json(p));
  return {{"type", "iteration"},
          {"iteration", t.iteration},
          {"candidate", proposal_json(t.candidate)},
          {"perturbations", perturbations},
          {"design_ids", t.design_ids},
          {"evaluated", t.evaluated},
          {"model", model_summary(t.hyperparameters, t.mu_hat, t.sigma2_hat, t.sigma2_ri_hat)},
          {"y_best", t.y_best}};
}

json status_line(const std::string& state, std::size_t evaluations, double y_best, const std::string& error) {
  json j = {{"type", "status"}, {"state", state}, {"evaluations", evaluations}, {"y_best", y_best}};
  if (!error.empty()) j["error"] = error;
  return j;
}

RunLogContents read_runlog(const std::filesystem::path& path) {
  RunLogContents out;
  out.lines = complete_lines(path);
  for (std::size_t i = 0; i < out.lines.size(); ++i) {
    json j;
    try {
      j = json::parse(out.lines[i]);
    } catch (const json::exception& e) {
      throw ProtocolError("run log line " + std::to_string(i + 1) + " is not JSON: " + e.what());
    }
    const std::string type = j.value("type", std::string{});
    if (i == 0) {
      if (type != "config" || j.value("schema", std::string{}) != kRunLogSchema) {
        throw ProtocolError("run log must start with a " + std::string(kRunLogSchema) + " config line");
      }
      out.config = j.at("config");
      continue;
    }
    if (type == "record") {
      auto r = fitness::record_from_json(j.at("record"));
      if (r.design_id != out.records.size()) throw ProtocolError("run log record indices are not consecutive");
      out.records.push_back(std::move(r));
    } else if (type == "iteration") {
      out.iterations.push_back(j);
    } else if (type == "initialized") {
      out.initialized = j;
    } else if (type == "status") {
      out.status = j;
    } else {
      throw ProtocolError("run log line " + std::to_string(i + 1) + " has unknown type '" + type + "'");
    }
  }
  if (out.lines.empty()) throw ProtocolError("run log " + path.string() + " is empty");
  fitness::normalized_fitness(out.records);
  return out;
}

RunLogWriter::RunLogWriter(std::filesystem::path path, std::vector<std::string> expected)
    : path_(std::move(path)), expected_(std::move(expected)) {}

RunLogWriter RunLogWriter::create(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  RunLogWriter w(path, {});
  w.out_.open(path, std::ios::binary | std::ios::trunc);
  if (!w.out_) throw StateError("cannot create run log " + path.string());
  return w;
}

RunLogWriter RunLogWriter::resume(const std::filesystem::path& path) {
  std::vector<std::string> lines = complete_lines(path);
  while (!lines.empty()) {
    const json j = json::parse(lines.back(), nullptr, false);
    if (j.is_discarded() || (j.value("type", std::string{}) == "status" && j.value("state", std::string{}) == "failed")) {
      lines.pop_back();
    } else {
      break;
    }
  }
  {
    std::ofstream rewrite(path, std::ios::binary | std::ios::trunc);
    if (!rewrite) throw StateError("cannot rewrite run log " + path.string());
    for (const auto& l : lines) rewrite << l << '\n';
  }
  RunLogWriter w(path, std::move(lines));
  w.out_.open(path, std::ios::binary | std::ios::app);
  if (!w.out_) throw StateError("cannot append to run log " + path.string());
  return w;
}

void RunLogWriter::emit(const json& line) {
  const std::string text = line.dump();
  if (cursor_ < expected_.size()) {
    if (expected_[cursor_] != text) {
      throw StateError("resumed run diverged from the log at line " + std::to_string(cursor_ + 1));
    }
    ++cursor_;
    return;
  }
  out_ << text << '\n';
  out_.flush();
  if (!out_) throw StateError("failed writing run log " + path_.string());
}

}  // namespace genspring::runner
