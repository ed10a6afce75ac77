#include "genspring/fitness/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <vector>

#include "genspring/designgen/styles.hpp"
#include "genspring/errors.hpp"
#include "genspring/random.hpp"

namespace genspring::fitness {

extern const char* const kEmbeddedSimulatorJson;

void SimulatorParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("simulator parameter ") + name + " must be positive");
  };
  positive(c1, "c1");
  positive(c2, "c2");
  positive(k_max, "k_max");
  positive(k_frag, "k_frag");
  positive(x0, "x0");
  positive(rail_length, "rail_length");
  if (!(sigma_d >= 0.0) || !std::isfinite(c3) || !std::isfinite(d_unstable)) {
    throw ConfigError("simulator parameters sigma_d, c3, d_unstable are invalid");
  }
  if (!(p_f >= 0.0 && p_f <= 1.0)) throw ConfigError("simulator flip probability p_f must lie in [0,1]");
}

double SimulatorParams::stiffness(const SpringFeatures& f) const {
  if (!(f.path_length > 0.0)) throw ProtocolError("spring path length must be positive");
  const double r = f.min_thickness / f.path_length;
  return c1 * r * r * r;
}

double SimulatorParams::mean_distance(double k) const {
  return std::clamp(c2 * 0.5 * k * x0 * x0, 0.0, rail_length);
}

double SimulatorParams::breakage_probability(double k) const {
  return 1.0 / (1.0 + std::exp(-c3 * (k - k_frag)));
}

SimulatorParams SimulatorParams::defaults() { return from_json(nlohmann::json::parse(kEmbeddedSimulatorJson)); }

SimulatorParams SimulatorParams::from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema", std::string{}) != "genspring.simulator/1") {
      throw ConfigError("simulator config must declare schema genspring.simulator/1");
    }
    SimulatorParams p;
    p.version = j.at("version").get<std::string>();
    p.c1 = j.at("c1").get<double>();
    p.c2 = j.at("c2").get<double>();
    p.c3 = j.at("c3").get<double>();
    p.k_max = j.at("k_max").get<double>();
    p.k_frag = j.at("k_frag").get<double>();
    p.sigma_d = j.at("sigma_d").get<double>();
    p.x0 = j.at("x0").get<double>();
    p.p_f = j.at("p_f").get<double>();
    p.d_unstable = j.at("d_unstable").get<double>();
    p.rail_length = j.value("rail_length", kRailLength);
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed simulator config: ") + e.what());
  }
}

SimulatorParams SimulatorParams::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open simulator config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("simulator config " + path.string() + " is not JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json SimulatorParams::to_json() const {
  return {{"schema", "genspring.simulator/1"},
          {"version", version},
          {"c1", c1},
          {"c2", c2},
          {"c3", c3},
          {"k_max", k_max},
          {"k_frag", k_frag},
          {"sigma_d", sigma_d},
          {"x0", x0},
          {"p_f", p_f},
          {"d_unstable", d_unstable},
          {"rail_length", rail_length}};
}

SpringFeatures extract_features(const designgen::PrintabilityReport& report) {
  if (!report.connected) throw ProtocolError("simulator needs a connected design");
  const auto& bm = report.filtered;
  const std::size_t n = bm.side();
  auto filled = [&](std::size_t r, std::size_t c) { return bm.at(r, c) > 0.5; };

  SpringFeatures f;
  const std::size_t b = designgen::base_strips(n).rows;
  const std::size_t r0 = b < n - b ? b : 0;
  const std::size_t r1 = b < n - b ? n - b : n;
  double thinnest = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t count = 0;
    for (std::size_t c = 0; c < n; ++c) count += filled(r, c) ? 1 : 0;
    f.area += static_cast<double>(count);
    if (r >= r0 && r < r1) thinnest = std::min(thinnest, static_cast<double>(count));
  }
  f.min_thickness = thinnest;

  // Multi-source BFS from the whole top row.
  std::vector<int> dist(n * n, -1);
  std::deque<std::size_t> queue;
  for (std::size_t c = 0; c < n; ++c) {
    if (filled(0, c)) {
      dist[c] = 0;
      queue.push_back(c);
    }
  }
  int best = -1;
  while (!queue.empty()) {
    const std::size_t idx = queue.front();
    queue.pop_front();
    const std::size_t r = idx / n, c = idx % n;
    if (r == n - 1) {
      best = dist[idx];
      break;
    }
    const auto visit = [&](std::size_t rr, std::size_t cc) {
      const std::size_t j = rr * n + cc;
      if (dist[j] < 0 && filled(rr, cc)) {
        dist[j] = dist[idx] + 1;
        queue.push_back(j);
      }
    };
    if (r > 0) visit(r - 1, c);
    if (r + 1 < n) visit(r + 1, c);
    if (c > 0) visit(r, c - 1);
    if (c + 1 < n) visit(r, c + 1);
  }
  if (best < 0) throw ProtocolError("connected design without a top-to-bottom path");
  // Count pixels on the path rather than steps so a straight bar has L = n.
  f.path_length = static_cast<double>(best + 1);
  return f;
}

TrialSet sim_evaluate(const SpringFeatures& features, const SimulatorParams& params, std::uint64_t seed) {
  Rng rng(seed);
  TrialSet t;
  const double k = params.stiffness(features);
  t.loadable = k <= params.k_max;
  if (!t.loadable) return t;

  t.broke = uniform(rng, 0.0, 1.0) < params.breakage_probability(k);
  const double mean = params.mean_distance(k);
  const bool shaky = mean > params.d_unstable;
  for (auto& d : t.distances) {
    const double draw = std::max(0.0, mean + params.sigma_d * standard_normal(rng));
    const bool flipped = uniform(rng, 0.0, 1.0) < (shaky ? params.p_f : 0.0);
    if (draw >= params.rail_length || flipped) continue;
    d = draw;
  }
  return t;
}

}  // namespace genspring::fitness
