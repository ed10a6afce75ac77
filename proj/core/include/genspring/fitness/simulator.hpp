#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "genspring/designgen/printability.hpp"
#include "genspring/fitness/trials.hpp"

namespace genspring::fitness {

// Geometry summary of a printable design, in pixels.
struct SpringFeatures {
  double min_thickness = 0.0;  // thinnest row of material between the bases
  double path_length = 0.0;    // shortest 4-connected walk from top to bottom row
  double area = 0.0;           // filled pixels

  friend bool operator==(const SpringFeatures&, const SpringFeatures&) = default;
};

// Launcher stand-in. Stiffness k = c1 (t/L)^3; the spring is loadable when
// k <= k_max, stores E = k x0^2 / 2 and sends the car c2 E cm on average.
struct SimulatorParams {
  std::string version;
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double k_max = 1.0;
  double k_frag = 1.0;
  double sigma_d = 1.0;
  double x0 = 1.0;
  double p_f = 0.0;
  double d_unstable = kRailLength;
  double rail_length = kRailLength;

  void validate() const;
  double stiffness(const SpringFeatures& f) const;
  double mean_distance(double k) const;
  double breakage_probability(double k) const;

  static SimulatorParams defaults();
  static SimulatorParams from_json(const nlohmann::json& j);
  static SimulatorParams load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Requires a connected report; otherwise ProtocolError.
SpringFeatures extract_features(const designgen::PrintabilityReport& report);

// Ten seeded launches. An unloadable spring yields loadable=false and no
// distances.
TrialSet sim_evaluate(const SpringFeatures& features, const SimulatorParams& params, std::uint64_t seed);

}  // namespace genspring::fitness
