#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "genspring/designgen/printability.hpp"

namespace genspring::fitness {

inline constexpr std::size_t kTrialCount = 10;
inline constexpr double kRailLength = 157.0;     // cm
inline constexpr double kTargetDistance = 75.0;  // cm
// More missing trials than this makes a design unstable (rank 5).
inline constexpr std::size_t kMaxMissingTrials = 5;

// Ten launches of one spring. A missing entry is a launch where the car left
// the rail, reached its end, or flipped.
struct TrialSet {
  std::array<std::optional<double>, kTrialCount> distances{};
  bool loadable = true;
  bool broke = false;

  std::size_t missing_count() const noexcept;
  std::size_t observed_count() const noexcept { return kTrialCount - missing_count(); }
  friend bool operator==(const TrialSet&, const TrialSet&) = default;
};

// Mean of |d_i - target|^2 over the observed trials. All missing: ProtocolError.
double raw_fitness(const TrialSet& trials, double target = kTargetDistance);

struct PrintabilityFlags {
  bool visible = false;
  bool connected = false;

  static PrintabilityFlags of(const designgen::PrintabilityReport& report) {
    return {report.visible, report.connected};
  }
  friend bool operator==(const PrintabilityFlags&, const PrintabilityFlags&) = default;
};

enum class Rank : int {
  kBlurry = 1,
  kDisconnected = 2,
  kUnloadable = 3,
  kBroken = 4,
  kUnstable = 5,
  kFeasible = 6,
};

constexpr int to_int(Rank r) noexcept { return static_cast<int>(r); }

// Normalized fitness assigned to each infeasible rank; feasible records are
// scaled into [0, 100] instead.
constexpr double infeasible_fitness(Rank r) noexcept {
  switch (r) {
    case Rank::kBlurry: return 250.0;
    case Rank::kDisconnected: return 200.0;
    case Rank::kUnloadable: return 160.0;
    case Rank::kBroken: return 130.0;
    case Rank::kUnstable: return 110.0;
    case Rank::kFeasible: break;
  }
  return 0.0;
}

inline constexpr double kFeasibleScaleMax = 100.0;

// First violated constraint (visible, connected, loadable, unbroken, stable)
// decides the rank. Trials must be present exactly when the design is
// printable and loadable; anything else is a StateError.
Rank assign_rank(const PrintabilityFlags& printability, bool loadable, const std::optional<TrialSet>& trials);

}  // namespace genspring::fitness
