#include "genspring/fitness/trials.hpp"

#include <algorithm>

#include "genspring/errors.hpp"

namespace genspring::fitness {

std::size_t TrialSet::missing_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(distances.begin(), distances.end(), [](const auto& d) { return !d.has_value(); }));
}

double raw_fitness(const TrialSet& trials, double target) {
  double sum = 0.0;
  std::size_t observed = 0;
  for (const auto& d : trials.distances) {
    if (!d) continue;
    const double e = *d - target;
    sum += e * e;
    ++observed;
  }
  if (observed == 0) throw ProtocolError("fitness requested for a trial set with every launch missing");
  return sum / static_cast<double>(observed);
}

Rank assign_rank(const PrintabilityFlags& printability, bool loadable, const std::optional<TrialSet>& trials) {
  if (printability.connected && !printability.visible) {
    throw StateError("a connected design must be visible");
  }
  const bool printable = printability.visible && printability.connected;
  if (trials && (!printable || !loadable)) {
    throw StateError("trials recorded for a design that was never launched");
  }
  if (trials && trials->loadable != loadable) throw StateError("loadable flag disagrees with the trial set");
  if (!printability.visible) return Rank::kBlurry;
  if (!printability.connected) return Rank::kDisconnected;
  if (!loadable) return Rank::kUnloadable;
  if (!trials) throw StateError("a loadable design needs its trial set");
  if (trials->broke) return Rank::kBroken;
  if (trials->missing_count() > kMaxMissingTrials) return Rank::kUnstable;
  return Rank::kFeasible;
}

}  // namespace genspring::fitness
