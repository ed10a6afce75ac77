#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "genspring/designgen/printability.hpp"
#include "genspring/fitness/human.hpp"
#include "genspring/fitness/simulator.hpp"
#include "genspring/latent/latent_vector.hpp"

namespace genspring::fitness {

enum class BackendMode { kSimulator, kHumanEntry };

std::string to_string(BackendMode mode);
BackendMode backend_mode_from_string(const std::string& name);

// Supplies the physical outcome for a printable design.
class EvaluatorBackend {
 public:
  virtual ~EvaluatorBackend() = default;
  virtual BackendMode mode() const noexcept = 0;
  virtual TrialSet evaluate(std::size_t design_id, const latent::LatentVector& latent,
                            const designgen::PrintabilityReport& report) = 0;
};

class SimulatorBackend final : public EvaluatorBackend {
 public:
  SimulatorBackend(SimulatorParams params, std::uint64_t seed);

  BackendMode mode() const noexcept override { return BackendMode::kSimulator; }
  TrialSet evaluate(std::size_t design_id, const latent::LatentVector& latent,
                    const designgen::PrintabilityReport& report) override;
  const SimulatorParams& params() const noexcept { return params_; }

 private:
  SimulatorParams params_;
  std::uint64_t seed_;
};

struct PendingDesign {
  std::size_t design_id = 0;
  latent::LatentVector latent;
  designgen::PrintabilityReport report;
};

// Blocks the run until an operator submits measurements for the design it is
// waiting on. submit() and pending() are safe to call from other threads.
class HumanEntryBackend final : public EvaluatorBackend {
 public:
  enum class SubmitStatus { kAccepted, kNotPending };

  BackendMode mode() const noexcept override { return BackendMode::kHumanEntry; }
  TrialSet evaluate(std::size_t design_id, const latent::LatentVector& latent,
                    const designgen::PrintabilityReport& report) override;

  // Throws ValidationError for a malformed submission; a well-formed one for a
  // design that is not awaiting measurements is rejected with kNotPending.
  SubmitStatus submit(std::size_t design_id, const HumanSubmission& submission);
  std::optional<PendingDesign> pending() const;
  // Wakes a blocked evaluate(), which then throws StateError.
  void cancel();
  bool wait_for_pending(std::chrono::milliseconds timeout) const;

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::optional<PendingDesign> pending_;
  std::optional<TrialSet> result_;
  bool cancelled_ = false;
};

}  // namespace genspring::fitness
