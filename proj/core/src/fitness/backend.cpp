#include "genspring/fitness/backend.hpp"

#include "genspring/errors.hpp"
#include "genspring/random.hpp"

namespace genspring::fitness {

std::string to_string(BackendMode mode) { return mode == BackendMode::kSimulator ? "simulator" : "human"; }

BackendMode backend_mode_from_string(const std::string& name) {
  if (name == "simulator") return BackendMode::kSimulator;
  if (name == "human" || name == "human-entry") return BackendMode::kHumanEntry;
  throw ConfigError("unknown evaluator backend '" + name + "' (expected simulator or human)");
}

SimulatorBackend::SimulatorBackend(SimulatorParams params, std::uint64_t seed) : params_(std::move(params)), seed_(seed) {
  params_.validate();
}

TrialSet SimulatorBackend::evaluate(std::size_t design_id, const latent::LatentVector&,
                                    const designgen::PrintabilityReport& report) {
  return sim_evaluate(extract_features(report), params_, derive_seed(seed_, 0x51u, design_id));
}

TrialSet HumanEntryBackend::evaluate(std::size_t design_id, const latent::LatentVector& latent,
                                     const designgen::PrintabilityReport& report) {
  std::unique_lock lock(mutex_);
  if (cancelled_) throw StateError("human entry was cancelled");
  pending_ = PendingDesign{design_id, latent, report};
  result_.reset();
  cv_.notify_all();
  cv_.wait(lock, [&] { return result_.has_value() || cancelled_; });
  pending_.reset();
  if (!result_) throw StateError("human entry was cancelled");
  TrialSet t = *result_;
  result_.reset();
  cv_.notify_all();
  return t;
}

HumanEntryBackend::SubmitStatus HumanEntryBackend::submit(std::size_t design_id, const HumanSubmission& submission) {
  std::lock_guard lock(mutex_);
  if (!pending_ || pending_->design_id != design_id || result_) return SubmitStatus::kNotPending;
  result_ = human_evaluate(design_id, submission);
  cv_.notify_all();
  return SubmitStatus::kAccepted;
}

std::optional<PendingDesign> HumanEntryBackend::pending() const {
  std::lock_guard lock(mutex_);
  if (result_) return std::nullopt;
  return pending_;
}

void HumanEntryBackend::cancel() {
  std::lock_guard lock(mutex_);
  cancelled_ = true;
  cv_.notify_all();
}

bool HumanEntryBackend::wait_for_pending(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  return cv_.wait_for(lock, timeout, [&] { return (pending_.has_value() && !result_) || cancelled_; }) && !cancelled_;
}

}  // namespace genspring::fitness
