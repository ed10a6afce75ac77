#pragma once

#include <memory>
#include <string>

#include "genspring/latent/vae.hpp"
#include "genspring/runner/config.hpp"
#include "genspring/runner/experiment.hpp"

namespace genspring::runner {

inline constexpr const char* kApiPrefix = "/api/v1";

// HTTP front end of a human-entry run. The run executes on a background
// thread and pauses at every printable design until its measurements are
// POSTed.
//
//   GET  /api/v1/run/status
//   GET  /api/v1/design/pending
//   GET  /api/v1/design/{id}/bitmap        (PGM)
//   GET  /api/v1/design/{id}/stl           (binary STL)
//   POST /api/v1/design/{id}/evaluation    {loadable, broke, trials[10]}
//   GET  /api/v1/records?offset=&limit=
class Service {
 public:
  Service(ExperimentConfig config, latent::VaeModel vae, bool resume = false);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds host:port (0 picks a free port), starts the run and the listener
  // threads, and returns the bound port.
  int start();
  int start(const std::string& host, int port);
  // Blocks until stop() is called or the listener fails.
  void wait();
  // Cancels a pending evaluation, stops listening and joins all threads.
  void stop();

  RunStatus status() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Runs the service on the config's host and port until the process ends.
void serve(const ExperimentConfig& config, bool resume = false);

}  // namespace genspring::runner
