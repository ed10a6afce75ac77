#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genspring/ego/loop.hpp"
#include "genspring/fitness/records.hpp"

namespace genspring::runner {

inline constexpr const char* kRunLogSchema = "genspring.runlog/1";

// Line kinds: config (first), record, initialized, iteration, status.
nlohmann::json config_line(const nlohmann::json& snapshot);
nlohmann::json record_line(const fitness::EvaluationRecord& record);
nlohmann::json initialized_line(const ego::EgoState& state);
nlohmann::json iteration_line(const ego::IterationTrace& trace);
nlohmann::json status_line(const std::string& state, std::size_t evaluations, double y_best,
                           const std::string& error = {});

struct RunLogContents {
  nlohmann::json config;  // snapshot from the config line
  std::vector<fitness::EvaluationRecord> records;
  std::vector<nlohmann::json> iterations;
  std::optional<nlohmann::json> initialized;
  std::optional<nlohmann::json> status;  // last status line
  std::vector<std::string> lines;        // every complete line, in order
};

// Reads every complete line; a torn final line (no newline) is ignored.
// Records are returned renormalized over the whole log.
RunLogContents read_runlog(const std::filesystem::path& path);

// Append-only writer. When resuming, the lines already on disk are expected
// to be re-emitted in order: each one must match byte for byte, and only
// lines past the existing prefix are appended.
class RunLogWriter {
 public:
  static RunLogWriter create(const std::filesystem::path& path);
  // Keeps the complete lines of an existing log, dropping a torn tail and any
  // trailing "failed" status so the run can continue.
  static RunLogWriter resume(const std::filesystem::path& path);

  void emit(const nlohmann::json& line);
  std::size_t replay_remaining() const noexcept { return expected_.size() - cursor_; }
  bool replaying() const noexcept { return cursor_ < expected_.size(); }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  RunLogWriter(std::filesystem::path path, std::vector<std::string> expected);

  std::filesystem::path path_;
  std::vector<std::string> expected_;
  std::size_t cursor_ = 0;
  std::ofstream out_;
};

}  // namespace genspring::runner
