// genspring command-line driver.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "genspring/designgen/styles.hpp"
#include "genspring/errors.hpp"
#include "genspring/latent/vae.hpp"
#include "genspring/runner/config.hpp"
#include "genspring/runner/experiment.hpp"
#include "genspring/runner/report.hpp"
#include "genspring/runner/service.hpp"

namespace fs = std::filesystem;
using namespace genspring;

namespace {

void say(const std::string& line) { std::cerr << "genspring: " << line << '\n'; }

runner::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return runner::ExperimentConfig::preset(runner::Protocol::kExperiment1);
  return runner::ExperimentConfig::load(path);
}

int gen_corpus(const std::string& out, std::size_t per_style, std::uint64_t seed, std::size_t side) {
  const auto corpus = designgen::sample_training_corpus(per_style, seed, side);
  designgen::write_corpus(corpus, out);
  say("wrote " + std::to_string(corpus.size()) + " bitmaps and manifest.csv to " + out);
  return 0;
}

int train_vae(const std::string& config_path, const std::string& out) {
  runner::ExperimentConfig config = load_config(config_path);
  if (!out.empty()) config.vae.checkpoint = fs::absolute(out).string();
  const fs::path path = config.checkpoint_path();
  if (fs::exists(path)) fs::remove(path);
  config.vae.train_if_missing = true;
  runner::prepare_vae(config, say);
  return 0;
}

int run(const std::string& config_path, const std::string& resume_log) {
  runner::ExperimentConfig config = load_config(config_path);
  const bool resume = !resume_log.empty();
  if (resume) config.log = fs::absolute(resume_log).string();
  runner::Experiment experiment(config, runner::prepare_vae(config, say));
  const auto summary = experiment.run(config.log_path(), resume);
  const double best = summary.y_best_trace.empty() ? 0.0 : summary.y_best_trace.back();
  std::printf("evaluations %zu  y_best %.6g  initial feasible mse %s  final feasible mse %s\nlog %s\n",
              summary.records.size(), best,
              summary.initial_feasible_mse ? std::to_string(*summary.initial_feasible_mse).c_str() : "none",
              summary.final_feasible_mse ? std::to_string(*summary.final_feasible_mse).c_str() : "none",
              config.log_path().string().c_str());
  return 0;
}

int serve(const std::string& config_path, bool resume) {
  runner::serve(load_config(config_path), resume);
  return 0;
}

int report(const std::string& log, const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(log).parent_path() / "report" : fs::path(out);
  const auto files = runner::export_report(log, dir);
  std::printf("%zu rows -> %s\n%zu printable designs -> %s\n", files.rows, files.csv.string().c_str(),
              files.gallery_images, files.gallery.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space generative spring design with regressing Kriging and EGO"};
  app.require_subcommand(1);

  std::string corpus_out = "corpus";
  std::size_t per_style = 100;
  std::uint64_t corpus_seed = 7;
  std::size_t side = designgen::kDeskSide;
  auto* gen = app.add_subcommand("gen-corpus", "Write a parametric-style training corpus as PGM files");
  gen->add_option("-o,--out", corpus_out, "Output directory")->capture_default_str();
  gen->add_option("-n,--per-style", per_style, "Samples per style")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("-s,--seed", corpus_seed, "Corpus seed")->capture_default_str();
  gen->add_option("--side", side, "Bitmap side in pixels")->capture_default_str()->check(CLI::Range(16, 1024));

  std::string config_path;
  std::string vae_out;
  auto* train = app.add_subcommand("train-vae", "Train the VAE described by a config and save the checkpoint");
  train->add_option("-c,--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  train->add_option("-o,--out", vae_out, "Checkpoint path (overrides the config)");

  std::string resume_log;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment unattended (simulator backend)");
  run_cmd->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--resume", resume_log, "Resume from this run log")->check(CLI::ExistingFile);

  bool serve_resume = false;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a human-entry run over HTTP");
  serve_cmd->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  serve_cmd->add_flag("--resume", serve_resume, "Continue the config's existing run log");

  std::string log_path;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Export CSV and a design gallery from a run log");
  report_cmd->add_option("log", log_path, "Run log (JSONL)")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("-o,--out", report_out, "Output directory (default: <log dir>/report)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_corpus(corpus_out, per_style, corpus_seed, side);
    if (*train) return train_vae(config_path, vae_out);
    if (*run_cmd) return run(config_path, resume_log);
    if (*serve_cmd) return serve(config_path, serve_resume);
    if (*report_cmd) return report(log_path, report_out);
  } catch (const ConfigError& e) {
    say(std::string("config error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    say(std::string("error: ") + e.what());
    return 1;
  }
  return 0;
}
