// Command-line entry point: run, ablate, plot, verify.
#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "guiaif/config.hpp"
#include "guiaif/errors.hpp"
#include "guiaif/harness.hpp"
#include "guiaif/persist.hpp"
#include "guiaif/plot.hpp"
#include "guiaif/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

enum class Level { kError = 0, kInfo = 1, kDebug = 2 };

Level log_level() {
  const char* env = std::getenv("LOG_LEVEL");
  const std::string v = env ? env : "info";
  if (v == "error") return Level::kError;
  if (v == "debug") return Level::kDebug;
  return Level::kInfo;
}

void log(Level level, const std::string& msg) {
  static const Level threshold = log_level();
  if (level > threshold) return;
  constexpr const char* kNames[] = {"error", "info", "debug"};
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << msg << "\n";
}

guiaif::RunConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
  guiaif::RunConfig cfg = guiaif::load_run_config(path);
  if (seed) cfg.seeds = {*seed};
  return cfg;
}

int cmd_run(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  const guiaif::RunConfig cfg = load(config, seed);
  const std::uint64_t s = cfg.seeds.front();
  log(Level::kInfo, "run: scenario " + guiaif::to_string(cfg.scenario) + ", seed " + std::to_string(s));
  guiaif::RunTimes times{std::chrono::system_clock::now(), {}};
  const guiaif::RunResult result = guiaif::run_continual(cfg, s);
  times.finished = std::chrono::system_clock::now();
  guiaif::write_run(out, cfg, result, times);
  log(Level::kInfo, "final average accuracy " + guiaif::format_double(guiaif::final_average(result.matrix)));
  log(Level::kDebug, "wrote " + out);
  return kExitOk;
}

int cmd_ablate(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  const guiaif::RunConfig cfg = load(config, seed);
  log(Level::kInfo, "ablate: " + std::to_string(guiaif::ablation_grid(cfg).size()) + " cells x " +
                        std::to_string(cfg.seeds.size()) + " seeds");
  guiaif::RunTimes times{std::chrono::system_clock::now(), {}};
  const auto cells = guiaif::ablate(cfg);
  times.finished = std::chrono::system_clock::now();
  guiaif::write_ablation(out, cfg, cells, times);
  for (const auto& row : guiaif::summarize(cells)) {
    log(Level::kDebug, row.cell + " mean " + guiaif::format_double(row.mean_final));
  }
  return kExitOk;
}

int cmd_plot(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) throw guiaif::InputError("not a directory: '" + dir + "'");
  guiaif::plot_run(dir);
  log(Level::kInfo, "wrote rewards.svg, trend.svg, transfer.svg");
  return kExitOk;
}

int cmd_verify(const std::string& mutate) {
  const guiaif::OracleSubjects subjects =
      mutate.empty() ? guiaif::OracleSubjects{} : guiaif::mutated_subjects(mutate);
  if (!mutate.empty()) log(Level::kInfo, "verify: subjects mutated with " + mutate);
  const auto results = guiaif::run_oracles(subjects);
  const guiaif::OracleResult* first_failure = nullptr;
  for (const auto& r : results) {
    std::cout << guiaif::format_oracle_line(r) << "\n";
    if (!r.pass && !first_failure) first_failure = &r;
  }
  std::cout.flush();
  if (first_failure) {
    std::cerr << "verify failed: " << first_failure->name << "\n";
    return kExitVerify;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GUI grounding fine-tuning simulator with anchoring rewards"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string config, out, run_dir, mutate;

  auto* run = app.add_subcommand("run", "Train one continual sequence and write its results");
  run->add_option("config", config, "JSON config file")->required();
  run->add_option("out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Override the master seed");

  auto* ablate = app.add_subcommand("ablate", "Run the reward/KL ablation grid");
  ablate->add_option("config", config, "JSON config file")->required();
  ablate->add_option("out", out, "Output directory")->required();
  ablate->add_option("--seed", seed, "Run only this seed");

  auto* plot = app.add_subcommand("plot", "Render SVG plots from a run directory");
  plot->add_option("run_dir", run_dir, "Directory written by run")->required();

  auto* verify = app.add_subcommand("verify", "Check reward and gradient code against brute-force oracles");
  verify->add_option("--mutate", mutate, "Perturb one constant (negative control)")
      ->check(CLI::IsMember(guiaif::mutation_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*run) return cmd_run(config, out, seed);
    if (*ablate) return cmd_ablate(config, out, seed);
    if (*plot) return cmd_plot(run_dir);
    if (*verify) return cmd_verify(mutate);
  } catch (const guiaif::NumericalError& e) {
    log(Level::kError, std::string("numerical abort: ") + e.what());
    return kExitNumerical;
  } catch (const guiaif::ConfigError& e) {
    log(Level::kError, std::string("config: ") + e.what());
    return kExitInput;
  } catch (const guiaif::InputError& e) {
    log(Level::kError, std::string("input: ") + e.what());
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    log(Level::kError, std::string("filesystem: ") + e.what());
    return kExitInput;
  }
  return kExitInput;
}
