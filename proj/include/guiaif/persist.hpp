#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "guiaif/harness.hpp"
#include <json.hpp>

namespace guiaif {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

/// Shortest decimal text that parses back to the same double. Throws
/// NumericalError for NaN or infinity.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);  // throws InputError

std::string matrix_to_csv(const AccuracyMatrix& m);
AccuracyMatrix matrix_from_csv(std::string_view text);  // throws InputError

std::string trainlog_to_csv(const TrainLog& log);
TrainLog trainlog_from_csv(std::string_view text);  // throws InputError

/// final_average, per-row averages, forward transfer, forgetting and the
/// task-1 reward trend (null when undefined).
nlohmann::json metrics_json(const RunResult& result, const RunConfig& cfg);

struct RunTimes {
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
};

/// Config echo plus everything needed to rerun: seed, task fixtures with their
/// derived seeds, effective weights and simulator constants.
nlohmann::json manifest_json(const RunConfig& cfg, std::uint64_t seed, const RunTimes& times);

/// manifest.json, matrix.csv, trainlog.csv and metrics.json under dir.
void write_run(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& result,
               const RunTimes& times);

struct SummaryRow {
  std::string cell;
  AblationFlags flags;
  double alpha_scale = 1.0;
  double gamma_scale = 1.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  std::size_t n_seeds = 0;
  double mean_final = 0.0;
  double std_final = 0.0;  ///< sample std over seeds, 0 for a single seed
};

std::vector<SummaryRow> summarize(const std::vector<AblationCell>& cells);
std::string summary_to_csv(const std::vector<SummaryRow>& rows);

/// One directory per cell with a seed_<s> run directory per seed, plus
/// summary.csv and a top-level manifest.json.
void write_ablation(const std::filesystem::path& dir, const RunConfig& base,
                    const std::vector<AblationCell>& cells, const RunTimes& times);

}  // namespace guiaif
