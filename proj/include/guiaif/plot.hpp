#pragma once

#include <filesystem>
#include <string>

#include "guiaif/harness.hpp"

namespace guiaif {

struct PlotInputs {
  TrainLog log;
  AccuracyMatrix matrix;
  double alpha = 15.0;  ///< weights for the trend scatter x axis
  double gamma = 0.5;
};

/// Reads trainlog.csv, matrix.csv and, if present, the trend weights from
/// metrics.json. Throws InputError when a file is missing or the log is empty.
PlotInputs load_plot_inputs(const std::filesystem::path& run_dir);

std::string rewards_svg(const TrainLog& log);
/// One <circle class="pt"> per log record plus a least-squares line.
std::string trend_svg(const TrainLog& log, double alpha, double gamma);
std::string transfer_svg(const AccuracyMatrix& m);

/// Writes rewards.svg, trend.svg and transfer.svg into run_dir.
void plot_run(const std::filesystem::path& run_dir);

}  // namespace guiaif
