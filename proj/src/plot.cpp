#include "guiaif/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <span>
#include <vector>

#include "guiaif/errors.hpp"
#include "guiaif/persist.hpp"

namespace guiaif {

namespace {

constexpr double kWidth = 640.0;
constexpr double kPanelHeight = 180.0;
constexpr double kMargin = 48.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  static Range of(std::span<const double> v) {
    Range r{*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
    if (r.hi - r.lo < 1e-12) {
      r.lo -= 0.5;
      r.hi += 0.5;
    }
    return r;
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string header(double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "start") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
}

std::string axes(double top, double bottom, const Range& xr, const Range& yr) {
  std::string s = "<path d=\"M" + num(kMargin) + " " + num(top) + " V" + num(bottom) + " H" +
                  num(kWidth - kMargin / 2) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += text(kMargin - 4, top + 10, label(yr.hi), "end");
  s += text(kMargin - 4, bottom, label(yr.lo), "end");
  s += text(kMargin, bottom + 14, label(xr.lo));
  s += text(kWidth - kMargin / 2, bottom + 14, label(xr.hi), "end");
  return s;
}

}  // namespace

PlotInputs load_plot_inputs(const std::filesystem::path& run_dir) {
  PlotInputs in;
  in.log = trainlog_from_csv(read_file(run_dir / "trainlog.csv"));
  if (in.log.empty()) throw InputError("trainlog.csv has no records");
  in.matrix = matrix_from_csv(read_file(run_dir / "matrix.csv"));
  if (in.matrix.rows() == 0) throw InputError("matrix.csv has no rows");
  const auto metrics_path = run_dir / "metrics.json";
  if (std::filesystem::exists(metrics_path)) {
    try {
      const auto j = nlohmann::json::parse(read_file(metrics_path));
      if (j.contains("trend_weights")) {
        in.alpha = j["trend_weights"].at("alpha").get<double>();
        in.gamma = j["trend_weights"].at("gamma").get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("metrics.json: ") + e.what());
    }
  }
  return in;
}

std::string rewards_svg(const TrainLog& log) {
  struct Series {
    const char* name;
    const char* color;
    double TrainRecord::*field;
  };
  constexpr Series kSeries[] = {{"correctness", "#1f77b4", &TrainRecord::correctness},
                                {"apr", "#d62728", &TrainRecord::apr},
                                {"arr", "#2ca02c", &TrainRecord::arr}};
  std::vector<double> steps;
  for (const TrainRecord& r : log) steps.push_back(static_cast<double>(r.step));
  const Range xr = Range::of(steps);
  std::string s = header(3 * kPanelHeight + kMargin);
  for (std::size_t p = 0; p < 3; ++p) {
    std::vector<double> v;
    for (const TrainRecord& r : log) v.push_back(r.*kSeries[p].field);
    const Range yr = Range::of(v);
    const double top = kMargin / 2 + p * kPanelHeight;
    const double bottom = top + kPanelHeight - kMargin / 2;
    s += axes(top, bottom, xr, yr);
    s += text(kMargin + 6, top + 12, kSeries[p].name);
    s += "<polyline class=\"series\" fill=\"none\" stroke=\"" + std::string(kSeries[p].color) + "\" points=\"";
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += num(xr.map(steps[i], kMargin, kWidth - kMargin / 2)) + "," + num(yr.map(v[i], bottom, top)) + " ";
    }
    s += "\"/>\n";
  }
  return s + "</svg>\n";
}

std::string trend_svg(const TrainLog& log, double alpha, double gamma) {
  std::vector<double> x;
  std::vector<double> y;
  for (const TrainRecord& r : log) {
    x.push_back(alpha * r.apr + gamma * r.arr);
    y.push_back(r.correctness);
  }
  const Range xr = Range::of(x);
  const Range yr = Range::of(y);
  const double top = kMargin / 2;
  const double bottom = kPanelHeight * 2;
  std::string s = header(bottom + kMargin);
  s += axes(top, bottom, xr, yr);
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += "<circle class=\"pt\" cx=\"" + num(xr.map(x[i], kMargin, kWidth - kMargin / 2)) + "\" cy=\"" +
         num(yr.map(y[i], bottom, top)) + "\" r=\"1.5\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n";
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx > 0.0) {
    const double slope = sxy / sxx;
    const auto at = [&](double xv) { return std::clamp(my + slope * (xv - mx), yr.lo, yr.hi); };
    s += "<line class=\"fit\" x1=\"" + num(kMargin) + "\" y1=\"" + num(yr.map(at(xr.lo), bottom, top)) + "\" x2=\"" +
         num(kWidth - kMargin / 2) + "\" y2=\"" + num(yr.map(at(xr.hi), bottom, top)) +
         "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  }
  s += text(kWidth / 2, bottom + 30, "alpha*apr + gamma*arr (alpha=" + label(alpha) + ", gamma=" + label(gamma) + ")",
            "middle");
  s += text(kMargin + 6, top + 12, "correctness");
  return s + "</svg>\n";
}

std::string transfer_svg(const AccuracyMatrix& m) {
  const auto deltas = forward_transfer(m);
  const double top = kMargin / 2;
  const double bottom = kPanelHeight * 2;
  std::string s = header(bottom + kMargin);
  if (deltas.empty()) {
    s += text(kWidth / 2, bottom / 2, "no untrained tasks to score", "middle");
    return s + "</svg>\n";
  }
  std::vector<double> v{0.0};
  for (const TransferDelta& d : deltas) v.push_back(d.delta);
  const Range yr = Range::of(v);
  const double zero = yr.map(0.0, bottom, top);
  s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(zero) + "\" x2=\"" + num(kWidth - kMargin / 2) + "\" y2=\"" +
       num(zero) + "\" stroke=\"black\"/>\n";
  s += text(kMargin - 4, top + 10, label(yr.hi), "end");
  s += text(kMargin - 4, bottom, label(yr.lo), "end");
  const double slot = (kWidth - 1.5 * kMargin) / static_cast<double>(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double x = kMargin + i * slot + slot * 0.15;
    const double yv = yr.map(deltas[i].delta, bottom, top);
    s += "<rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(std::min(yv, zero)) + "\" width=\"" + num(slot * 0.7) +
         "\" height=\"" + num(std::abs(yv - zero)) + "\" fill=\"" + (deltas[i].delta >= 0 ? "#2ca02c" : "#d62728") +
         "\"/>\n";
    s += text(x + slot * 0.35, bottom + 14,
              "s" + std::to_string(deltas[i].stage) + ":" + m.task_names[deltas[i].task], "middle");
  }
  return s + "</svg>\n";
}

void plot_run(const std::filesystem::path& run_dir) {
  const PlotInputs in = load_plot_inputs(run_dir);
  const std::string rewards = rewards_svg(in.log);
  const std::string trend = trend_svg(in.log, in.alpha, in.gamma);
  const std::string transfer = transfer_svg(in.matrix);
  write_file_atomic(run_dir / "rewards.svg", rewards);
  write_file_atomic(run_dir / "trend.svg", trend);
  write_file_atomic(run_dir / "transfer.svg", transfer);
}

}  // namespace guiaif
