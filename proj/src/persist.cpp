#include "guiaif/persist.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

#include "guiaif/config.hpp"
#include "guiaif/errors.hpp"

namespace guiaif {

namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (std::string_view line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

long parse_long(std::string_view text) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError("not an integer: '" + std::string(text) + "'");
  }
  return v;
}

std::string iso_utc(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) throw NumericalError("non-finite value in output");
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericalError("cannot format value");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw InputError("not a finite number: '" + std::string(text) + "'");
  }
  return v;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InputError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string matrix_to_csv(const AccuracyMatrix& m) {
  std::string out = "stage";
  for (const std::string& n : m.task_names) out += "," + n;
  for (const std::string& n : m.task_names) out += ",text_" + n;
  for (const std::string& n : m.task_names) out += ",icon_" + n;
  out += '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += std::to_string(i);
    for (const auto* block : {&m.acc, &m.text, &m.icon}) {
      for (double v : (*block)[i]) out += "," + format_double(v);
    }
    out += '\n';
  }
  return out;
}

AccuracyMatrix matrix_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw InputError("matrix.csv is empty");
  const auto header = split(lines[0], ',');
  if (header.empty() || header[0] != "stage" || (header.size() - 1) % 3 != 0) {
    throw InputError("matrix.csv: unexpected header");
  }
  const std::size_t n = (header.size() - 1) / 3;
  AccuracyMatrix m;
  for (std::size_t j = 0; j < n; ++j) {
    m.task_names.emplace_back(header[1 + j]);
    if (header[1 + n + j] != "text_" + m.task_names.back() ||
        header[1 + 2 * n + j] != "icon_" + m.task_names.back()) {
      throw InputError("matrix.csv: split columns do not match task columns");
    }
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != header.size()) throw InputError("matrix.csv: ragged row " + std::to_string(i));
    if (parse_long(cells[0]) != static_cast<long>(i - 1)) throw InputError("matrix.csv: stage out of order");
    std::vector<double> acc, txt, icon;
    for (std::size_t j = 0; j < n; ++j) {
      acc.push_back(parse_double(cells[1 + j]));
      txt.push_back(parse_double(cells[1 + n + j]));
      icon.push_back(parse_double(cells[1 + 2 * n + j]));
    }
    m.acc.push_back(std::move(acc));
    m.text.push_back(std::move(txt));
    m.icon.push_back(std::move(icon));
  }
  return m;
}

std::string trainlog_to_csv(const TrainLog& log) {
  std::string out = "step,task,correctness,apr,arr,r_aif,kl,objective\n";
  for (const TrainRecord& r : log) {
    out += std::to_string(r.step) + "," + std::to_string(r.task);
    for (double v : {r.correctness, r.apr, r.arr, r.r_aif, r.kl, r.objective}) out += "," + format_double(v);
    out += '\n';
  }
  return out;
}

TrainLog trainlog_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "step,task,correctness,apr,arr,r_aif,kl,objective") {
    throw InputError("trainlog.csv: missing or unexpected header");
  }
  TrainLog log;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i], ',');
    if (c.size() != 8) throw InputError("trainlog.csv: ragged row " + std::to_string(i));
    TrainRecord r;
    r.step = parse_long(c[0]);
    r.task = static_cast<int>(parse_long(c[1]));
    r.correctness = parse_double(c[2]);
    r.apr = parse_double(c[3]);
    r.arr = parse_double(c[4]);
    r.r_aif = parse_double(c[5]);
    r.kl = parse_double(c[6]);
    r.objective = parse_double(c[7]);
    log.push_back(r);
  }
  return log;
}

json metrics_json(const RunResult& result, const RunConfig& cfg) {
  const AccuracyMatrix& m = result.matrix;
  json j;
  j["final_average"] = final_average(m);
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    rows.push_back(std::accumulate(m.acc[i].begin(), m.acc[i].end(), 0.0) / static_cast<double>(m.tasks()));
  }
  j["row_average"] = rows;
  json ft = json::array();
  for (const TransferDelta& d : forward_transfer(m)) {
    ft.push_back({{"stage", d.stage}, {"task", m.task_names[d.task]}, {"delta", d.delta}});
  }
  j["forward_transfer"] = ft;
  j["forgetting"] = forgetting(m);
  // Nominal weights, so correctness-only runs still report the relationship.
  const double alpha = cfg.reward.alpha * cfg.alpha_scale;
  const double gamma = cfg.reward.gamma * cfg.gamma_scale;
  j["trend_weights"] = {{"alpha", alpha}, {"gamma", gamma}};
  const auto trend = reward_trend(result.log, alpha, gamma, 0);
  j["reward_trend_task0"] = trend ? json(*trend) : json(nullptr);
  return j;
}

json manifest_json(const RunConfig& cfg, std::uint64_t seed, const RunTimes& times) {
  json j;
  j["artifact"] = "guiaif";
  j["version"] = std::string(kArtifactVersion);
  j["seed"] = seed;
  j["started_utc"] = iso_utc(times.started);
  j["finished_utc"] = iso_utc(times.finished);
  j["config"] = to_json(cfg);
  const RewardConfig r = cfg.effective_reward();
  const OptimConfig o = cfg.effective_optim();
  j["effective"] = {{"alpha", r.alpha}, {"gamma", r.gamma}, {"beta", o.beta}};
  json tasks = json::array();
  for (const TaskSpec& t : cfg.task_sequence(seed)) {
    json tj = to_json(t);
    tj["seed"] = t.seed;
    tasks.push_back(tj);
  }
  j["tasks"] = tasks;
  j["stages"] = training_stages(cfg.scenario, tasks.size());
  j["constants"] = {{"state_dim", kStateDim},
                    {"obs_dim", kObsDim},
                    {"domain_slots", kDomainSlots},
                    {"icon_size_factor", kIconSizeFactor},
                    {"min_element_side", kMinElementSide},
                    {"max_element_side", kMaxElementSide},
                    {"min_action_side", kMinActionSide},
                    {"min_log_std", kMinLogStd},
                    {"max_log_std", kMaxLogStd},
                    {"stream_tags", {{"train", kStreamTrain}, {"actions", kStreamActions}, {"eval", kStreamEval}}}};
  j["notes"] = "Success is the policy-mean box center inside the ground-truth box. "
               "Rerun with the config echo and seed above to reproduce matrix.csv.";
  return j;
}

void write_run(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& result,
               const RunTimes& times) {
  // Format everything first so a non-finite value leaves no files behind.
  const std::string matrix = matrix_to_csv(result.matrix);
  const std::string trainlog = trainlog_to_csv(result.log);
  const std::string metrics = metrics_json(result, cfg).dump(2) + "\n";
  const std::string manifest = manifest_json(cfg, result.seed, times).dump(2) + "\n";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "matrix.csv", matrix);
  write_file_atomic(dir / "trainlog.csv", trainlog);
  write_file_atomic(dir / "metrics.json", metrics);
  write_file_atomic(dir / "manifest.json", manifest);
}

std::vector<SummaryRow> summarize(const std::vector<AblationCell>& cells) {
  std::vector<SummaryRow> rows;
  for (const AblationCell& c : cells) {
    SummaryRow s;
    s.cell = c.name;
    s.flags = c.flags;
    s.alpha_scale = c.alpha_scale;
    s.gamma_scale = c.gamma_scale;
    s.alpha = c.config.effective_reward().alpha;
    s.gamma = c.config.effective_reward().gamma;
    s.beta = c.config.effective_optim().beta;
    s.n_seeds = c.runs.size();
    std::vector<double> finals;
    for (const RunResult& r : c.runs) finals.push_back(final_average(r.matrix));
    s.mean_final = finals.empty() ? 0.0 : std::accumulate(finals.begin(), finals.end(), 0.0) / finals.size();
    s.std_final = sample_std(finals, s.mean_final);
    rows.push_back(s);
  }
  return rows;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "cell,use_apr,use_arr,use_kl,alpha_scale,gamma_scale,alpha,gamma,beta,n_seeds,mean_final_average,"
      "std_final_average\n";
  for (const SummaryRow& r : rows) {
    out += r.cell + "," + std::to_string(int(r.flags.use_apr)) + "," + std::to_string(int(r.flags.use_arr)) + "," +
           std::to_string(int(r.flags.use_kl));
    for (double v : {r.alpha_scale, r.gamma_scale, r.alpha, r.gamma, r.beta}) out += "," + format_double(v);
    out += "," + std::to_string(r.n_seeds) + "," + format_double(r.mean_final) + "," + format_double(r.std_final);
    out += '\n';
  }
  return out;
}

void write_ablation(const std::filesystem::path& dir, const RunConfig& base,
                    const std::vector<AblationCell>& cells, const RunTimes& times) {
  const std::string summary = summary_to_csv(summarize(cells));
  for (const AblationCell& c : cells) {
    for (const RunResult& r : c.runs) write_run(dir / c.name / ("seed_" + std::to_string(r.seed)), c.config, r, times);
  }
  json manifest;
  manifest["artifact"] = "guiaif";
  manifest["version"] = std::string(kArtifactVersion);
  manifest["started_utc"] = iso_utc(times.started);
  manifest["finished_utc"] = iso_utc(times.finished);
  manifest["config"] = to_json(base);
  json names = json::array();
  for (const AblationCell& c : cells) names.push_back(c.name);
  manifest["cells"] = names;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  write_file_atomic(dir / "summary.csv", summary);
}

}  // namespace guiaif
