#include "guiaif/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "guiaif/errors.hpp"

namespace guiaif {

namespace {

using nlohmann::json;

std::size_t line_at_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

// Walks one JSON object, handing out typed fields and rejecting leftovers.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path, std::string_view text)
      : obj_(obj), path_(std::move(path)), text_(text) {
    if (!obj_.is_object()) fail(path_.empty() ? "top level" : path_, "expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(child(key), "wrong type");
    }
  }

  void read_double(const char* key, double& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_number()) fail(child(key), "expected a number");
    out = it->get<double>();
  }

  void read_int(const char* key, int& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_number_integer()) fail(child(key), "expected an integer");
    out = it->get<int>();
  }

  void read_string(const char* key, std::string& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_string()) fail(child(key), "expected a string");
    out = it->get<std::string>();
  }

  void read_bool(const char* key, bool& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_boolean()) fail(child(key), "expected true or false");
    out = it->get<bool>();
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) fail(child(it.key()), "unknown key");
    }
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    std::ostringstream msg;
    const std::string leaf = where.substr(where.rfind('.') == std::string::npos ? 0 : where.rfind('.') + 1);
    const std::size_t pos = text_.find("\"" + leaf + "\"");
    if (pos != std::string_view::npos) msg << "line " << line_at_byte(text_, pos) << ": ";
    msg << where << ": " << what;
    throw ConfigError(msg.str());
  }

 private:
  const json& obj_;
  std::string path_;
  std::string_view text_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto checked(const ObjectReader& r, const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    r.fail(where, e.what());
  } catch (const std::invalid_argument& e) {
    r.fail(where, e.what());
  }
}

VarianceMode parse_variance_mode(std::string_view name) {
  if (name == "std") return VarianceMode::kStdProportional;
  if (name == "variance") return VarianceMode::kVarProportional;
  throw ConfigError("unknown variance_mode '" + std::string(name) + "' (expected std or variance)");
}

std::string to_string(VarianceMode m) { return m == VarianceMode::kStdProportional ? "std" : "variance"; }

TaskSpec parse_task(const json& j, const std::string& path, std::string_view text) {
  ObjectReader r(j, path, text);
  TaskSpec t;
  std::string kind = "mobile";
  r.read_string("kind", kind);
  t = fixture_task(checked(r, r.child("kind"), [&] { return parse_task_kind(kind); }));
  r.read_string("name", t.name);
  if (const json* aff = r.sub("affine")) {
    ObjectReader ar(*aff, r.child("affine"), text);
    ar.read("m", t.affine.m);
    ar.read("offset", t.affine.offset);
    ar.finish();
  }
  r.read_double("size_mean", t.size_stats.mean);
  r.read_double("size_spread", t.size_stats.spread);
  r.read_double("text_fraction", t.text_fraction);
  r.read_double("noise_sigma", t.noise_sigma);
  int slot = static_cast<int>(t.slot);
  r.read_int("slot", slot);
  if (slot < 0) r.fail(r.child("slot"), "must be >= 0");
  t.slot = static_cast<std::size_t>(slot);
  r.finish();
  checked(r, path, [&] {
    t.validate();
    return 0;
  });
  return t;
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << "line " << line_at_byte(text, e.byte > 0 ? e.byte - 1 : 0) << ": malformed JSON (" << e.what() << ")";
    throw ConfigError(msg.str());
  }

  RunConfig cfg;
  ObjectReader r(doc, "", text);

  std::string scenario = to_string(cfg.scenario);
  r.read_string("scenario", scenario);
  cfg.scenario = checked(r, "scenario", [&] { return parse_scenario(scenario); });
  r.read_int("steps_per_task", cfg.steps_per_task);
  r.read_int("eval_episodes", cfg.eval_episodes);
  r.read_double("alpha_scale", cfg.alpha_scale);
  r.read_double("gamma_scale", cfg.gamma_scale);
  r.read_int("threads", cfg.threads);
  if (const json* seeds = r.sub("seeds")) {
    if (!seeds->is_array()) r.fail("seeds", "expected an array of non-negative integers");
    cfg.seeds.clear();
    for (const json& s : *seeds) {
      if (!s.is_number_unsigned()) r.fail("seeds", "expected an array of non-negative integers");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  std::string sweep = to_string(cfg.sweep);
  r.read_string("sweep", sweep);
  cfg.sweep = checked(r, "sweep", [&] { return parse_sweep(sweep); });
  std::string init = to_string(cfg.init);
  r.read_string("init", init);
  cfg.init = checked(r, "init", [&] { return parse_policy_init(init); });

  if (const json* ab = r.sub("ablation")) {
    ObjectReader ar(*ab, "ablation", text);
    ar.read_bool("use_apr", cfg.flags.use_apr);
    ar.read_bool("use_arr", cfg.flags.use_arr);
    ar.read_bool("use_kl", cfg.flags.use_kl);
    ar.finish();
  }

  if (const json* op = r.sub("optim")) {
    ObjectReader orr(*op, "optim", text);
    OptimConfig& o = cfg.optim;
    orr.read_double("beta", o.beta);
    orr.read_double("lr", o.lr);
    orr.read_int("n_samples", o.n_samples);
    orr.read_int("batch_size", o.batch_size);
    orr.read_int("inner_epochs", o.inner_epochs);
    if (const json* s = orr.sub("seed")) {
      if (!s->is_number_unsigned()) orr.fail("optim.seed", "expected a non-negative integer");
      o.seed = s->get<std::uint64_t>();
    }
    orr.read_double("init_log_std", o.init_log_std);
    orr.read_double("max_grad_norm", o.max_grad_norm);
    std::string ratio = to_string(o.ratio_reference);
    orr.read_string("ratio_reference", ratio);
    o.ratio_reference = checked(orr, "optim.ratio_reference", [&] { return parse_ratio_reference(ratio); });
    orr.finish();
  }

  if (const json* rw = r.sub("reward")) {
    ObjectReader rr(*rw, "reward", text);
    RewardConfig& w = cfg.reward;
    rr.read_double("alpha", w.alpha);
    rr.read_double("gamma", w.gamma);
    rr.read_double("kappa", w.kappa);
    rr.read_double("eps_min", w.eps_min);
    rr.read_double("tau", w.tau);
    std::string kind = to_string(w.correctness_kind);
    rr.read_string("correctness_kind", kind);
    w.correctness_kind = checked(rr, "reward.correctness_kind", [&] { return parse_correctness_kind(kind); });
    std::string mode = to_string(w.variance_mode);
    rr.read_string("variance_mode", mode);
    w.variance_mode = checked(rr, "reward.variance_mode", [&] { return parse_variance_mode(mode); });
    rr.finish();
  }

  if (const json* tasks = r.sub("tasks")) {
    if (!tasks->is_array()) r.fail("tasks", "expected an array of task objects");
    std::vector<TaskSpec> list;
    for (std::size_t i = 0; i < tasks->size(); ++i) {
      list.push_back(parse_task((*tasks)[i], "tasks[" + std::to_string(i) + "]", text));
    }
    cfg.tasks = std::move(list);
  }
  r.finish();

  checked(r, "config", [&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

nlohmann::json to_json(const TaskSpec& t) {
  return {{"name", t.name},
          {"kind", to_string(t.kind)},
          {"affine", {{"m", t.affine.m}, {"offset", t.affine.offset}}},
          {"size_mean", t.size_stats.mean},
          {"size_spread", t.size_stats.spread},
          {"text_fraction", t.text_fraction},
          {"noise_sigma", t.noise_sigma},
          {"slot", t.slot}};
}

nlohmann::json to_json(const RunConfig& cfg) {
  json j;
  j["scenario"] = to_string(cfg.scenario);
  j["steps_per_task"] = cfg.steps_per_task;
  j["eval_episodes"] = cfg.eval_episodes;
  j["alpha_scale"] = cfg.alpha_scale;
  j["gamma_scale"] = cfg.gamma_scale;
  j["threads"] = cfg.threads;
  j["seeds"] = cfg.seeds;
  j["sweep"] = to_string(cfg.sweep);
  j["init"] = to_string(cfg.init);
  j["ablation"] = {{"use_apr", cfg.flags.use_apr}, {"use_arr", cfg.flags.use_arr}, {"use_kl", cfg.flags.use_kl}};
  const OptimConfig& o = cfg.optim;
  j["optim"] = {{"beta", o.beta},
                {"lr", o.lr},
                {"n_samples", o.n_samples},
                {"batch_size", o.batch_size},
                {"inner_epochs", o.inner_epochs},
                {"seed", o.seed},
                {"init_log_std", o.init_log_std},
                {"max_grad_norm", o.max_grad_norm},
                {"ratio_reference", to_string(o.ratio_reference)}};
  const RewardConfig& w = cfg.reward;
  j["reward"] = {{"alpha", w.alpha},
                 {"gamma", w.gamma},
                 {"kappa", w.kappa},
                 {"eps_min", w.eps_min},
                 {"tau", w.tau},
                 {"correctness_kind", to_string(w.correctness_kind)},
                 {"variance_mode", to_string(w.variance_mode)}};
  if (cfg.tasks) {
    j["tasks"] = json::array();
    for (const TaskSpec& t : *cfg.tasks) j["tasks"].push_back(to_json(t));
  }
  return j;
}

}  // namespace guiaif
