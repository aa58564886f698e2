#include "guiaif/flux_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "guiaif/errors.hpp"

namespace guiaif {

TaskSpec fixture_task(TaskKind kind) {
  TaskSpec t;
  t.kind = kind;
  t.name = to_string(kind);
  switch (kind) {
    case TaskKind::kMobile:
      t.affine = {{1.0, 0.0, 0.0, 1.0}, {0.5, -0.5}};
      t.size_stats = {0.12, 0.25};
      t.text_fraction = 0.7;
      t.slot = 0;
      break;
    case TaskKind::kDesktop:
      t.affine = {{0.7, 0.2, -0.1, 1.3}, {-0.4, 0.3}};
      t.size_stats = {0.08, 0.25};
      t.text_fraction = 0.5;
      t.slot = 1;
      break;
    case TaskKind::kWeb:
      t.affine = {{1.3, -0.2, 0.15, 0.8}, {0.2, 0.6}};
      t.size_stats = {0.06, 0.25};
      t.text_fraction = 0.3;
      t.slot = 2;
      break;
    case TaskKind::kNormal:
      t.affine = {{0.9, 0.1, -0.1, 0.9}, {0.3, -0.2}};
      t.size_stats = {0.10, 0.25};
      t.text_fraction = 0.5;
      t.slot = 0;
      break;
    case TaskKind::kHigh:
      t.affine = {{1.8, 0.2, -0.2, 1.8}, {0.3, -0.2}};
      t.size_stats = {0.05, 0.25};
      t.text_fraction = 0.5;
      t.slot = 1;
      break;
  }
  return t;
}

Scenario parse_scenario(std::string_view name) {
  if (name == "domain_flux") return Scenario::kDomainFlux;
  if (name == "domain_flux_reversed") return Scenario::kDomainFluxReversed;
  if (name == "resolution_flux") return Scenario::kResolutionFlux;
  if (name == "joint") return Scenario::kJoint;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kDomainFlux:
      return "domain_flux";
    case Scenario::kDomainFluxReversed:
      return "domain_flux_reversed";
    case Scenario::kResolutionFlux:
      return "resolution_flux";
    case Scenario::kJoint:
      return "joint";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "mobile") return TaskKind::kMobile;
  if (name == "desktop") return TaskKind::kDesktop;
  if (name == "web") return TaskKind::kWeb;
  if (name == "normal") return TaskKind::kNormal;
  if (name == "high") return TaskKind::kHigh;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::kMobile:
      return "mobile";
    case TaskKind::kDesktop:
      return "desktop";
    case TaskKind::kWeb:
      return "web";
    case TaskKind::kNormal:
      return "normal";
    case TaskKind::kHigh:
      return "high";
  }
  return "unknown";
}

std::array<double, 2> Affine2::apply(double x, double y) const {
  return {m[0] * x + m[1] * y + offset[0], m[2] * x + m[3] * y + offset[1]};
}

Affine2 Affine2::inverse() const {
  const double det = m[0] * m[3] - m[1] * m[2];
  if (std::abs(det) < 1e-12) throw std::invalid_argument("affine transform is singular");
  Affine2 inv;
  inv.m = {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
  inv.offset = {-(inv.m[0] * offset[0] + inv.m[1] * offset[1]),
                -(inv.m[2] * offset[0] + inv.m[3] * offset[1])};
  return inv;
}

void TaskSpec::validate() const {
  if (!(text_fraction >= 0.0 && text_fraction <= 1.0)) {
    throw ConfigError("task '" + name + "': text_fraction must be in [0,1]");
  }
  if (!(size_stats.mean > 0.0 && size_stats.mean <= 0.5)) {
    throw ConfigError("task '" + name + "': size mean must be in (0, 0.5]");
  }
  if (!(size_stats.spread >= 0.0)) throw ConfigError("task '" + name + "': size spread must be >= 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("task '" + name + "': noise_sigma must be >= 0");
  if (slot >= kDomainSlots) throw ConfigError("task '" + name + "': slot out of range");
  const double det = affine.m[0] * affine.m[3] - affine.m[1] * affine.m[2];
  if (!(std::abs(det) >= 1e-12)) throw ConfigError("task '" + name + "': affine is singular");
}

std::vector<TaskSpec> make_sequence(Scenario scenario, std::uint64_t master_seed) {
  std::vector<TaskKind> kinds;
  switch (scenario) {
    case Scenario::kDomainFlux:
    case Scenario::kJoint:
      kinds = {TaskKind::kMobile, TaskKind::kDesktop, TaskKind::kWeb};
      break;
    case Scenario::kDomainFluxReversed:
      kinds = {TaskKind::kWeb, TaskKind::kDesktop, TaskKind::kMobile};
      break;
    case Scenario::kResolutionFlux:
      kinds = {TaskKind::kNormal, TaskKind::kHigh};
      break;
  }
  std::vector<TaskSpec> tasks;
  for (TaskKind k : kinds) {
    TaskSpec t = fixture_task(k);
    t.seed = derive_seed(master_seed, {static_cast<std::uint64_t>(k)});
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<std::vector<std::size_t>> training_stages(Scenario scenario, std::size_t n_tasks) {
  std::vector<std::vector<std::size_t>> stages;
  if (scenario == Scenario::kJoint) {
    std::vector<std::size_t> all(n_tasks);
    for (std::size_t i = 0; i < n_tasks; ++i) all[i] = i;
    stages.push_back(std::move(all));
  } else {
    for (std::size_t i = 0; i < n_tasks; ++i) stages.push_back({i});
  }
  return stages;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

EpisodeInstance sample_instance(const TaskSpec& task, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  EpisodeInstance inst;
  inst.kind = unit(rng) < task.text_fraction ? ElementKind::kText : ElementKind::kIcon;
  const double factor = inst.kind == ElementKind::kIcon ? kIconSizeFactor : 1.0;
  const auto draw_side = [&] {
    const double side = task.size_stats.mean * std::exp(task.size_stats.spread * normal(rng)) * factor;
    return std::clamp(side, kMinElementSide, kMaxElementSide);
  };
  const double w = draw_side();
  const double h = draw_side();
  const double cx = w / 2.0 + unit(rng) * (1.0 - w);
  const double cy = h / 2.0 + unit(rng) * (1.0 - h);
  inst.gt = {std::clamp(cx - w / 2.0, 0.0, 1.0), std::clamp(cy - h / 2.0, 0.0, 1.0),
             std::clamp(cx + w / 2.0, 0.0, 1.0), std::clamp(cy + h / 2.0, 0.0, 1.0)};

  const std::array<double, 2> oc = task.affine.apply(logit(cx), logit(cy));
  std::array<double, kObsDim> obs{oc[0], oc[1], std::log(w), std::log(h)};
  if (task.noise_sigma > 0.0) {
    for (double& v : obs) v += task.noise_sigma * normal(rng);
  }

  inst.state.assign(kStateDim, 0.0);
  for (std::size_t i = 0; i < kObsDim; ++i) inst.state[i] = obs[i];
  inst.state[kObsDim + task.slot] = 1.0;
  inst.state[kObsDim + kDomainSlots] = inst.kind == ElementKind::kIcon ? 1.0 : 0.0;
  return inst;
}

}  // namespace guiaif
