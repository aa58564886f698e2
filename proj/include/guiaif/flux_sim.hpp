#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "guiaif/geometry.hpp"
#include "guiaif/rng.hpp"

namespace guiaif {

enum class Scenario { kDomainFlux, kDomainFluxReversed, kResolutionFlux, kJoint };

Scenario parse_scenario(std::string_view name);  // throws ConfigError
std::string to_string(Scenario s);

enum class TaskKind { kMobile, kDesktop, kWeb, kNormal, kHigh };

TaskKind parse_task_kind(std::string_view name);
std::string to_string(TaskKind k);

/// Maps a target (logit center) to its observation: m * v + offset, m row-major.
struct Affine2 {
  std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};
  std::array<double, 2> offset{0.0, 0.0};

  std::array<double, 2> apply(double x, double y) const;
  /// Throws std::invalid_argument if m is singular.
  Affine2 inverse() const;
};

/// Element side lengths are drawn as mean * exp(spread * z).
struct SizeStats {
  double mean = 0.1;
  double spread = 0.25;
};

struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::kMobile;
  Affine2 affine;
  SizeStats size_stats;
  double text_fraction = 0.5;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  /// Position of this task's flag in the domain one-hot block.
  std::size_t slot = 0;

  void validate() const;
};

enum class ElementKind { kText, kIcon };

/// State layout: [obs logit cx, obs logit cy, obs log w, obs log h,
///                one-hot(3), icon flag].
inline constexpr std::size_t kObsDim = 4;
inline constexpr std::size_t kDomainSlots = 3;
inline constexpr std::size_t kStateDim = kObsDim + kDomainSlots + 1;
inline constexpr double kIconSizeFactor = 0.7;
/// Sampled element sides are clamped to this range.
inline constexpr double kMinElementSide = 0.01;
inline constexpr double kMaxElementSide = 0.9;

struct EpisodeInstance {
  std::vector<double> state;
  BBox gt;
  ElementKind kind = ElementKind::kText;
};

/// Fixture statistics for one task kind, seed 0.
TaskSpec fixture_task(TaskKind kind);

/// Fixture task sequence for a scenario. Task seeds are derived from
/// master_seed so instance streams depend only on (seed, task).
std::vector<TaskSpec> make_sequence(Scenario scenario, std::uint64_t master_seed);

/// Training stages as lists of task indices: one task per stage for the
/// continual scenarios, all tasks at once for kJoint.
std::vector<std::vector<std::size_t>> training_stages(Scenario scenario, std::size_t n_tasks);

EpisodeInstance sample_instance(const TaskSpec& task, Rng& rng);

double logit(double p);

}  // namespace guiaif
