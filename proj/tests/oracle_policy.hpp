#pragma once

#include "guiaif/flux_sim.hpp"
#include "guiaif/policy.hpp"

// Linear policy that inverts a task's observation map exactly.
inline guiaif::GroundingPolicy oracle_policy(const guiaif::TaskSpec& task) {
  using namespace guiaif;
  const Affine2 inv = task.affine.inverse();
  GroundingPolicy p(kStateDim, kMinLogStd);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t f = 0; f < 2; ++f) p.weight(f, k) = inv.m[k * 2 + f];
    p.bias(k) = inv.offset[k];
  }
  p.weight(2, 2) = 1.0;
  p.weight(3, 3) = 1.0;
  return p;
}
