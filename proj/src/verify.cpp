#include "guiaif/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "guiaif/errors.hpp"
#include "guiaif/flux_sim.hpp"
#include "guiaif/rng.hpp"

namespace guiaif {

namespace {

using Clock = std::chrono::steady_clock;
using ld = long double;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<BBox> random_group(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> side(0.02, 0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<BBox> g;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = side(rng);
    const double h = side(rng);
    const double x1 = unit(rng) * (1.0 - w);
    const double y1 = unit(rng) * (1.0 - h);
    g.push_back({x1, y1, x1 + w, y1 + h});
  }
  return g;
}

// Independent references. These deliberately avoid the library formulas.

ld ref_apr(const std::vector<BBox>& g) {
  ld cx = 0, cy = 0;
  for (const BBox& b : g) {
    cx += (static_cast<ld>(b.x1) + b.x2) / 2;
    cy += (static_cast<ld>(b.y1) + b.y2) / 2;
  }
  cx /= g.size();
  cy /= g.size();
  ld s = 0;
  for (const BBox& b : g) {
    const ld dx = (static_cast<ld>(b.x1) + b.x2) / 2 - cx;
    const ld dy = (static_cast<ld>(b.y1) + b.y2) / 2 - cy;
    s += dx * dx + dy * dy;
  }
  return s / g.size();
}

struct Gauss2 {
  ld mx, my;
  ld s[2][2];  // covariance
};

ld det2(const ld m[2][2]) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

// General 2x2 Bhattacharyya distance via explicit inverse and determinants.
ld ref_bhattacharyya(const Gauss2& a, const Gauss2& b) {
  ld avg[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) avg[i][j] = (a.s[i][j] + b.s[i][j]) / 2;
  const ld d = det2(avg);
  const ld inv[2][2] = {{avg[1][1] / d, -avg[0][1] / d}, {-avg[1][0] / d, avg[0][0] / d}};
  const ld dx = a.mx - b.mx;
  const ld dy = a.my - b.my;
  const ld quad = dx * (inv[0][0] * dx + inv[0][1] * dy) + dy * (inv[1][0] * dx + inv[1][1] * dy);
  return quad / 8 + std::log(d / std::sqrt(det2(a.s) * det2(b.s))) / 2;
}

Gauss2 ref_box_gaussian(const BBox& b, ld kappa, ld eps_min, VarianceMode mode) {
  const ld w = static_cast<ld>(b.x2) - b.x1;
  const ld h = static_cast<ld>(b.y2) - b.y1;
  ld vx = mode == VarianceMode::kStdProportional ? (kappa * w) * (kappa * w) : kappa * w;
  ld vy = mode == VarianceMode::kStdProportional ? (kappa * h) * (kappa * h) : kappa * h;
  if (vx < eps_min) vx = eps_min;
  if (vy < eps_min) vy = eps_min;
  return {(static_cast<ld>(b.x1) + b.x2) / 2, (static_cast<ld>(b.y1) + b.y2) / 2, {{vx, 0}, {0, vy}}};
}

Gauss2 to_gauss2(const DiagGaussian2& g) { return {g.mean.x, g.mean.y, {{g.var_x, 0}, {0, g.var_y}}}; }

ld log_density(const DiagGaussian2& g, double x, double y) {
  const ld dx = x - g.mean.x;
  const ld dy = y - g.mean.y;
  return -std::log(2 * std::acos(-1.0L)) - 0.5L * std::log(static_cast<ld>(g.var_x) * g.var_y) -
         0.5L * (dx * dx / g.var_x + dy * dy / g.var_y);
}

// -ln of a Monte-Carlo estimate of the overlap integral, sampling from the
// moment-averaged Gaussian.
double mc_bhattacharyya(const DiagGaussian2& a, const DiagGaussian2& b, int samples, Rng& rng) {
  const DiagGaussian2 m{{0.5 * (a.mean.x + b.mean.x), 0.5 * (a.mean.y + b.mean.y)},
                        0.5 * (a.var_x + b.var_x),
                        0.5 * (a.var_y + b.var_y)};
  std::normal_distribution<double> zx(m.mean.x, std::sqrt(m.var_x));
  std::normal_distribution<double> zy(m.mean.y, std::sqrt(m.var_y));
  ld sum = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = zx(rng);
    const double y = zy(rng);
    sum += std::exp(0.5L * (log_density(a, x, y) + log_density(b, x, y)) - log_density(m, x, y));
  }
  return static_cast<double>(-std::log(sum / samples));
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

double mutant_bhattacharyya(const DiagGaussian2& a, const DiagGaussian2& b, double mahal_div, double log_coef) {
  const double ax = 0.5 * (a.var_x + b.var_x);
  const double ay = 0.5 * (a.var_y + b.var_y);
  const double dx = a.mean.x - b.mean.x;
  const double dy = a.mean.y - b.mean.y;
  return (dx * dx / ax + dy * dy / ay) / mahal_div +
         log_coef * std::log(ax * ay / std::sqrt(a.var_x * a.var_y * b.var_x * b.var_y));
}

}  // namespace

std::vector<std::string> mutation_names() { return {"apr_norm", "bhatt_mahal", "bhatt_log", "arr_norm", "adv_ddof"}; }

OracleSubjects mutated_subjects(std::string_view mutation) {
  OracleSubjects s;
  if (mutation == "apr_norm") {
    s.apr = [](PredictionGroup g) {
      if (g.size() < 2) return 0.0;
      double cx = 0.0, cy = 0.0;
      for (const BBox& b : g) {
        cx += center(b).x;
        cy += center(b).y;
      }
      cx /= g.size();
      cy /= g.size();
      double sum = 0.0;
      for (const BBox& b : g) sum += std::pow(center(b).x - cx, 2) + std::pow(center(b).y - cy, 2);
      return sum / static_cast<double>(g.size() - 1);
    };
  } else if (mutation == "bhatt_mahal") {
    s.bhattacharyya = [](const DiagGaussian2& a, const DiagGaussian2& b) { return mutant_bhattacharyya(a, b, 4.0, 0.5); };
  } else if (mutation == "bhatt_log") {
    s.bhattacharyya = [](const DiagGaussian2& a, const DiagGaussian2& b) { return mutant_bhattacharyya(a, b, 8.0, 1.0); };
  } else if (mutation == "arr_norm") {
    s.arr = [](PredictionGroup g, double kappa, double eps_min, VarianceMode mode) {
      const std::size_t n = g.size();
      if (n < 2) return 0.0;
      double sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          sum += bhattacharyya(to_gaussian(g[i], kappa, eps_min, mode).gaussian,
                               to_gaussian(g[j], kappa, eps_min, mode).gaussian);
      return sum / static_cast<double>(n * (n - 1));
    };
  } else if (mutation == "adv_ddof") {
    s.advantage = [](std::span<const double> r) {
      std::vector<double> out(r.size(), 0.0);
      if (r.size() < 2) return out;
      double mean = 0.0;
      for (double v : r) mean += v / r.size();
      double ss = 0.0;
      for (double v : r) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(r.size() - 1));
      if (sd < 1e-12) return out;
      for (std::size_t i = 0; i < r.size(); ++i) out[i] = (r[i] - mean) / sd;
      return out;
    };
  } else {
    throw ConfigError("unknown mutation '" + std::string(mutation) + "'");
  }
  return s;
}

OracleResult oracle_apr(const OracleSubjects& s, std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleResult r{"apr_if", true, 0.0, 1e-9, 0.0, ""};
  Rng rng = make_rng(seed, {1});
  std::uniform_int_distribution<std::size_t> size(2, 8);
  for (int k = 0; k < 1000; ++k) {
    const auto g = random_group(rng, size(rng));
    const double err = std::abs(s.apr(g) - static_cast<double>(ref_apr(g)));
    r.worst = std::max(r.worst, err);
  }
  r.pass = r.worst <= r.tolerance;
  r.detail = "1000 groups, N in 2..8, brute-force centroid spread";
  r.seconds = seconds_since(t0);
  return r;
}

OracleResult oracle_bhattacharyya(const OracleSubjects& s, std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleResult r{"bhattacharyya", true, 0.0, 0.02, 0.0, ""};
  Rng rng = make_rng(seed, {2});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sd(0.05, 0.3);
  int pairs = 0;
  while (pairs < 20) {
    const DiagGaussian2 a{{unit(rng), unit(rng)}, std::pow(sd(rng), 2), std::pow(sd(rng), 2)};
    const DiagGaussian2 b{{unit(rng), unit(rng)}, std::pow(sd(rng), 2), std::pow(sd(rng), 2)};
    // Keep pairs whose overlap is neither trivial nor vanishing, so a 2%
    // relative tolerance is meaningful for a 1e6-sample estimate.
    const double ref = static_cast<double>(ref_bhattacharyya(to_gauss2(a), to_gauss2(b)));
    if (ref < 0.1 || ref > 3.0) continue;
    ++pairs;
    const double mc = mc_bhattacharyya(a, b, 1'000'000, rng);
    r.worst = std::max(r.worst, rel_err(s.bhattacharyya(a, b), mc));
  }
  bool exact_ok = true;
  for (int k = 0; k < 20; ++k) {
    const DiagGaussian2 a{{unit(rng), unit(rng)}, std::pow(sd(rng), 2), std::pow(sd(rng), 2)};
    if (std::abs(s.bhattacharyya(a, a)) > 1e-12) exact_ok = false;
    DiagGaussian2 b = a;
    b.mean = {unit(rng), unit(rng)};
    const double dx = a.mean.x - b.mean.x;
    const double dy = a.mean.y - b.mean.y;
    const double mahal8 = (dx * dx / a.var_x + dy * dy / a.var_y) / 8.0;
    if (std::abs(s.bhattacharyya(a, b) - mahal8) > 1e-12 * std::max(1.0, mahal8)) exact_ok = false;
  }
  r.pass = r.worst <= r.tolerance && exact_ok;
  r.detail = exact_ok ? "20 pairs vs 1e6-sample importance estimate; exact cases ok"
                      : "exact case (identical or equal covariance) mismatch";
  r.seconds = seconds_since(t0);
  return r;
}

OracleResult oracle_arr(const OracleSubjects& s, std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleResult r{"arr_if", true, 0.0, 1e-9, 0.0, ""};
  Rng rng = make_rng(seed, {3});
  std::uniform_int_distribution<std::size_t> size(2, 8);
  std::uniform_real_distribution<double> kappa(0.01, 0.5);
  for (int k = 0; k < 1000; ++k) {
    const auto g = random_group(rng, size(rng));
    const double kp = kappa(rng);
    const VarianceMode mode = k % 2 == 0 ? VarianceMode::kStdProportional : VarianceMode::kVarProportional;
    ld sum = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (i == j) continue;
        sum += ref_bhattacharyya(ref_box_gaussian(g[i], kp, 1e-8L, mode), ref_box_gaussian(g[j], kp, 1e-8L, mode));
        ++count;
      }
    }
    const double err = std::abs(s.arr(g, kp, 1e-8, mode) - static_cast<double>(sum / count));
    r.worst = std::max(r.worst, err);
  }
  r.pass = r.worst <= r.tolerance;
  r.detail = "1000 groups, ordered-pair double loop, both variance modes";
  r.seconds = seconds_since(t0);
  return r;
}

OracleResult oracle_advantage(const OracleSubjects& s, std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleResult r{"grpo_advantage", true, 0.0, 1e-9, 0.0, ""};
  Rng rng = make_rng(seed, {4});
  std::uniform_int_distribution<int> size(2, 16);
  std::uniform_real_distribution<double> scale(0.01, 10.0);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double sc = scale(rng);
    const double shift = z(rng) * 5.0;
    std::vector<double> rewards(static_cast<std::size_t>(size(rng)));
    for (double& v : rewards) v = shift + sc * z(rng);
    const auto a = s.advantage(rewards);
    ld mean = 0, ss = 0, rm = 0, rs = 0;
    for (double v : a) mean += v;
    mean /= a.size();
    for (double v : a) ss += (v - mean) * (v - mean);
    for (double v : rewards) rm += v;
    rm /= rewards.size();
    for (double v : rewards) rs += (v - rm) * (v - rm);
    rs = std::sqrt(rs / rewards.size());
    double err = std::max(std::abs(static_cast<double>(mean)),
                          std::abs(static_cast<double>(std::sqrt(ss / a.size())) - 1.0));
    for (std::size_t i = 0; i < a.size(); ++i) {
      err = std::max(err, std::abs(a[i] - static_cast<double>((rewards[i] - rm) / rs)));
    }
    r.worst = std::max(r.worst, err);
  }
  bool zeros_ok = true;
  for (const std::vector<double>& degenerate :
       {std::vector<double>{0.3}, std::vector<double>{1.0, 1.0}, std::vector<double>{0.1, 0.1, 0.1, 0.1},
        std::vector<double>(8, -2.5)}) {
    for (double v : s.advantage(degenerate)) zeros_ok = zeros_ok && v == 0.0;
  }
  r.pass = r.worst <= r.tolerance && zeros_ok;
  r.detail = zeros_ok ? "1000 groups standardized; degenerate groups give exact zeros"
                      : "degenerate group did not return exact zeros";
  r.seconds = seconds_since(t0);
  return r;
}

OracleResult oracle_gradient(const OracleSubjects& s, std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleResult r{"gradient", true, 0.0, 1e-4, 0.0, ""};
  Rng rng = make_rng(seed, {5});
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> ls(-1.5, -0.3);
  std::uniform_int_distribution<int> group(2, 8);
  constexpr double h = 1e-5;
  for (int k = 0; k < 10; ++k) {
    GroundingPolicy theta(kStateDim, -1.0);
    for (std::size_t f = 0; f < kStateDim; ++f)
      for (std::size_t a = 0; a < kActionDim; ++a) theta.weight(f, a) = 0.3 * z(rng);
    for (std::size_t a = 0; a < kActionDim; ++a) {
      theta.bias(a) = 0.5 * z(rng);
      theta.log_std(a) = ls(rng);
    }
    auto perturbed = [&](double sd) {
      GroundingPolicy p = theta;
      for (double& v : p.params()) v += sd * z(rng);
      return p;
    };
    const GroundingPolicy ratio_ref = perturbed(0.05);
    const GroundingPolicy anchor = perturbed(0.1);
    std::vector<double> state(kStateDim);
    for (double& v : state) v = z(rng);
    GroupRollout roll = sample_group(theta, ratio_ref, state, group(rng), rng);
    for (double& v : roll.rewards) v = z(rng);
    roll.advantages = grpo_advantage(roll.rewards);
    roll.r_aif = std::abs(z(rng));
    rescore(roll, theta, anchor);
    OptimConfig cfg;
    cfg.beta = k % 2 == 0 ? 0.0 : 0.04;

    const PolicyGradient g = s.gradient(roll, theta, anchor, cfg);
    double diff2 = 0.0, g2 = 0.0, fd2 = 0.0;
    for (std::size_t i = 0; i < theta.num_params(); ++i) {
      GroundingPolicy plus = theta;
      GroundingPolicy minus = theta;
      plus.params()[i] += h;
      minus.params()[i] -= h;
      const double fd = (objective_at(roll, plus, anchor, cfg) - objective_at(roll, minus, anchor, cfg)) / (2 * h);
      const double gi = i < g.values.size() ? g.values[i] : 0.0;
      diff2 += (gi - fd) * (gi - fd);
      g2 += gi * gi;
      fd2 += fd * fd;
    }
    const double rel = std::sqrt(diff2) / std::max({std::sqrt(g2), std::sqrt(fd2), 1e-12});
    r.worst = std::max(r.worst, rel);
  }
  r.pass = r.worst <= r.tolerance;
  r.detail = "10 fixtures, central differences h=1e-5, beta 0 and 0.04";
  r.seconds = seconds_since(t0);
  return r;
}

std::vector<OracleResult> run_oracles(const OracleSubjects& subjects, std::uint64_t seed) {
  return {oracle_apr(subjects, seed), oracle_bhattacharyya(subjects, seed), oracle_arr(subjects, seed),
          oracle_advantage(subjects, seed), oracle_gradient(subjects, seed)};
}

std::string format_oracle_line(const OracleResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %-15s worst=%.3e tol=%.1e time=%.2fs  %s", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.worst, r.tolerance, r.seconds, r.detail.c_str());
  return buf;
}

}  // namespace guiaif
