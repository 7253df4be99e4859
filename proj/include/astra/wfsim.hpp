#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "astra/common.hpp"
#include "astra/dirichlet.hpp"
#include "astra/rng.hpp"

namespace astra {

// Wright-Fisher diffusion on the simplex: drift (n/2)(nu - p), covariance
// Diag(p) - pp'. A deterministic time change Gamma_t = rate * t slows the
// clock by a constant factor.
struct WFConfig {
  std::size_t n;
  Vec nu;
  double dt;
  double horizon;
  double time_change_rate = 1.0;
  std::uint64_t seed = 0;

  // drift scale is n/2, so the explicit scheme needs dt * n << 1
  static double default_dt(std::size_t n) {
    return std::min(1e-4, 0.1 / static_cast<double>(n));
  }

  void validate() const {
    require(n >= 2, "WFConfig: n >= 2");
    require(nu.size() == n, "WFConfig: nu dimension mismatch");
    require(is_simplex_point(nu), "WFConfig: nu must be a simplex point");
    require(dt > 0.0, "WFConfig: dt > 0");
    require(horizon >= dt, "WFConfig: horizon >= dt");
    require(time_change_rate > 0.0 && time_change_rate <= 1.0,
            "WFConfig: time_change_rate in (0,1]");
  }

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
  double effective_dt() const { return time_change_rate * dt; }
};

struct Trajectory {
  Vec times;
  std::vector<SimplexPoint> points;
  Vec qv_sum;       // running sum of sum_i p_i (1 - p_i) * dtau
  Vec sq_sum_path;  // per-step sum_i p_i^2
};

inline SimplexPoint stationary_start(const WFConfig& config, std::mt19937_64& rng) {
  config.validate();
  Vec gamma = config.nu;
  for (double& g : gamma) g *= static_cast<double>(config.n);
  return dirichlet_sample_one(DirichletParams(std::move(gamma)), rng);
}

// One Euler-Maruyama step given the n standard normals xi. The noise factor
// sqrt(p_i) xi_i - p_i sum_j sqrt(p_j) xi_j realizes Diag(p) - pp' in O(n).
inline void em_step_noise(Vec& p, const WFConfig& config, const double* xi) {
  const std::size_t n = config.n;
  const double dtau = config.effective_dt();
  const double sq_dtau = std::sqrt(dtau);
  const double half_n = 0.5 * static_cast<double>(n);
  double mix = 0.0;
  for (std::size_t i = 0; i < n; ++i) mix += std::sqrt(p[i]) * xi[i];
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double noise = std::sqrt(p[i]) * xi[i] - p[i] * mix;
    double v = p[i] + half_n * (config.nu[i] - p[i]) * dtau + sq_dtau * noise;
    // Euler steps can cross zero even though the diffusion cannot
    v = std::max(v, kSimplexFloor);
    p[i] = v;
    sum += v;
  }
  for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
}

inline SimplexPoint em_step(const Vec& p, const WFConfig& config, std::mt19937_64& rng) {
  Vec xi(config.n);
  for (double& x : xi) x = standard_normal(rng);
  Vec out = p;
  em_step_noise(out, config, xi.data());
  return out;
}

// Boundary-corrected step. A coordinate with Dirichlet shape n nu_i < 1 spends
// most of its time at scales where the Euler-Maruyama Gaussian increment is a
// poor transition model (per-step noise comparable to the coordinate itself);
// clamping the overshoots then biases its stationary mean upward, and the bias
// does not vanish with dt. Marginally such a coordinate is a CIR diffusion
// dX = (n/2)(nu_i - X) dtau + sqrt(X) dW, so when the transition's effective
// chi-square dof 2 n nu_i + 4 p_i/dtau is small we draw from a gamma law
// matching the exact CIR transition mean and variance; at the boundary
// (p_i = 0) that gamma is the exact transition. Well-resolved coordinates keep
// the plain Euler update, and the final renormalization restores the
// cross-coordinate coupling of Diag(p) - pp' to first order.
inline void wf_step(Vec& p, const WFConfig& config, std::mt19937_64& rng) {
  const std::size_t n = config.n;
  const double dtau = config.effective_dt();
  const double sq_dtau = std::sqrt(dtau);
  const double half_n = 0.5 * static_cast<double>(n);
  const double e = std::exp(-half_n * dtau);
  const double dof_cut = 50.0;

  Vec xi(n);
  double mix = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (2.0 * static_cast<double>(n) * config.nu[i] + 4.0 * p[i] / dtau < dof_cut) {
      xi[i] = std::numeric_limits<double>::quiet_NaN();  // marked for the gamma draw
    } else {
      xi[i] = standard_normal(rng);
      mix += std::sqrt(p[i]) * xi[i];
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v;
    if (std::isnan(xi[i])) {
      double m = p[i] * e + config.nu[i] * (1.0 - e);
      double var = p[i] * (2.0 / static_cast<double>(n)) * (e - e * e) +
                   (config.nu[i] / static_cast<double>(n)) * (1.0 - e) * (1.0 - e);
      v = (var / m) * gamma_draw(rng, m * m / var);
      if (!std::isfinite(v)) v = m;  // underflow-proof: fall back to the mean
    } else {
      double noise = std::sqrt(p[i]) * xi[i] - p[i] * mix;
      v = p[i] + half_n * (config.nu[i] - p[i]) * dtau + sq_dtau * noise;
    }
    v = std::max(v, kSimplexFloor);
    p[i] = v;
    sum += v;
  }
  for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
}

inline Trajectory simulate(const WFConfig& config) {
  config.validate();
  auto rng = derived_rng(config.seed, 0);
  Trajectory traj;
  const std::size_t steps = config.steps();
  traj.times.reserve(steps + 1);
  traj.points.reserve(steps + 1);
  traj.qv_sum.reserve(steps + 1);
  traj.sq_sum_path.reserve(steps + 1);

  Vec p = stationary_start(config, rng);
  double qv = 0.0;
  auto push = [&](double t) {
    double s2 = dot(p, p);
    traj.times.push_back(t);
    traj.points.push_back(p);
    traj.qv_sum.push_back(qv);
    traj.sq_sum_path.push_back(s2);
  };
  push(0.0);
  Vec xi(config.n);
  for (std::size_t k = 0; k < steps; ++k) {
    qv += (1.0 - dot(p, p)) * config.effective_dt();
    for (double& x : xi) x = standard_normal(rng);
    em_step_noise(p, config, xi.data());
    push(static_cast<double>(k + 1) * config.dt);
  }
  return traj;
}

struct PathRadiusSummary {
  double initial_radius;  // sqrt(n) ||mu(0) - nu||
  double max_radius;      // sup over the path
};

inline PathRadiusSummary radius_summary(const Trajectory& traj, const Vec& nu) {
  double sqn = std::sqrt(static_cast<double>(nu.size()));
  PathRadiusSummary s{0.0, 0.0};
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    double r = sqn * distance2(traj.points[k], nu);
    if (k == 0) s.initial_radius = r;
    s.max_radius = std::max(s.max_radius, r);
  }
  return s;
}

struct EscapeStats {
  double q_hat;
  double se;
  std::size_t conditioned;
  std::size_t escaped;
};

// Empirical P(sup_t radius > b2 | radius(0) <= b1). Paths starting outside
// b1 are dropped from the conditioning set.
inline EscapeStats escape_stats(const std::vector<PathRadiusSummary>& paths, double b1,
                                double b2) {
  require(1.0 < b1 && b1 < b2, "escape_stats: need 1 < b1 < b2");
  std::size_t cond = 0, esc = 0;
  for (const auto& p : paths) {
    if (p.initial_radius <= b1) {
      ++cond;
      if (p.max_radius > b2) ++esc;
    }
  }
  if (cond == 0)
    throw std::runtime_error("escape_stats: empty conditioning set (raise b1 or n)");
  double q = static_cast<double>(esc) / static_cast<double>(cond);
  double se = std::sqrt(q * (1.0 - q) / static_cast<double>(cond));
  return EscapeStats{q, se, cond, esc};
}

inline EscapeStats escape_stats(const std::vector<Trajectory>& paths, const Vec& nu, double b1,
                                double b2) {
  std::vector<PathRadiusSummary> sums;
  sums.reserve(paths.size());
  for (const auto& t : paths) sums.push_back(radius_summary(t, nu));
  return escape_stats(sums, b1, b2);
}

}  // namespace astra
