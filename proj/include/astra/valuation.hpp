#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "astra/common.hpp"
#include "astra/expconcave.hpp"
#include "astra/portfolio.hpp"
#include "astra/wfsim.hpp"

namespace astra {

struct ValuationResult {
  Vec log_v;       // log relative value per grid time
  Vec theta;       // drift process Theta(t)
  double phi_start = 0.0;
  Vec phi_path;    // phi(mu(t)), frozen after exit
  double min_v = 1.0;
  double exited_at = -1.0;  // grid time of exit, or -1
  double max_abs_step = 0.0;  // max |delta log_v|, feeds the floor slack
  long negative_weight_events = 0;
};

// Analytic Theta increment for the cosine generator: with u = mult,
// d = p - x0, r = ||d||, s = <d, delta>/r,
//   -(1/(2 Phi)) delta' Hess Phi delta
//     = (u^2/2) s^2 + (u tan(ur) / (2r)) (||delta||^2 - s^2).
// tan(x)/x >= 1 makes every increment >= (u^2/2) ||delta||^2.
inline double theta_increment(const CosineGenerator& gen, const Vec& p, const Vec& delta) {
  const double u = gen.mult;
  double r2 = 0.0, sd = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double di = p[i] - gen.center[i];
    r2 += di * di;
    sd += di * delta[i];
    d2 += delta[i] * delta[i];
  }
  double r = std::sqrt(r2);
  if (r == 0.0) return 0.5 * u * u * d2;
  double s2 = (sd / r) * (sd / r);
  return 0.5 * u * u * s2 + 0.5 * u * std::tan(u * r) / r * (d2 - s2);
}

// Streaming valuation of the cosine policy along one path: the wealth
// recursion, the Fernholz decomposition with the analytic Theta, and the
// realized quadratic variation that the drift certificate needs. Feed points
// in order; no trajectory storage required.
struct PathValuation {
  CosinePolicy policy;
  Vec prev;
  double t_prev = 0.0;
  double log_v = 0.0;      // recursion value
  double log_v_dec = 0.0;  // decomposition value phi - phi0 + theta
  double theta = 0.0;
  double phi_start = 0.0;
  double phi_prev = 0.0;
  double min_v = 1.0;
  double qv_realized = 0.0;  // sum over pre-exit steps of ||delta mu||^2
  double max_abs_step = 0.0;
  double exited_at = -1.0;
  long neg_events = 0;

  explicit PathValuation(CosinePolicy p) : policy(std::move(p)) {}

  void start(const Vec& p0, double t0 = 0.0) {
    prev = p0;
    t_prev = t0;
    auto e = eval(policy.gen, p0);
    require(e.in_domain, "PathValuation: start outside the generator domain");
    require(e.angle < policy.exit_angle, "PathValuation: start outside the exit ball");
    phi_start = e.value;
    phi_prev = e.value;
  }

  void step(const Vec& next, double t) {
    bool was_exited = policy.exited;
    Vec pi = policy.weights(prev, &neg_events);
    if (!was_exited && policy.exited) exited_at = t_prev;

    // self-financing recursion V' = V * sum_i pi_i mu'_i / mu_i
    double factor = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (prev[i] <= 0.0)
        throw std::runtime_error("PathValuation: zero coordinate in trajectory");
      factor += pi[i] * next[i] / prev[i];
    }
    double inc = std::log(factor);
    log_v += inc;
    max_abs_step = std::max(max_abs_step, std::abs(inc));
    min_v = std::min(min_v, std::exp(log_v));

    if (!policy.exited) {
      Vec delta(prev.size());
      double d2 = 0.0;
      for (std::size_t i = 0; i < prev.size(); ++i) {
        delta[i] = next[i] - prev[i];
        d2 += delta[i] * delta[i];
      }
      theta += theta_increment(policy.gen, prev, delta);
      qv_realized += d2;
      auto e = eval(policy.gen, next);
      if (e.in_domain) {
        phi_prev = e.value;
      } else {
        // a single step jumped past the whole domain: convert immediately
        policy.exited = true;
        exited_at = t;
      }
      log_v_dec = phi_prev - phi_start + theta;
    }
    prev = next;
    t_prev = t;
  }
};

template <class WeightFn>
ValuationResult wealth_recursion(const Trajectory& traj, WeightFn&& weights_of) {
  require(!traj.points.empty(), "wealth_recursion: empty trajectory");
  ValuationResult res;
  res.log_v.reserve(traj.points.size());
  res.log_v.push_back(0.0);
  double lv = 0.0;
  for (std::size_t k = 0; k + 1 < traj.points.size(); ++k) {
    const Vec& p = traj.points[k];
    const Vec& q = traj.points[k + 1];
    Vec pi = weights_of(p);
    double factor = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0)
        throw std::runtime_error("wealth_recursion: zero coordinate in trajectory");
      factor += pi[i] * q[i] / p[i];
    }
    double inc = std::log(factor);
    lv += inc;
    res.max_abs_step = std::max(res.max_abs_step, std::abs(inc));
    res.min_v = std::min(res.min_v, std::exp(lv));
    res.log_v.push_back(lv);
  }
  return res;
}

inline ValuationResult wealth_recursion(const Trajectory& traj, CosinePolicy policy) {
  require(!traj.points.empty(), "wealth_recursion: empty trajectory");
  ValuationResult res;
  PathValuation pv(policy);
  pv.start(traj.points.front(), traj.times.front());
  res.log_v.push_back(0.0);
  for (std::size_t k = 1; k < traj.points.size(); ++k) {
    pv.step(traj.points[k], traj.times[k]);
    res.log_v.push_back(pv.log_v);
  }
  res.min_v = pv.min_v;
  res.exited_at = pv.exited_at;
  res.max_abs_step = pv.max_abs_step;
  res.negative_weight_events = pv.neg_events;
  return res;
}

// Fernholz decomposition along the path: log V = phi(mu_t) - phi(mu_0) +
// Theta(t), with Theta accumulated from the analytic cosine Hessian against
// realized increments. Contributions freeze at the exit time.
inline ValuationResult fernholz_decompose(const Trajectory& traj, const CosineGenerator& gen,
                                          double exit_angle) {
  require(!traj.points.empty(), "fernholz_decompose: empty trajectory");
  ValuationResult res;
  PathValuation pv(CosinePolicy(gen, exit_angle));
  pv.start(traj.points.front(), traj.times.front());
  res.phi_start = pv.phi_start;
  res.log_v.push_back(0.0);
  res.theta.push_back(0.0);
  res.phi_path.push_back(pv.phi_start);
  for (std::size_t k = 1; k < traj.points.size(); ++k) {
    pv.step(traj.points[k], traj.times[k]);
    res.log_v.push_back(pv.log_v_dec);
    res.theta.push_back(pv.theta);
    res.phi_path.push_back(pv.phi_prev);
  }
  res.min_v = pv.min_v;
  res.exited_at = pv.exited_at;
  res.max_abs_step = pv.max_abs_step;
  res.negative_weight_events = pv.neg_events;
  return res;
}

struct DriftCertificate {
  bool ok;
  double theta_end;
  double qv_bound;          // (mult^2/2) * realized sum ||delta mu||^2
  double rho_hat;           // min over steps of ||delta||^2 / (sum mu_i^2 dtau)
  double lemma_reference;   // (rho_hat/4)(n R_n - pi^2/2) t
};

// Theta(t) >= (c^2 n / 2) * realized QV is a direct (K,N) consequence; the
// Lemma-form reference value is reported alongside, never asserted.
inline DriftCertificate drift_floor_certificate(const ValuationResult& result,
                                                const Trajectory& traj,
                                                const CosineGenerator& gen, double dtau,
                                                double r_n = 0.0) {
  require(!result.theta.empty(), "drift_floor_certificate: need a decomposition result");
  std::size_t last = result.theta.size() - 1;
  if (result.exited_at >= 0.0) {
    while (last > 0 && traj.times[last] > result.exited_at) --last;
  }
  double qv = 0.0;
  double rho_hat = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < last; ++k) {
    const Vec& p = traj.points[k];
    const Vec& q = traj.points[k + 1];
    double d2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double d = q[i] - p[i];
      d2 += d * d;
    }
    qv += d2;
    double denom = traj.sq_sum_path[k] * dtau;
    if (denom > 0.0) rho_hat = std::min(rho_hat, d2 / denom);
  }
  DriftCertificate cert;
  cert.theta_end = result.theta[last];
  cert.qv_bound = 0.5 * gen.mult * gen.mult * qv;
  cert.ok = cert.theta_end >= cert.qv_bound - 1e-6 * std::abs(cert.theta_end);
  cert.rho_hat = rho_hat;
  double n = static_cast<double>(gen.n());
  double pi2 = std::numbers::pi * std::numbers::pi;
  cert.lemma_reference =
      std::isfinite(rho_hat) && r_n > 0.0
          ? 0.25 * rho_hat * (n * r_n - 0.5 * pi2) * traj.times[last]
          : 0.0;
  return cert;
}

struct FloorCertificate {
  bool ok;
  double min_v;
  double floor;  // 1 - epsilon
  double slack;  // 2 * max |delta log_v|
};

inline FloorCertificate floor_certificate(const ValuationResult& result, double epsilon) {
  require(epsilon > 0.0 && epsilon < 1.0, "floor_certificate: epsilon in (0,1)");
  FloorCertificate cert;
  cert.min_v = result.min_v;
  cert.floor = 1.0 - epsilon;
  cert.slack = 2.0 * result.max_abs_step;
  cert.ok = cert.min_v >= cert.floor - cert.slack;
  return cert;
}

}  // namespace astra
