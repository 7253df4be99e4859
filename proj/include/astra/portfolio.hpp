#pragma once

#include <cmath>
#include <cstddef>

#include "astra/common.hpp"
#include "astra/expconcave.hpp"

namespace astra {

// Components below -kNegClipTol count as genuine negative-weight events (the
// gradient outran the calibration); anything in (-kNegClipTol, 0) is
// floating-point noise. Both are clipped and the vector renormalized so the
// closed-simplex invariant stays bit-testable.
inline constexpr double kNegClipTol = 1e-14;

inline void clip_to_closed_simplex(Vec& pi, long* neg_events) {
  bool dirty = false;
  for (double& w : pi) {
    if (w < 0.0) {
      if (w < -kNegClipTol && neg_events) ++(*neg_events);
      w = 0.0;
      dirty = true;
    }
  }
  double sum = kahan_sum(pi);
  if (dirty || std::abs(sum - 1.0) > 1e-15) {
    for (double& w : pi) w /= sum;
  }
}

// Functionally generated portfolio map: pi_i = p_i (v_i + 1 - <p,v>) with
// v the generator gradient at p. Works for any generator exposing eval().
template <class Generator>
Vec fgp_map(const Generator& gen, const Vec& p, long* neg_events = nullptr) {
  auto e = eval(gen, p);
  require(e.in_domain, "fgp_map: p outside the generator domain");
  const Vec& v = e.gradient;
  double pv = dot(p, v);
  Vec pi(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) pi[i] = p[i] * (v[i] + 1.0 - pv);
  clip_to_closed_simplex(pi, neg_events);
  return pi;
}

// Cosine portfolio with the exit rule: once the state leaves the exit ball
// the policy converts to the market portfolio and stays there for the rest
// of the run. exit_angle is in the generator's angle coordinate mult * r,
// so a scaled-radius exit at b2 corresponds to exit_angle = c * b2.
struct CosinePolicy {
  CosineGenerator gen;
  double exit_angle;
  bool exited = false;

  CosinePolicy(CosineGenerator g, double exit_angle_) : gen(std::move(g)), exit_angle(exit_angle_) {
    require(exit_angle > 0.0 && exit_angle < std::numbers::pi / 2.0,
            "CosinePolicy: exit angle must lie in (0, pi/2)");
  }

  // Calibration rule: c = min(1, arccos(1-eps)/b2) guarantees
  // cos(c b2) >= 1-eps, which is what the value floor needs.
  static CosinePolicy calibrated(Vec center, double epsilon, double b2) {
    require(epsilon > 0.0 && epsilon < 1.0, "CosinePolicy: epsilon in (0,1)");
    require(b2 > 1.0 && b2 < std::numbers::pi / 2.0, "CosinePolicy: 1 < b2 < pi/2");
    double c = std::min(1.0, std::acos(1.0 - epsilon) / b2);
    return CosinePolicy(CosineGenerator::scaled(std::move(center), c), c * b2);
  }

  Vec weights(const Vec& p, long* neg_events = nullptr) {
    if (!exited) {
      double angle = gen.angle_of_radius(distance2(p, gen.center));
      if (angle >= exit_angle) exited = true;
    }
    if (exited) return p;
    return fgp_map(gen, p, neg_events);
  }
};

inline Vec equal_weighted(std::size_t n) {
  require(n >= 2, "equal_weighted: n >= 2");
  return Vec(n, 1.0 / static_cast<double>(n));
}

// pi_i = p_i^exponent / sum_j p_j^exponent
inline Vec diversity_weighted(const Vec& p, double exponent) {
  require(exponent > 0.0 && exponent <= 1.0, "diversity_weighted: exponent in (0,1]");
  Vec pi(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) pi[i] = std::pow(p[i], exponent);
  renormalize(pi);
  return pi;
}

}  // namespace astra
