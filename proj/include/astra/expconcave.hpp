#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "astra/common.hpp"

namespace astra {

// Generating function phi(x) = log cos(mult * ||x - center||) on the ball
// mult * ||x - center|| < pi/2. The theory scales the radius by sqrt(n)
// (mult = c sqrt(n)); the data pipeline uses the raw radius (mult = c).
struct CosineGenerator {
  Vec center;
  double scale;  // c
  double mult;   // effective multiplier on the raw radius

  static CosineGenerator scaled(Vec center, double c) {
    require(c > 0.0 && c <= 1.0, "CosineGenerator: scale in (0,1]");
    double m = c * std::sqrt(static_cast<double>(center.size()));
    return CosineGenerator{std::move(center), c, m};
  }

  static CosineGenerator raw(Vec center, double c) {
    require(c > 0.0, "CosineGenerator: c > 0");
    return CosineGenerator{std::move(center), c, c};
  }

  std::size_t n() const { return center.size(); }

  // angle = mult * ||x - center||; the domain is angle < pi/2
  double angle_of_radius(double r) const { return mult * r; }
};

// slightly inside pi/2 so tan never blows up; the portfolio layer exits at
// b2 long before this guard matters
inline constexpr double kDomainGuard = 1e-9;

struct GeneratorEval {
  double value;     // phi(x); -inf outside the domain
  Vec gradient;     // defined only when in_domain
  bool in_domain;
  double radius;    // ||x - center||
  double angle;     // mult * radius
};

inline GeneratorEval eval(const CosineGenerator& gen, const Vec& x) {
  require(x.size() == gen.n(), "eval: dimension mismatch");
  GeneratorEval out;
  out.radius = distance2(x, gen.center);
  out.angle = gen.mult * out.radius;
  out.in_domain = out.angle < std::numbers::pi / 2.0 - kDomainGuard;
  if (!out.in_domain) {
    out.value = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = std::log(std::cos(out.angle));
  out.gradient.resize(gen.n());
  if (out.radius == 0.0) {
    // removable singularity: the gradient limit at the center is 0
    std::fill(out.gradient.begin(), out.gradient.end(), 0.0);
  } else {
    double factor = -gen.mult * std::tan(out.angle) / out.radius;
    for (std::size_t i = 0; i < gen.n(); ++i)
      out.gradient[i] = factor * (x[i] - gen.center[i]);
  }
  return out;
}

// Largest eigenvalue of (1/Phi) Hess Phi by central finite differences of
// Phi = exp(phi), against the certified bound -mult^2.
inline std::pair<double, double> kn_certificate(const CosineGenerator& gen, const Vec& x,
                                                double h) {
  require(h > 0.0, "kn_certificate: h > 0");
  const std::size_t n = gen.n();
  double margin = 10.0 * h * std::sqrt(static_cast<double>(n));
  GeneratorEval e0 = eval(gen, x);
  require(e0.in_domain && e0.angle <= std::numbers::pi / 2.0 - margin,
          "kn_certificate: point too close to the domain boundary for this step");

  auto big_phi = [&](Vec p) {
    double r = distance2(p, gen.center);
    return std::cos(gen.mult * r);
  };
  double f0 = big_phi(x);
  Eigen::MatrixXd hess(n, n);
  Vec p = x;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = x[i] + h;
    double fp = big_phi(p);
    p[i] = x[i] - h;
    double fm = big_phi(p);
    p[i] = x[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      p[i] = x[i] + h; p[j] = x[j] + h;
      double fpp = big_phi(p);
      p[j] = x[j] - h;
      double fpm = big_phi(p);
      p[i] = x[i] - h; p[j] = x[j] + h;
      double fmp = big_phi(p);
      p[j] = x[j] - h;
      double fmm = big_phi(p);
      p[i] = x[i]; p[j] = x[j];
      double v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  hess /= f0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hess, Eigen::EigenvaluesOnly);
  double max_eig = solver.eigenvalues().maxCoeff();
  return {max_eig, -gen.mult * gen.mult};
}

// phi(x) <= phi(x0) + log cos(mult ||x - x0||); for the cosine generator
// itself this is an identity, kept as a regression check of eval.
inline bool maximality_check(const CosineGenerator& gen, const Vec& x, double tol = 1e-12) {
  GeneratorEval e = eval(gen, x);
  require(e.in_domain, "maximality_check: x outside the domain");
  double envelope = std::log(std::cos(e.angle));
  return e.value <= envelope + tol;
}

}  // namespace astra
