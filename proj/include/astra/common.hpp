#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace astra {

using Vec = std::vector<double>;

// A point in the open unit simplex: strictly positive entries summing to 1.
// Kept as a plain vector; validation helpers below.
using SimplexPoint = Vec;

inline constexpr double kSimplexSumTol = 1e-9;
inline constexpr double kSimplexFloor = 1e-12;

// Compensated summation. Large partial sums of near-equal terms (H_n at
// n ~ 1e6) lose digits under naive accumulation.
inline double kahan_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    double y = x - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

inline double dot(const Vec& a, const Vec& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double distance2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool is_simplex_point(const Vec& p, double tol = kSimplexSumTol) {
  if (p.size() < 2) return false;
  double sum = 0.0;
  for (double x : p) {
    if (!(x > 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

inline void renormalize(Vec& p) {
  double sum = kahan_sum(p);
  if (!(sum > 0.0)) throw std::runtime_error("renormalize: nonpositive sum");
  for (double& x : p) x /= sum;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace astra
