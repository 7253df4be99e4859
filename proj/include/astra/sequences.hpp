#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "astra/common.hpp"

namespace astra {

// Non-increasing positive weight sequence a_1 >= a_2 >= ... with a_i in (0,1].
struct WeightSequence {
  Vec values;

  explicit WeightSequence(Vec v) : values(std::move(v)) {
    require(values.size() >= 2, "WeightSequence: need n >= 2");
    for (std::size_t i = 0; i < values.size(); ++i) {
      require(values[i] > 0.0 && values[i] <= 1.0,
              "WeightSequence: entries must lie in (0,1]");
      if (i > 0)
        require(values[i] <= values[i - 1], "WeightSequence: must be non-increasing");
    }
  }

  std::size_t n() const { return values.size(); }
};

// a_i = i^(-alpha)
inline WeightSequence hyperharmonic_weights(double alpha, std::size_t n) {
  require(n >= 2, "hyperharmonic_weights: n >= 2");
  require(alpha >= 0.0, "hyperharmonic_weights: alpha >= 0");
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = std::pow(static_cast<double>(i + 1), -alpha);
  return WeightSequence(std::move(v));
}

struct SeqStats {
  double h_n;      // L1 norm
  double sq_norm;  // squared L2 norm
  double r_n;      // sq_norm / h_n^2
  double rho_hat;  // n * a_n / H_n
};

inline SeqStats stats(const WeightSequence& seq) {
  const Vec& a = seq.values;
  Vec sq(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sq[i] = a[i] * a[i];
  double h = kahan_sum(a);
  double s2 = kahan_sum(sq);
  double n = static_cast<double>(a.size());
  return SeqStats{h, s2, s2 / (h * h), n * a.back() / h};
}

// nu_i = i^(-alpha) / H_n, renormalized by the computed sum so the unit-sum
// invariant holds bit-exactly.
inline SimplexPoint pareto_target(double alpha, std::size_t n) {
  require(n >= 2, "pareto_target: n >= 2");
  require(alpha >= 0.0, "pareto_target: alpha >= 0");
  Vec nu(n);
  for (std::size_t i = 0; i < n; ++i)
    nu[i] = std::pow(static_cast<double>(i + 1), -alpha);
  renormalize(nu);
  return nu;
}

// Estimated regular-variation index of H_n: n (1 - H_{n-1}/H_n) = n a_n / H_n.
inline double rv_index_estimate(const WeightSequence& seq) {
  require(seq.n() >= 3, "rv_index_estimate: n >= 3");
  return stats(seq).rho_hat;
}

struct KaramataReport {
  Vec c_n;     // normalizing sequence
  Vec eps_n;   // eps_j = j * a_j / H_j
  double rho;  // tail average of eps_j

  // K_j from the representation c_j j^rho exp(sum_{i<=j} eps_i / i)
  double reconstruct(std::size_t j) const {
    double s = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      double term = eps_n[i] / static_cast<double>(i + 1) - comp;
      double t = s + term;
      comp = (t - s) - term;
      s = t;
    }
    return c_n[j - 1] * std::pow(static_cast<double>(j), rho) * std::exp(s);
  }
};

inline KaramataReport karamata_decompose(const WeightSequence& seq) {
  require(seq.n() >= 3, "karamata_decompose: n >= 3");
  const Vec& a = seq.values;
  const std::size_t n = a.size();
  Vec eps(n), c(n), h(n);
  double hsum = 0.0, comp = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double term = a[j] - comp;
    double t = hsum + term;
    comp = (t - hsum) - term;
    hsum = t;
    h[j] = hsum;
    eps[j] = static_cast<double>(j + 1) * a[j] / hsum;
  }
  // tail average over the last 10% of indices damps the oscillation of the
  // single-term estimate
  std::size_t tail = std::max<std::size_t>(1, n / 10);
  double rho = 0.0;
  for (std::size_t j = n - tail; j < n; ++j) rho += eps[j];
  rho /= static_cast<double>(tail);

  double s = 0.0, comp2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double term = eps[j] / static_cast<double>(j + 1) - comp2;
    double t = s + term;
    comp2 = (t - s) - term;
    s = t;
    c[j] = h[j] / (std::pow(static_cast<double>(j + 1), rho) * std::exp(s));
  }
  return KaramataReport{std::move(c), std::move(eps), rho};
}

struct AssumptionEntry {
  std::size_t n;
  double h_n;
  double r_n;
  double n_r_n_over_log_n;
  double rho_hat;    // n a_n / H_n
  double eps_log_n;  // eps_n * log n, the Zygmund diagnostic value
  bool zygmund_ok;
};

struct AssumptionDiagnostics {
  std::vector<AssumptionEntry> entries;
  double rho_hat;          // tail-averaged estimate at the largest grid point
  bool r_n_decreasing;     // R_n decreasing along the grid
  bool n_r_n_growing;      // nR_n growing along the grid (condition (ii) proxy)
  bool rho_consistent;     // per-n rho_hat near the tail-averaged rho
  bool zygmund_ok;         // only meaningful when rho_hat ~ 0
};

// Desk-scale diagnostics for the standing assumptions on the sequence: R_n
// decay, nR_n growth relative to log n, the regular-variation index, and the
// slowly-varying (Zygmund-style) check eps_n * log n -> 1 for rho near zero.
inline AssumptionDiagnostics check_assumptions(const WeightSequence& seq,
                                               const std::vector<std::size_t>& n_grid) {
  require(!n_grid.empty(), "check_assumptions: empty grid");
  for (std::size_t k = 1; k < n_grid.size(); ++k)
    require(n_grid[k] > n_grid[k - 1], "check_assumptions: grid must increase");
  require(n_grid.back() <= seq.n(), "check_assumptions: grid exceeds sequence length");

  AssumptionDiagnostics diag{};
  const Vec& a = seq.values;
  double h = 0.0, s2 = 0.0, comp_h = 0.0, comp_s = 0.0;
  std::size_t gi = 0;
  for (std::size_t j = 0; j < seq.n() && gi < n_grid.size(); ++j) {
    double term = a[j] - comp_h;
    double t = h + term;
    comp_h = (t - h) - term;
    h = t;
    double term2 = a[j] * a[j] - comp_s;
    double t2 = s2 + term2;
    comp_s = (t2 - s2) - term2;
    s2 = t2;
    if (j + 1 == n_grid[gi]) {
      double n = static_cast<double>(j + 1);
      double rn = s2 / (h * h);
      double eps = n * a[j] / h;
      AssumptionEntry e;
      e.n = j + 1;
      e.h_n = h;
      e.r_n = rn;
      e.n_r_n_over_log_n = n * rn / std::log(n);
      e.rho_hat = eps;
      e.eps_log_n = eps * std::log(n);
      e.zygmund_ok = std::abs(e.eps_log_n - 1.0) < 0.25;
      diag.entries.push_back(e);
      ++gi;
    }
  }

  // tail-averaged rho at the largest grid point
  {
    WeightSequence head(Vec(a.begin(), a.begin() + static_cast<long>(n_grid.back())));
    diag.rho_hat = karamata_decompose(head).rho;
  }
  diag.r_n_decreasing = true;
  diag.n_r_n_growing = true;
  for (std::size_t k = 1; k < diag.entries.size(); ++k) {
    if (diag.entries[k].r_n >= diag.entries[k - 1].r_n) diag.r_n_decreasing = false;
  }
  if (diag.entries.size() >= 2) {
    double first = static_cast<double>(diag.entries.front().n) * diag.entries.front().r_n;
    double last = static_cast<double>(diag.entries.back().n) * diag.entries.back().r_n;
    diag.n_r_n_growing = last >= 1.2 * first;
  }
  diag.rho_consistent =
      std::abs(diag.entries.back().rho_hat - diag.rho_hat) < 0.1 + 3.0 / std::log(static_cast<double>(n_grid.back()));
  diag.zygmund_ok = diag.entries.back().zygmund_ok;
  return diag;
}

}  // namespace astra
