#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "astra/common.hpp"
#include "astra/parallel.hpp"
#include "astra/rng.hpp"
#include "astra/sequences.hpp"

#include "json.hpp"

namespace astra {

struct DirichletParams {
  Vec gamma;

  explicit DirichletParams(Vec g) : gamma(std::move(g)) {
    require(gamma.size() >= 2, "DirichletParams: need n >= 2");
    for (double x : gamma)
      require(x > 0.0, "DirichletParams: entries must be strictly positive");
  }

  // gamma = n * pareto_target(alpha, n), the paper's parameterization
  static DirichletParams pareto(double alpha, std::size_t n) {
    Vec g = pareto_target(alpha, n);
    for (double& x : g) x *= static_cast<double>(n);
    return DirichletParams(std::move(g));
  }

  std::size_t n() const { return gamma.size(); }
};

// One draw via the gamma construction Z_i / S. Non-finite or zero draws
// (shape underflow) are resampled up to max_retries, then rejected.
inline SimplexPoint dirichlet_sample_one(const DirichletParams& params, std::mt19937_64& rng,
                                         int max_retries = 16) {
  const std::size_t n = params.n();
  Vec z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double g = gamma_draw(rng, params.gamma[i]);
    int tries = 0;
    while (!(std::isfinite(g)) && tries++ < max_retries) g = gamma_draw(rng, params.gamma[i]);
    if (!std::isfinite(g))
      throw std::runtime_error("dirichlet_sample_one: non-finite gamma draw after retries");
    // an exact 0 (underflow of the boost factor) would break downstream
    // log/ratio code; nudge to the smallest normal
    if (g <= 0.0) g = 2.2250738585072014e-308;
    z[i] = g;
  }
  renormalize(z);
  return z;
}

// count draws with per-index derived streams: identical seed gives an
// identical batch for any worker count.
inline std::vector<SimplexPoint> dirichlet_sample(const DirichletParams& params,
                                                  std::size_t count, std::uint64_t seed,
                                                  unsigned workers = 0) {
  require(count >= 1, "dirichlet_sample: count >= 1");
  std::vector<SimplexPoint> out(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        auto rng = derived_rng(seed, i);
        out[i] = dirichlet_sample_one(params, rng);
      },
      workers);
  return out;
}

struct DirichletMoments {
  Vec mean;
  Vec variance;
};

// mean_i = gamma_i / sum, var_i = nu_i (1 - nu_i) / (s + 1) with s = sum(gamma)
inline DirichletMoments dirichlet_moments(const DirichletParams& params) {
  double s = kahan_sum(params.gamma);
  DirichletMoments m;
  m.mean.resize(params.n());
  m.variance.resize(params.n());
  for (std::size_t i = 0; i < params.n(); ++i) {
    double nu = params.gamma[i] / s;
    m.mean[i] = nu;
    m.variance[i] = nu * (1.0 - nu) / (s + 1.0);
  }
  return m;
}

struct MeanNormEstimate {
  double estimate;
  double se;
  double ci_lo;
  double ci_hi;
};

// MC estimate of E[sqrt(n) ||X - nu||], X ~ Dirichlet(n nu), nu Pareto(alpha).
inline MeanNormEstimate estimate_mean_norm(double alpha, std::size_t n, std::size_t count,
                                           std::uint64_t seed, unsigned workers = 0) {
  require(count >= 1000, "estimate_mean_norm: count >= 1e3");
  DirichletParams params = DirichletParams::pareto(alpha, n);
  Vec nu = pareto_target(alpha, n);
  double sqn = std::sqrt(static_cast<double>(n));
  Vec norms(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        auto rng = derived_rng(seed, i);
        SimplexPoint x = dirichlet_sample_one(params, rng);
        norms[i] = sqn * distance2(x, nu);
      },
      workers);
  double mean = kahan_sum(norms) / static_cast<double>(count);
  double var = 0.0;
  for (double v : norms) var += (v - mean) * (v - mean);
  var /= static_cast<double>(count - 1);
  double se = std::sqrt(var / static_cast<double>(count));
  return MeanNormEstimate{mean, se, mean - 1.96 * se, mean + 1.96 * se};
}

struct TailEntry {
  double r;
  double p_upper;  // P(sqrt(n)||X-nu|| > 1+r)
  double p_lower;  // P(sqrt(n)||X-nu|| < 1/2-r)
  double se_upper;
  double se_lower;
  double critical_bound;  // c3_fit * R_n / r^2
};

struct ConcentrationReport {
  double alpha;
  std::size_t n;
  std::size_t count;
  double r_n;
  double mean_norm;
  double mean_se;
  double c3_fit;  // max over the grid of p_upper * r^2 / R_n
  std::vector<TailEntry> tails;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["n"] = n;
    j["count"] = count;
    j["r_n"] = r_n;
    j["mean_norm"] = mean_norm;
    j["ci"] = {mean_norm - 1.96 * mean_se, mean_norm + 1.96 * mean_se};
    j["c3_fit"] = c3_fit;
    j["tails"] = nlohmann::json::array();
    for (const auto& t : tails) {
      j["tails"].push_back({{"r", t.r},
                            {"p_upper", t.p_upper},
                            {"p_lower", t.p_lower},
                            {"se", t.se_upper},
                            {"critical_bound", t.critical_bound}});
    }
    return j;
  }
};

// Empirical deviation probabilities around the fixed anchors 1+r and 1/2-r.
// The dominating constant for the critical-case shape check is fitted from
// the grid, never assumed.
inline ConcentrationReport tail_report(double alpha, std::size_t n, const Vec& r_grid,
                                       std::size_t count, std::uint64_t seed,
                                       unsigned workers = 0) {
  require(count >= 10000, "tail_report: count >= 1e4");
  for (double r : r_grid) require(r > 0.0, "tail_report: r > 0");
  DirichletParams params = DirichletParams::pareto(alpha, n);
  Vec nu = pareto_target(alpha, n);
  double rn = stats(hyperharmonic_weights(alpha, n)).r_n;
  double sqn = std::sqrt(static_cast<double>(n));
  Vec norms(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        auto rng = derived_rng(seed, i);
        SimplexPoint x = dirichlet_sample_one(params, rng);
        norms[i] = sqn * distance2(x, nu);
      },
      workers);
  ConcentrationReport rep;
  rep.alpha = alpha;
  rep.n = n;
  rep.count = count;
  rep.r_n = rn;
  rep.mean_norm = kahan_sum(norms) / static_cast<double>(count);
  double var = 0.0;
  for (double v : norms) var += (v - rep.mean_norm) * (v - rep.mean_norm);
  rep.mean_se = std::sqrt(var / static_cast<double>(count - 1) / static_cast<double>(count));
  rep.c3_fit = 0.0;
  for (double r : r_grid) {
    std::size_t up = 0, lo = 0;
    for (double v : norms) {
      if (v > 1.0 + r) ++up;
      if (v < 0.5 - r) ++lo;
    }
    TailEntry t;
    t.r = r;
    t.p_upper = static_cast<double>(up) / static_cast<double>(count);
    t.p_lower = static_cast<double>(lo) / static_cast<double>(count);
    t.se_upper = std::sqrt(t.p_upper * (1.0 - t.p_upper) / static_cast<double>(count));
    t.se_lower = std::sqrt(t.p_lower * (1.0 - t.p_lower) / static_cast<double>(count));
    rep.c3_fit = std::max(rep.c3_fit, t.p_upper * r * r / rn);
    rep.tails.push_back(t);
  }
  for (auto& t : rep.tails) t.critical_bound = rep.c3_fit * rn / (t.r * t.r);
  return rep;
}

struct GammaSumTail {
  double empirical;  // P(|S_n - n| > u sqrt(n))
  double bound;      // 2 exp(-u^2/4)
  double se;
};

// S_n is the sum of the gamma variates behind the Dirichlet construction;
// its tail is checked against the large-deviation bound.
inline GammaSumTail gamma_sum_tail(std::size_t n, double u, std::size_t count,
                                   std::uint64_t seed, double alpha = 1.0,
                                   unsigned workers = 0) {
  require(static_cast<double>(n) > u * u, "gamma_sum_tail: need n > u^2");
  DirichletParams params = DirichletParams::pareto(alpha, n);
  double sqn = std::sqrt(static_cast<double>(n));
  std::vector<unsigned char> hits(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        auto rng = derived_rng(seed, i);
        double s = 0.0;
        for (double g : params.gamma) s += gamma_draw(rng, g);
        hits[i] = std::abs(s - static_cast<double>(n)) > u * sqn ? 1 : 0;
      },
      workers);
  std::size_t h = 0;
  for (auto b : hits) h += b;
  GammaSumTail out;
  out.empirical = static_cast<double>(h) / static_cast<double>(count);
  out.bound = 2.0 * std::exp(-u * u / 4.0);
  out.se = std::sqrt(out.empirical * (1.0 - out.empirical) / static_cast<double>(count));
  return out;
}

}  // namespace astra
