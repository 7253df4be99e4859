#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "astra/common.hpp"
#include "astra/dirichlet.hpp"
#include "astra/parallel.hpp"
#include "astra/portfolio.hpp"
#include "astra/rng.hpp"
#include "astra/sequences.hpp"
#include "astra/valuation.hpp"
#include "astra/wfsim.hpp"

#include "json.hpp"

namespace astra {

struct AstraSweepConfig {
  double alpha = 0.75;
  std::vector<std::size_t> n_grid = {50, 200, 800};
  std::size_t paths_per_n = 200;
  double epsilon = 0.5;
  double b1 = 1.1;
  double b2 = 1.4;
  double time_change_rate = 1.0;
  std::uint64_t seed = 0;
  unsigned workers = 0;

  // horizon rule: delta_n -> 0 while delta_n sqrt(log n) -> infinity
  static double delta_n(std::size_t n) {
    return std::pow(std::log(static_cast<double>(n)), -0.25);
  }

  void validate() const {
    require(alpha >= 0.0 && alpha <= 1.0, "AstraSweepConfig: alpha in [0,1]");
    require(!n_grid.empty(), "AstraSweepConfig: empty n grid");
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      require(n_grid[k] >= 2, "AstraSweepConfig: n >= 2");
      if (k > 0) require(n_grid[k] > n_grid[k - 1], "AstraSweepConfig: grid must increase");
    }
    require(paths_per_n >= 2, "AstraSweepConfig: paths_per_n >= 2");
    require(epsilon > 0.0 && epsilon < 1.0, "AstraSweepConfig: epsilon in (0,1)");
    require(1.0 < b1 && b1 < b2 && b2 < std::numbers::pi / 2.0,
            "AstraSweepConfig: need 1 < b1 < b2 < pi/2");
    require(time_change_rate > 0.0 && time_change_rate <= 1.0,
            "AstraSweepConfig: time_change_rate in (0,1]");
  }
};

struct AstraPathRecord {
  double log_v;
  double min_v;
  double slack;          // 2 * max |delta log_v|
  double theta;
  double qv_realized;
  double start_radius;   // scaled sqrt(n)||mu(0) - nu||
  double max_radius;
  bool held_market;      // started outside the exit ball, never traded
  bool drift_ok;
  long neg_events;
};

struct AstraCell {
  std::size_t n;
  double c;              // calibrated scale
  double delta;          // horizon delta_n
  double dt;
  double median_log_v;
  long floor_violations;
  double q_hat;
  double q_se;
  std::size_t q_conditioned;
  long negative_weight_events;
  long drift_cert_failures;
  long held_market;
  double g_ref;          // n R_n / sqrt(log n)
  double runtime_seconds;
};

struct AstraReport {
  AstraSweepConfig config;
  std::vector<AstraCell> cells;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["alpha"] = config.alpha;
    j["epsilon"] = config.epsilon;
    j["b1"] = config.b1;
    j["b2"] = config.b2;
    j["paths_per_n"] = config.paths_per_n;
    j["seed"] = config.seed;
    j["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
      j["cells"].push_back({{"n", c.n},
                            {"c", c.c},
                            {"delta", c.delta},
                            {"dt", c.dt},
                            {"median_log_v", c.median_log_v},
                            {"floor_violations", c.floor_violations},
                            {"q_hat", c.q_hat},
                            {"q_se", c.q_se},
                            {"q_conditioned", c.q_conditioned},
                            {"negative_weight_events", c.negative_weight_events},
                            {"drift_cert_failures", c.drift_cert_failures},
                            {"held_market", c.held_market},
                            {"g_ref", c.g_ref},
                            {"runtime_seconds", c.runtime_seconds}});
    }
    return j;
  }
};

inline double median_of(Vec v) {
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// One stationary WF path valued under the calibrated cosine policy, fused:
// simulate, trade, and accumulate the decomposition in a single pass with no
// trajectory storage.
inline AstraPathRecord astra_path(const AstraSweepConfig& config, std::size_t n,
                                  const Vec& nu, const DirichletParams& params,
                                  CosinePolicy policy, std::mt19937_64& rng) {
  const double dt = WFConfig::default_dt(n);
  const double delta = AstraSweepConfig::delta_n(n);
  const std::size_t steps = static_cast<std::size_t>(std::ceil(delta / dt));
  WFConfig wf{n, nu, dt, delta, config.time_change_rate, 0};

  SimplexPoint p = dirichlet_sample_one(params, rng);
  const double sqn = std::sqrt(static_cast<double>(n));
  AstraPathRecord rec{};
  rec.start_radius = sqn * distance2(p, nu);
  rec.max_radius = rec.start_radius;

  const double exit_radius = config.b2;  // in scaled-radius units
  bool trading = rec.start_radius < exit_radius;
  rec.held_market = !trading;

  PathValuation pv(policy);
  if (trading) pv.start(p, 0.0);

  Vec next = p;
  for (std::size_t k = 0; k < steps; ++k) {
    wf_step(next, wf, rng);
    rec.max_radius = std::max(rec.max_radius, sqn * distance2(next, nu));
    if (trading) pv.step(next, static_cast<double>(k + 1) * dt);
  }
  if (trading) {
    rec.log_v = pv.log_v;
    rec.min_v = pv.min_v;
    rec.slack = 2.0 * pv.max_abs_step;
    rec.theta = pv.theta;
    rec.qv_realized = pv.qv_realized;
    rec.neg_events = pv.neg_events;
    double bound = 0.5 * policy.gen.mult * policy.gen.mult * pv.qv_realized;
    rec.drift_ok = pv.theta >= bound - 1e-6 * std::abs(pv.theta);
  } else {
    rec.log_v = 0.0;
    rec.min_v = 1.0;
    rec.drift_ok = true;
  }
  return rec;
}

inline AstraReport astra_sweep(const AstraSweepConfig& config) {
  config.validate();
  AstraReport report;
  report.config = config;
  for (std::size_t n : config.n_grid) {
    auto t0 = std::chrono::steady_clock::now();
    Vec nu = pareto_target(config.alpha, n);
    DirichletParams params = DirichletParams::pareto(config.alpha, n);
    CosinePolicy policy = CosinePolicy::calibrated(nu, config.epsilon, config.b2);

    std::vector<AstraPathRecord> recs(config.paths_per_n);
    std::uint64_t cell_seed = mix64(config.seed ^ static_cast<std::uint64_t>(n));
    parallel_for(
        config.paths_per_n,
        [&](std::size_t i) {
          auto rng = derived_rng(cell_seed, i);
          recs[i] = astra_path(config, n, nu, params, policy, rng);
        },
        config.workers);

    AstraCell cell{};
    cell.n = n;
    cell.c = policy.gen.scale;
    cell.delta = AstraSweepConfig::delta_n(n);
    cell.dt = WFConfig::default_dt(n);
    Vec log_vs;
    log_vs.reserve(recs.size());
    std::vector<PathRadiusSummary> radii;
    radii.reserve(recs.size());
    for (const auto& r : recs) {
      log_vs.push_back(r.log_v);
      radii.push_back(PathRadiusSummary{r.start_radius, r.max_radius});
      if (r.min_v < 1.0 - config.epsilon - r.slack) ++cell.floor_violations;
      if (!r.drift_ok) ++cell.drift_cert_failures;
      cell.negative_weight_events += r.neg_events;
      if (r.held_market) ++cell.held_market;
    }
    cell.median_log_v = median_of(std::move(log_vs));
    EscapeStats esc = escape_stats(radii, config.b1, config.b2);
    cell.q_hat = esc.q_hat;
    cell.q_se = esc.se;
    cell.q_conditioned = esc.conditioned;
    SeqStats st = stats(hyperharmonic_weights(config.alpha, n));
    cell.g_ref = static_cast<double>(n) * st.r_n / std::sqrt(std::log(static_cast<double>(n)));
    cell.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.cells.push_back(cell);
  }
  return report;
}

struct ConcentrationSweep {
  double alpha;
  std::vector<ConcentrationReport> reports;  // one per n
  bool tails_shrink;     // every tail probability nonincreasing in n
  bool c3_consistent;    // per-n fitted constants within +-50% of their mean

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["tails_shrink"] = tails_shrink;
    j["c3_consistent"] = c3_consistent;
    j["reports"] = nlohmann::json::array();
    for (const auto& r : reports) j["reports"].push_back(r.to_json());
    return j;
  }
};

inline ConcentrationSweep concentration_sweep(double alpha,
                                              const std::vector<std::size_t>& n_grid,
                                              const Vec& r_grid, std::size_t count,
                                              std::uint64_t seed, unsigned workers = 0) {
  require(!n_grid.empty(), "concentration_sweep: empty n grid");
  ConcentrationSweep sweep;
  sweep.alpha = alpha;
  for (std::size_t n : n_grid) {
    std::uint64_t cell_seed = mix64(seed ^ static_cast<std::uint64_t>(n));
    sweep.reports.push_back(tail_report(alpha, n, r_grid, count, cell_seed, workers));
  }
  sweep.tails_shrink = true;
  for (std::size_t k = 1; k < sweep.reports.size(); ++k) {
    for (std::size_t j = 0; j < r_grid.size(); ++j) {
      // 2 se of head-room: tiny MC wiggles at near-zero tails are not a trend
      double allow = 2.0 * sweep.reports[k].tails[j].se_upper;
      if (sweep.reports[k].tails[j].p_upper > sweep.reports[k - 1].tails[j].p_upper + allow)
        sweep.tails_shrink = false;
    }
  }
  double c3_mean = 0.0;
  for (const auto& r : sweep.reports) c3_mean += r.c3_fit;
  c3_mean /= static_cast<double>(sweep.reports.size());
  sweep.c3_consistent = true;
  for (const auto& r : sweep.reports) {
    if (std::abs(r.c3_fit - c3_mean) > 0.5 * c3_mean) sweep.c3_consistent = false;
  }
  return sweep;
}

struct StationarityReport {
  double alpha;
  std::size_t n;
  std::size_t paths;
  double dt;
  Vec times;
  Vec max_abs_z_mean;  // per check time, over coordinates
  Vec max_abs_z_var;
  double max_abs_z;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["n"] = n;
    j["paths"] = paths;
    j["dt"] = dt;
    j["times"] = times;
    j["max_abs_z_mean"] = max_abs_z_mean;
    j["max_abs_z_var"] = max_abs_z_var;
    j["max_abs_z"] = max_abs_z;
    return j;
  }
};

// Marginal law check: per-coordinate means and variances across paths at the
// check times, standardized against the exact Dirichlet moments. Variance
// z-scores use the empirical fourth moment for the standard error.
inline StationarityReport stationarity_sweep(double alpha, std::size_t n, const Vec& times,
                                             double dt, std::size_t paths, std::uint64_t seed,
                                             double time_change_rate = 1.0,
                                             unsigned workers = 0) {
  require(!times.empty(), "stationarity_sweep: empty time grid");
  require(paths >= 100, "stationarity_sweep: paths >= 100");
  for (std::size_t k = 0; k < times.size(); ++k) {
    require(times[k] >= 0.0, "stationarity_sweep: times >= 0");
    if (k > 0) require(times[k] > times[k - 1], "stationarity_sweep: times must increase");
  }
  Vec nu = pareto_target(alpha, n);
  DirichletParams params = DirichletParams::pareto(alpha, n);
  DirichletMoments mom = dirichlet_moments(params);
  double horizon = times.back();
  std::vector<std::size_t> check_steps;
  for (double t : times) check_steps.push_back(static_cast<std::size_t>(std::llround(t / dt)));
  std::size_t steps = check_steps.back();
  WFConfig wf{n, nu, dt, std::max(horizon, dt), time_change_rate, 0};

  // samples[time][path * n + coord]
  std::vector<Vec> samples(times.size(), Vec(paths * n));
  parallel_for(
      paths,
      [&](std::size_t i) {
        auto rng = derived_rng(seed, i);
        SimplexPoint p = dirichlet_sample_one(params, rng);
        std::size_t ci = 0;
        auto record = [&](std::size_t step) {
          while (ci < check_steps.size() && check_steps[ci] == step) {
            std::copy(p.begin(), p.end(), samples[ci].begin() + static_cast<long>(i * n));
            ++ci;
          }
        };
        record(0);
        for (std::size_t k = 1; k <= steps && ci < check_steps.size(); ++k) {
          wf_step(p, wf, rng);
          record(k);
        }
      },
      workers);

  StationarityReport rep;
  rep.alpha = alpha;
  rep.n = n;
  rep.paths = paths;
  rep.dt = dt;
  rep.times = times;
  rep.max_abs_z = 0.0;
  double pcount = static_cast<double>(paths);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    double zm = 0.0, zv = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < paths; ++i) mean += samples[ti][i * n + c];
      mean /= pcount;
      double m2 = 0.0, m4 = 0.0;
      for (std::size_t i = 0; i < paths; ++i) {
        double d = samples[ti][i * n + c] - mean;
        m2 += d * d;
        m4 += d * d * d * d;
      }
      double var = m2 / (pcount - 1.0);
      m4 /= pcount;
      double z_mean = (mean - mom.mean[c]) / std::sqrt(mom.variance[c] / pcount);
      double se_var = std::sqrt(std::max(m4 - var * var * (pcount - 3.0) / (pcount - 1.0),
                                         1e-300) /
                                pcount);
      double z_var = (var - mom.variance[c]) / se_var;
      zm = std::max(zm, std::abs(z_mean));
      zv = std::max(zv, std::abs(z_var));
    }
    rep.max_abs_z_mean.push_back(zm);
    rep.max_abs_z_var.push_back(zv);
    rep.max_abs_z = std::max({rep.max_abs_z, zm, zv});
  }
  return rep;
}

}  // namespace astra
