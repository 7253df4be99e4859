#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "astra/common.hpp"
#include "astra/expconcave.hpp"
#include "astra/portfolio.hpp"

#include "json.hpp"

namespace astra {

struct CapTable {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  std::vector<Vec> caps;  // one row per date
  std::vector<std::string> ingest_log;  // forward fills / dropped assets

  std::size_t n_dates() const { return dates.size(); }
  std::size_t n_assets() const { return assets.size(); }
};

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}
}  // namespace detail

// CSV schema: header `date,asset_1,...`; each row an ISO-8601 date followed
// by positive decimal caps. Empty cells are missing data: rejected unless
// forward_fill is set, which fills runs of at most max_gap from the previous
// value and drops assets with longer runs or missing leading values.
inline CapTable load_caps(const std::string& path, bool forward_fill = false,
                          int max_gap = 2) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_caps: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_caps: " + path + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = detail::split_csv(line);
  if (header.size() < 3 || header[0] != "date")
    throw std::runtime_error("load_caps: " + path +
                             ": header must be `date,asset_1,...` with >= 2 assets");
  CapTable table;
  table.assets.assign(header.begin() + 1, header.end());
  const std::size_t n = table.assets.size();

  std::vector<std::vector<int>> missing_runs(n);  // current run length per asset
  std::vector<int> run(n, 0);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = detail::split_csv(line);
    if (cells.size() != n + 1)
      throw std::runtime_error("load_caps: " + path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(n + 1) + " cells, got " +
                               std::to_string(cells.size()));
    const std::string& date = cells[0];
    if (!table.dates.empty()) {
      if (date == table.dates.back())
        throw std::runtime_error("load_caps: " + path + ":" + std::to_string(lineno) +
                                 ": duplicate date " + date);
      if (date < table.dates.back())
        throw std::runtime_error("load_caps: " + path + ":" + std::to_string(lineno) +
                                 ": dates must be strictly increasing");
    }
    Vec row(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& cell = cells[i + 1];
      if (cell.empty()) {
        if (!forward_fill || table.caps.empty())
          throw std::runtime_error("load_caps: " + path + ":" + std::to_string(lineno) +
                                   ": missing cap for asset " + table.assets[i]);
        row[i] = table.caps.back()[i];
        ++run[i];
        table.ingest_log.push_back("forward-filled " + table.assets[i] + " at " + date);
      } else {
        double v = 0.0;
        try {
          std::size_t pos = 0;
          v = std::stod(cell, &pos);
          if (pos != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          throw std::runtime_error("load_caps: " + path + ":" + std::to_string(lineno) +
                                   ": bad number `" + cell + "` for asset " +
                                   table.assets[i]);
        }
        if (!(v > 0.0))
          throw std::runtime_error("load_caps: " + path + ":" + std::to_string(lineno) +
                                   ": non-positive cap for asset " + table.assets[i] +
                                   " at " + date);
        run[i] = 0;
        row[i] = v;
      }
      if (run[i] > max_gap) missing_runs[i].push_back(run[i]);
    }
    table.dates.push_back(date);
    table.caps.push_back(std::move(row));
  }
  if (table.dates.empty())
    throw std::runtime_error("load_caps: " + path + ": no data rows");

  // drop assets whose gaps exceeded the fill budget
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (missing_runs[i].empty()) {
      keep.push_back(i);
    } else {
      table.ingest_log.push_back("dropped " + table.assets[i] + " (gap > " +
                                 std::to_string(max_gap) + ")");
    }
  }
  if (keep.size() < n) {
    require(keep.size() >= 2, "load_caps: fewer than 2 assets remain after gap policy");
    std::vector<std::string> assets;
    for (std::size_t i : keep) assets.push_back(table.assets[i]);
    for (auto& row : table.caps) {
      Vec nr;
      nr.reserve(keep.size());
      for (std::size_t i : keep) nr.push_back(row[i]);
      row = std::move(nr);
    }
    table.assets = std::move(assets);
  }
  return table;
}

inline std::vector<SimplexPoint> to_weights(const CapTable& table) {
  std::vector<SimplexPoint> out;
  out.reserve(table.n_dates());
  for (const auto& row : table.caps) {
    Vec w = row;
    renormalize(w);
    out.push_back(std::move(w));
  }
  return out;
}

struct CapitalDistribution {
  Vec log_rank;
  Vec log_weight;
  double slope;       // least-squares slope of log weight on log rank
  double alpha_hat;   // -slope, the Pareto index
};

inline CapitalDistribution capital_distribution(const SimplexPoint& weights,
                                                std::size_t top_k = 0) {
  const std::size_t n = weights.size();
  if (top_k == 0) top_k = n;
  require(top_k >= 2 && top_k <= n, "capital_distribution: top_k in [2, n]");
  Vec sorted = weights;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  CapitalDistribution cd;
  cd.log_rank.reserve(top_k);
  cd.log_weight.reserve(top_k);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < top_k; ++i) {
    double x = std::log(static_cast<double>(i + 1));
    double y = std::log(sorted[i]);
    cd.log_rank.push_back(x);
    cd.log_weight.push_back(y);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double k = static_cast<double>(top_k);
  cd.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  cd.alpha_hat = -cd.slope;
  return cd;
}

inline Vec entropy_series(const std::vector<SimplexPoint>& weights) {
  Vec out;
  out.reserve(weights.size());
  for (const auto& w : weights) {
    double h = 0.0;
    for (double x : w) h -= x * std::log(x);
    out.push_back(h);
  }
  return out;
}

// sqrt(n) ||mu(t) - mu(0)|| per date; first entry 0
inline Vec scaled_distance_series(const std::vector<SimplexPoint>& weights) {
  require(!weights.empty(), "scaled_distance_series: empty series");
  Vec out;
  out.reserve(weights.size());
  double sqn = std::sqrt(static_cast<double>(weights.front().size()));
  for (const auto& w : weights) out.push_back(sqn * distance2(w, weights.front()));
  return out;
}

enum class RadiusScaling { raw, sqrt_n };

struct BacktestConfig {
  std::size_t period_length = 10;
  double c = 3.0;
  double diversity_exponent = 0.5;
  double exit_angle = 1.4;  // in the generator angle coordinate, < pi/2
  RadiusScaling radius_scaling = RadiusScaling::raw;
  std::size_t slope_top_k = 0;  // 0 = all assets

  void validate() const {
    require(period_length >= 2, "BacktestConfig: period_length >= 2");
    require(c > 0.0, "BacktestConfig: c > 0");
    require(diversity_exponent > 0.0 && diversity_exponent <= 1.0,
            "BacktestConfig: diversity exponent in (0,1]");
    require(exit_angle > 0.0 && exit_angle < std::numbers::pi / 2.0,
            "BacktestConfig: exit_angle in (0, pi/2)");
  }
};

struct BacktestReport {
  std::vector<std::string> dates;
  Vec log_v_cosine;
  Vec log_v_equal;
  Vec log_v_diversity;
  Vec log_v_market;
  Vec entropy;
  Vec scaled_distance;
  Vec period_slopes;  // Pareto alpha_hat at each period start
  std::vector<std::string> warnings;
  long negative_weight_events = 0;
  long period_exits = 0;
  std::string radius_scaling;

  void write_csv(std::ostream& os) const {
    os << "date,log_v_cosine,log_v_equal,log_v_diversity,log_v_market,entropy,"
          "scaled_distance\n";
    os << std::setprecision(17);
    for (std::size_t t = 0; t < dates.size(); ++t) {
      os << dates[t] << ',' << log_v_cosine[t] << ',' << log_v_equal[t] << ','
         << log_v_diversity[t] << ',' << log_v_market[t] << ',' << entropy[t] << ','
         << scaled_distance[t] << '\n';
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["radius_scaling"] = radius_scaling;
    j["end_log_v"] = {{"cosine", log_v_cosine.back()},
                      {"equal", log_v_equal.back()},
                      {"diversity", log_v_diversity.back()},
                      {"market", log_v_market.back()}};
    auto min_of = [](const Vec& v) { return *std::min_element(v.begin(), v.end()); };
    j["min_log_v"] = {{"cosine", min_of(log_v_cosine)},
                      {"equal", min_of(log_v_equal)},
                      {"diversity", min_of(log_v_diversity)},
                      {"market", min_of(log_v_market)}};
    j["period_slopes"] = period_slopes;
    j["negative_weight_events"] = negative_weight_events;
    j["period_exits"] = period_exits;
    j["warnings"] = warnings;
    return j;
  }
};

// Daily-rebalanced backtest: the dates are split into successive periods of
// period_length days; at each period start the cosine center resets to that
// day's weights and the exit latch clears. Values chain across periods.
inline BacktestReport run_backtest(const CapTable& table, const BacktestConfig& config) {
  config.validate();
  require(table.n_dates() >= 2 * config.period_length,
          "run_backtest: need at least two periods of data");
  auto weights = to_weights(table);
  const std::size_t T = weights.size();

  BacktestReport rep;
  rep.dates = table.dates;
  rep.entropy = entropy_series(weights);
  rep.scaled_distance = scaled_distance_series(weights);
  rep.radius_scaling = config.radius_scaling == RadiusScaling::raw ? "raw" : "sqrt_n";
  if (T % config.period_length != 0)
    rep.warnings.push_back("trailing partial period of " +
                           std::to_string(T % config.period_length) + " day(s)");

  auto make_policy = [&](const SimplexPoint& center) {
    CosineGenerator gen = config.radius_scaling == RadiusScaling::raw
                              ? CosineGenerator::raw(center, config.c)
                              : CosineGenerator::scaled(center, config.c);
    return CosinePolicy(gen, config.exit_angle);
  };

  rep.log_v_cosine.assign(T, 0.0);
  rep.log_v_equal.assign(T, 0.0);
  rep.log_v_diversity.assign(T, 0.0);
  rep.log_v_market.assign(T, 0.0);

  CosinePolicy policy = make_policy(weights[0]);
  rep.period_slopes.push_back(capital_distribution(weights[0], config.slope_top_k).alpha_hat);
  Vec eq = equal_weighted(weights[0].size());
  double lv_cos = 0.0, lv_eq = 0.0, lv_div = 0.0, lv_mkt = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    if (t > 0 && t % config.period_length == 0) {
      if (policy.exited) ++rep.period_exits;
      policy = make_policy(weights[t]);
      rep.period_slopes.push_back(
          capital_distribution(weights[t], config.slope_top_k).alpha_hat);
    }
    const Vec& p = weights[t];
    const Vec& q = weights[t + 1];
    Vec pi_cos = policy.weights(p, &rep.negative_weight_events);
    Vec pi_div = diversity_weighted(p, config.diversity_exponent);
    double f_cos = 0.0, f_eq = 0.0, f_div = 0.0, f_mkt = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double ratio = q[i] / p[i];
      f_cos += pi_cos[i] * ratio;
      f_eq += eq[i] * ratio;
      f_div += pi_div[i] * ratio;
      f_mkt += p[i] * ratio;
    }
    lv_cos += std::log(f_cos);
    lv_eq += std::log(f_eq);
    lv_div += std::log(f_div);
    lv_mkt += std::log(f_mkt);
    rep.log_v_cosine[t + 1] = lv_cos;
    rep.log_v_equal[t + 1] = lv_eq;
    rep.log_v_diversity[t + 1] = lv_div;
    rep.log_v_market[t + 1] = lv_mkt;
  }
  if (policy.exited) ++rep.period_exits;
  return rep;
}

}  // namespace astra
