#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "astra/dirichlet.hpp"
#include "astra/experiments.hpp"
#include "astra/market_data.hpp"
#include "astra/sequences.hpp"
#include "astra/wfsim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Config precedence: CLI flags > JSON config file > defaults. The config
// file is read before CLI11 parses, overwriting the bound defaults, so flags
// given on the command line win.
json load_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw std::invalid_argument(std::string("cannot open config ") + argv[i + 1]);
      json j;
      in >> j;
      return j;
    }
  }
  return json::object();
}

template <class T>
void from_config(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void ensure_writable(const fs::path& p, bool force) {
  if (fs::exists(p) && !force)
    throw std::invalid_argument(p.string() + " exists; pass --force to overwrite");
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::uint64_t resolve_seed(std::int64_t seed_flag) {
  if (seed_flag >= 0) return static_cast<std::uint64_t>(seed_flag);
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  std::cout << "seed " << s << " (drawn; pass --seed " << s << " to reproduce)\n";
  return s;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  out << j.dump(2) << '\n';
}

int cmd_simulate(std::size_t n, double alpha, double dt, double horizon, double rate,
                 std::uint64_t seed, std::size_t top_k, const std::string& out_dir,
                 bool force) {
  astra::WFConfig config{n, astra::pareto_target(alpha, n),
                         dt > 0.0 ? dt : astra::WFConfig::default_dt(n), horizon, rate, seed};
  config.validate();
  fs::path dir(out_dir);
  fs::path csv_path = dir / "trajectory.csv";
  fs::path sum_path = dir / "simulate_summary.json";
  ensure_writable(csv_path, force);
  ensure_writable(sum_path, force);

  astra::Trajectory traj = astra::simulate(config);
  std::size_t k = top_k == 0 ? n : std::min(top_k, n);
  std::ofstream csv(csv_path);
  csv << "t";
  for (std::size_t i = 0; i < k; ++i) csv << ",mu_" << (i + 1);
  csv << ",qv_sum\n" << std::setprecision(17);
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    csv << traj.times[s];
    for (std::size_t i = 0; i < k; ++i) csv << ',' << traj.points[s][i];
    csv << ',' << traj.qv_sum[s] << '\n';
  }

  auto summary_stats = astra::radius_summary(traj, config.nu);
  double rn = astra::stats(astra::hyperharmonic_weights(alpha, n)).r_n;
  json j;
  j["n"] = n;
  j["alpha"] = alpha;
  j["dt"] = config.dt;
  j["horizon"] = horizon;
  j["time_change_rate"] = rate;
  j["seed"] = seed;
  j["initial_radius"] = summary_stats.initial_radius;
  j["max_radius"] = summary_stats.max_radius;
  j["qv_sum_end"] = traj.qv_sum.back();
  j["qv_over_horizon"] = traj.qv_sum.back() / (rate * horizon);
  j["one_minus_r_n"] = 1.0 - rn;
  write_json(sum_path, j);
  std::cout << "wrote " << csv_path.string() << " and " << sum_path.string() << "\n";
  return kExitOk;
}

int cmd_astra(const astra::AstraSweepConfig& config, const std::string& out_dir, bool force) {
  fs::path path = fs::path(out_dir) / "astra_report.json";
  ensure_writable(path, force);
  astra::AstraReport report = astra::astra_sweep(config);
  write_json(path, report.to_json());
  long breaches = 0;
  for (const auto& c : report.cells) breaches += c.floor_violations + c.drift_cert_failures;
  std::cout << "wrote " << path.string() << "\n";
  if (breaches > 0) {
    std::cerr << breaches << " invariant breach(es) recorded in the report\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_concentration(double alpha, const std::vector<std::size_t>& n_grid,
                      const std::vector<double>& r_grid, std::size_t count,
                      std::size_t tail_n, const std::vector<double>& u_grid,
                      std::uint64_t seed, unsigned workers, const std::string& out_dir,
                      bool force) {
  fs::path path = fs::path(out_dir) / "concentration_report.json";
  ensure_writable(path, force);
  auto sweep = astra::concentration_sweep(alpha, n_grid, r_grid, count, seed, workers);
  json j = sweep.to_json();
  j["gamma_sum_tail"] = json::array();
  bool bound_ok = true;
  for (double u : u_grid) {
    auto t = astra::gamma_sum_tail(tail_n, u, count, astra::mix64(seed + 1), alpha, workers);
    bool ok = t.empirical <= t.bound + 3.0 * t.se;
    bound_ok = bound_ok && ok;
    j["gamma_sum_tail"].push_back({{"u", u},
                                   {"n", tail_n},
                                   {"empirical", t.empirical},
                                   {"bound", t.bound},
                                   {"se", t.se},
                                   {"ok", ok}});
  }
  write_json(path, j);
  std::cout << "wrote " << path.string() << "\n";
  if (!bound_ok) {
    std::cerr << "gamma-sum tail bound violated\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_backtest(const std::string& input, const astra::BacktestConfig& config,
                 bool forward_fill, const std::string& out_dir, bool force) {
  fs::path csv_path = fs::path(out_dir) / "backtest.csv";
  fs::path sum_path = fs::path(out_dir) / "backtest_summary.json";
  ensure_writable(csv_path, force);
  ensure_writable(sum_path, force);
  astra::CapTable table = [&] {
    try {
      return astra::load_caps(input, forward_fill);
    } catch (const std::runtime_error& e) {
      // malformed input is a config problem, not a runtime breach
      throw std::invalid_argument(e.what());
    }
  }();
  astra::BacktestReport report = astra::run_backtest(table, config);
  std::ofstream csv(csv_path);
  report.write_csv(csv);
  json j = report.to_json();
  j["ingest_log"] = table.ingest_log;
  write_json(sum_path, j);
  std::cout << "wrote " << csv_path.string() << " and " << sum_path.string() << "\n";
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return kExitOk;
}

int cmd_diagnostics(double alpha, const std::vector<std::size_t>& n_grid,
                    const std::string& out_dir, bool force) {
  fs::path path = fs::path(out_dir) / "sequence_diagnostics.json";
  ensure_writable(path, force);
  astra::WeightSequence seq = astra::hyperharmonic_weights(alpha, n_grid.back());
  astra::AssumptionDiagnostics diag = astra::check_assumptions(seq, n_grid);
  json j;
  j["alpha"] = alpha;
  j["rho_hat"] = diag.rho_hat;
  j["r_n_decreasing"] = diag.r_n_decreasing;
  j["n_r_n_growing"] = diag.n_r_n_growing;
  j["rho_consistent"] = diag.rho_consistent;
  j["zygmund_ok"] = diag.zygmund_ok;
  j["entries"] = json::array();
  for (const auto& e : diag.entries) {
    j["entries"].push_back({{"n", e.n},
                            {"h_n", e.h_n},
                            {"r_n", e.r_n},
                            {"n_r_n_over_log_n", e.n_r_n_over_log_n},
                            {"rho_hat", e.rho_hat},
                            {"zygmund_ok", e.zygmund_ok}});
  }
  write_json(path, j);
  std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cosine-portfolio laboratory: Wright-Fisher simulation, ASTRA sweeps, "
               "Dirichlet concentration checks, and market-cap backtests"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (CLI flags take precedence)");

  json cfg;
  try {
    cfg = load_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  // shared
  std::int64_t seed_flag = -1;
  unsigned threads = 0;
  std::string out_dir = "out";
  bool force = false;
  from_config(cfg, "seed", seed_flag);
  from_config(cfg, "threads", threads);
  from_config(cfg, "out_dir", out_dir);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_flag, "master seed (omit to draw one and print it)");
    sub->add_option("--threads", threads, "worker threads (0 = auto)");
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_flag("--force", force, "overwrite existing outputs");
  };

  // simulate
  std::size_t sim_n = 100, sim_topk = 0;
  double sim_alpha = 0.75, sim_dt = 0.0, sim_horizon = 0.1, sim_rate = 1.0;
  from_config(cfg, "n", sim_n);
  from_config(cfg, "alpha", sim_alpha);
  from_config(cfg, "dt", sim_dt);
  from_config(cfg, "horizon", sim_horizon);
  from_config(cfg, "time_change_rate", sim_rate);
  auto* sim = app.add_subcommand("simulate", "one Wright-Fisher trajectory to CSV");
  sim->add_option("--n", sim_n, "dimension")->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  sim->add_option("--alpha", sim_alpha, "Pareto exponent of the target nu")
      ->check(CLI::Range(0.0, 1.0));
  sim->add_option("--dt", sim_dt, "time step (0 = default rule)");
  sim->add_option("--horizon", sim_horizon, "total time");
  sim->add_option("--rate", sim_rate, "time-change rate in (0,1]");
  sim->add_option("--top-k", sim_topk, "emit only the first k coordinates (0 = all)");
  add_common(sim);

  // astra
  astra::AstraSweepConfig asw;
  from_config(cfg, "alpha", asw.alpha);
  from_config(cfg, "n_grid", asw.n_grid);
  from_config(cfg, "paths_per_n", asw.paths_per_n);
  from_config(cfg, "epsilon", asw.epsilon);
  from_config(cfg, "b1", asw.b1);
  from_config(cfg, "b2", asw.b2);
  from_config(cfg, "time_change_rate", asw.time_change_rate);
  auto* ast = app.add_subcommand("astra", "ASTRA sweep over an n grid");
  ast->add_option("--alpha", asw.alpha)->check(CLI::Range(0.0, 1.0));
  ast->add_option("--n-grid", asw.n_grid, "increasing n grid");
  ast->add_option("--paths", asw.paths_per_n, "paths per n");
  ast->add_option("--epsilon", asw.epsilon, "floor parameter");
  ast->add_option("--b1", asw.b1, "conditioning radius");
  ast->add_option("--b2", asw.b2, "exit radius");
  ast->add_option("--rate", asw.time_change_rate, "time-change rate");
  add_common(ast);

  // concentration
  double con_alpha = 1.0;
  std::vector<std::size_t> con_grid = {500, 2000};
  std::vector<double> con_r = {0.3, 0.5, 1.0};
  std::vector<double> con_u = {1.0, 2.0, 3.0};
  std::size_t con_count = 20000, con_tail_n = 1000;
  from_config(cfg, "alpha", con_alpha);
  from_config(cfg, "n_grid", con_grid);
  from_config(cfg, "r_grid", con_r);
  from_config(cfg, "u_grid", con_u);
  from_config(cfg, "count", con_count);
  from_config(cfg, "tail_n", con_tail_n);
  auto* con = app.add_subcommand("concentration", "Dirichlet tail and gamma-sum checks");
  con->add_option("--alpha", con_alpha)->check(CLI::Range(0.0, 1.0));
  con->add_option("--n-grid", con_grid);
  con->add_option("--r-grid", con_r);
  con->add_option("--u-grid", con_u);
  con->add_option("--count", con_count, "samples per cell")
      ->check(CLI::Range(std::size_t{10000}, std::size_t{100000000}));
  con->add_option("--tail-n", con_tail_n, "n for the gamma-sum tail");
  add_common(con);

  // backtest
  std::string bt_input;
  astra::BacktestConfig btc;
  bool bt_fill = false;
  std::string bt_scaling = "raw";
  from_config(cfg, "input", bt_input);
  from_config(cfg, "period_length", btc.period_length);
  from_config(cfg, "c", btc.c);
  from_config(cfg, "diversity_exponent", btc.diversity_exponent);
  from_config(cfg, "exit_angle", btc.exit_angle);
  from_config(cfg, "radius_scaling", bt_scaling);
  from_config(cfg, "slope_top_k", btc.slope_top_k);
  from_config(cfg, "forward_fill", bt_fill);
  auto* bt = app.add_subcommand("backtest", "periodized cosine backtest on a cap table");
  bt->add_option("--input", bt_input, "cap-table CSV")->required(!cfg.contains("input"));
  bt->add_option("--period-length", btc.period_length, "days per period");
  bt->add_option("--c", btc.c, "cosine scale");
  bt->add_option("--diversity-exponent", btc.diversity_exponent);
  bt->add_option("--exit-angle", btc.exit_angle, "exit threshold in the angle coordinate");
  bt->add_option("--radius-scaling", bt_scaling, "raw | sqrt_n")
      ->check(CLI::IsMember({"raw", "sqrt_n"}));
  bt->add_option("--slope-top-k", btc.slope_top_k, "ranks used in the slope fit (0 = all)");
  bt->add_flag("--forward-fill", bt_fill, "fill gaps of <= 2 days, drop longer");
  add_common(bt);

  // diagnostics
  double dia_alpha = 0.75;
  std::vector<std::size_t> dia_grid = {1000, 10000, 100000};
  from_config(cfg, "alpha", dia_alpha);
  from_config(cfg, "n_grid", dia_grid);
  auto* dia = app.add_subcommand("diagnostics", "weight-sequence assumption diagnostics");
  dia->add_option("--alpha", dia_alpha)->check(CLI::Range(0.0, 1.0));
  dia->add_option("--n-grid", dia_grid);
  add_common(dia);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    std::uint64_t seed = resolve_seed(seed_flag);
    if (sim->parsed())
      return cmd_simulate(sim_n, sim_alpha, sim_dt, sim_horizon, sim_rate, seed, sim_topk,
                          out_dir, force);
    if (ast->parsed()) {
      asw.seed = seed;
      asw.workers = threads;
      return cmd_astra(asw, out_dir, force);
    }
    if (con->parsed())
      return cmd_concentration(con_alpha, con_grid, con_r, con_count, con_tail_n, con_u, seed,
                               threads, out_dir, force);
    if (bt->parsed()) {
      btc.radius_scaling =
          bt_scaling == "raw" ? astra::RadiusScaling::raw : astra::RadiusScaling::sqrt_n;
      return cmd_backtest(bt_input, btc, bt_fill, out_dir, force);
    }
    if (dia->parsed()) return cmd_diagnostics(dia_alpha, dia_grid, out_dir, force);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
