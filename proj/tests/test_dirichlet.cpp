#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "astra/dirichlet.hpp"

using namespace astra;

TEST_CASE("dirichlet_moments") {
  SECTION("gamma=(2,2)") {
    auto m = dirichlet_moments(DirichletParams({2.0, 2.0}));
    CHECK_THAT(m.mean[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK_THAT(m.variance[0], Catch::Matchers::WithinAbs(0.05, 1e-15));
  }
  SECTION("gamma=(1,1) is uniform on the segment") {
    auto m = dirichlet_moments(DirichletParams({1.0, 1.0}));
    CHECK_THAT(m.variance[0], Catch::Matchers::WithinAbs(1.0 / 12.0, 1e-15));
  }
  SECTION("means sum to one") {
    auto m = dirichlet_moments(DirichletParams::pareto(0.75, 50));
    CHECK_THAT(kahan_sum(m.mean), Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  CHECK_THROWS_AS(DirichletParams({1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("sampling matches moments") {
  SECTION("symmetric uniform case") {
    auto batch = dirichlet_sample(DirichletParams({1.0, 1.0}), 100000, 42);
    double mean = 0.0, var = 0.0;
    for (const auto& x : batch) mean += x[0];
    mean /= 1e5;
    for (const auto& x : batch) var += (x[0] - mean) * (x[0] - mean);
    var /= 1e5 - 1;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.5, 4.0 * std::sqrt(1.0 / 12.0 / 1e5)));
    CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0 / 12.0, 0.005));
  }
  SECTION("per-coordinate check across dimensions") {
    const std::size_t count = 20000;
    for (std::size_t n : {2, 10, 100}) {
      auto params = DirichletParams::pareto(0.75, n);
      auto mom = dirichlet_moments(params);
      auto batch = dirichlet_sample(params, count, 7);
      for (std::size_t i : {std::size_t{0}, n / 2, n - 1}) {
        double mean = 0.0;
        for (const auto& x : batch) mean += x[i];
        mean /= static_cast<double>(count);
        double se = std::sqrt(mom.variance[i] / static_cast<double>(count));
        CHECK(std::abs(mean - mom.mean[i]) < 5.0 * se);
      }
    }
  }
  SECTION("every sample is a simplex point") {
    auto batch = dirichlet_sample(DirichletParams::pareto(1.0, 200), 500, 3);
    for (const auto& x : batch) CHECK(is_simplex_point(x, 1e-12));
  }
  SECTION("tiny shapes stay finite and positive") {
    // alpha=1 at large n drives shapes near 1e-3 * n / H_n; push harder by hand
    DirichletParams params({1e-4, 1e-3, 2.0});
    auto batch = dirichlet_sample(params, 2000, 11);
    for (const auto& x : batch)
      for (double v : x) CHECK(v > 0.0);
  }
}

TEST_CASE("sampling determinism") {
  auto params = DirichletParams::pareto(0.75, 50);
  auto a = dirichlet_sample(params, 300, 99, 1);
  auto b = dirichlet_sample(params, 300, 99, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) CHECK(a[i][j] == b[i][j]);
}

TEST_CASE("estimate_mean_norm bracket") {
  for (double alpha : {0.0, 0.75, 1.0}) {
    auto est = estimate_mean_norm(alpha, 1000, 10000, 5);
    double rn = alpha == 0.0 ? 1.0 / 1000.0 : stats(hyperharmonic_weights(alpha, 1000)).r_n;
    double hi = std::sqrt(1.0 - rn);
    double lo = std::sqrt(2.0 / std::numbers::pi * (1.0 - rn)) * 0.95;
    CAPTURE(alpha, est.estimate, lo, hi);
    CHECK(est.estimate > lo);
    CHECK(est.estimate < hi + 3.0 * (est.ci_hi - est.estimate) / 1.96);
    CHECK(est.estimate < 1.0);
  }
}

TEST_CASE("tail_report") {
  auto rep = tail_report(0.75, 2000, {0.5, 1.0}, 10000, 21);
  SECTION("probabilities are valid and small at r=0.5") {
    for (const auto& t : rep.tails) {
      CHECK(t.p_upper >= 0.0);
      CHECK(t.p_upper <= 1.0);
      CHECK(t.p_lower >= 0.0);
      CHECK(t.p_lower <= 1.0);
    }
    CHECK(rep.tails[0].p_upper <= 0.05);
  }
  SECTION("tails vanish for large r") {
    auto far = tail_report(0.75, 500, {5.0}, 10000, 22);
    CHECK(far.tails[0].p_upper == 0.0);
  }
  SECTION("json schema keys") {
    auto j = rep.to_json();
    for (const char* k : {"alpha", "n", "count", "mean_norm", "ci", "c3_fit", "tails"})
      CHECK(j.contains(k));
    for (const char* k : {"r", "p_upper", "p_lower", "se", "critical_bound"})
      CHECK(j["tails"][0].contains(k));
  }
}

TEST_CASE("gamma_sum_tail") {
  SECTION("bound respected at u=2") {
    auto t = gamma_sum_tail(1000, 2.0, 20000, 17);
    CHECK(t.bound == Catch::Approx(2.0 * std::exp(-1.0)));
    CHECK(t.empirical <= t.bound + 3.0 * t.se);
  }
  SECTION("u=3 is close to the CLT reference") {
    auto t = gamma_sum_tail(1000, 3.0, 50000, 18);
    CHECK(t.empirical < 0.01);
    CHECK(t.empirical <= t.bound + 3.0 * t.se);
  }
  SECTION("precondition n > u^2") {
    CHECK_THROWS_AS(gamma_sum_tail(4, 3.0, 1000, 1), std::invalid_argument);
  }
}
