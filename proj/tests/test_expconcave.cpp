#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "astra/dirichlet.hpp"
#include "astra/expconcave.hpp"
#include "astra/sequences.hpp"

using namespace astra;

namespace {

// random interior point pulled toward the center so it stays deep inside the
// cosine domain
Vec interior_point(const Vec& center, double pull, std::mt19937_64& rng) {
  auto p = dirichlet_sample_one(DirichletParams(Vec(center.size(), 2.0)), rng);
  Vec x(center.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = center[i] + pull * (p[i] - center[i]);
  return x;
}

}  // namespace

TEST_CASE("eval basics") {
  Vec center = pareto_target(0.0, 4);
  auto gen = CosineGenerator::scaled(center, 1.0);
  SECTION("center: value 0, gradient 0") {
    auto e = eval(gen, center);
    CHECK(e.value == 0.0);
    for (double g : e.gradient) CHECK(g == 0.0);
    CHECK(e.in_domain);
  }
  SECTION("angle 1 gives log cos(1)") {
    // n=4, c=1: angle = 2 * ||x - x0||; radius 0.5 -> angle 1
    Vec x = center;
    x[0] += 0.25; x[1] += 0.25; x[2] -= 0.25; x[3] -= 0.25;
    auto e = eval(gen, x);
    CHECK_THAT(e.radius, Catch::Matchers::WithinAbs(0.5, 1e-14));
    CHECK_THAT(e.value, Catch::Matchers::WithinAbs(std::log(std::cos(1.0)), 1e-12));
    CHECK_THAT(e.value, Catch::Matchers::WithinAbs(-0.6156, 5e-4));
  }
  SECTION("outside the domain") {
    Vec x = center;
    x[0] += 0.7; x[1] -= 0.7 / 3; x[2] -= 0.7 / 3; x[3] -= 0.7 / 3;
    auto e = eval(gen, x);  // angle = 2 * 0.808 > pi/2
    CHECK_FALSE(e.in_domain);
    CHECK(e.value == -std::numeric_limits<double>::infinity());
  }
  SECTION("value monotone to -inf near the boundary") {
    double prev = 0.0;
    for (double r : {0.5, 0.7, 0.78}) {
      Vec x = center;
      x[0] += r / std::sqrt(2.0); x[1] -= r / std::sqrt(2.0);
      auto e = eval(gen, x);
      CHECK(e.value < prev);
      prev = e.value;
    }
  }
}

TEST_CASE("gradient matches finite differences") {
  for (std::size_t n : {3, 10, 100}) {
    Vec center = pareto_target(0.5, n);
    auto gen = CosineGenerator::scaled(center, 0.8);
    auto rng = derived_rng(100 + n, 0);
    const double h = 1e-5;
    for (int trial = 0; trial < 5; ++trial) {
      Vec x = interior_point(center, 0.5, rng);
      auto e = eval(gen, x);
      REQUIRE(e.in_domain);
      for (std::size_t i = 0; i < n; ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double fd = (eval(gen, xp).value - eval(gen, xm).value) / (2.0 * h);
        CHECK_THAT(e.gradient[i], Catch::Matchers::WithinAbs(fd, 1e-6));
      }
    }
  }
}

TEST_CASE("radial symmetry") {
  Vec center = pareto_target(0.0, 4);
  auto gen = CosineGenerator::scaled(center, 1.0);
  // two different offsets with the same norm
  Vec x1 = center, x2 = center;
  x1[0] += 0.1; x1[1] -= 0.1;
  x2[2] += 0.1; x2[3] -= 0.1;
  CHECK_THAT(eval(gen, x1).value, Catch::Matchers::WithinAbs(eval(gen, x2).value, 1e-14));
}

TEST_CASE("midpoint concavity of exp(phi)") {
  Vec center = pareto_target(0.5, 10);
  auto gen = CosineGenerator::scaled(center, 1.0);
  auto rng = derived_rng(55, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x = interior_point(center, 0.4, rng);
    Vec y = interior_point(center, 0.4, rng);
    for (double t : {0.25, 0.5, 0.75}) {
      Vec m(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) m[i] = t * x[i] + (1.0 - t) * y[i];
      double lhs = std::exp(eval(gen, m).value);
      double rhs = t * std::exp(eval(gen, x).value) + (1.0 - t) * std::exp(eval(gen, y).value);
      CHECK(lhs >= rhs - 1e-10);
    }
  }
}

TEST_CASE("kn_certificate") {
  SECTION("bound value is -c^2 n") {
    Vec center = pareto_target(0.0, 4);
    auto gen = CosineGenerator::scaled(center, 0.5);
    auto [eig, bound] = kn_certificate(gen, center, 1e-4);
    CHECK(bound == -1.0);
    CHECK(eig <= bound + 1e-2);
  }
  SECTION("random interior points at n=3 and n=10") {
    for (std::size_t n : {3, 10}) {
      Vec center = pareto_target(0.5, n);
      auto gen = CosineGenerator::scaled(center, 1.0);
      auto rng = derived_rng(200 + n, 0);
      for (int trial = 0; trial < 20; ++trial) {
        Vec x = interior_point(center, 0.3, rng);
        auto [eig, bound] = kn_certificate(gen, x, 1e-4);
        CHECK(eig <= bound + 1e-2);
      }
    }
  }
  SECTION("boundary margin precondition") {
    Vec center = pareto_target(0.0, 4);
    auto gen = CosineGenerator::scaled(center, 1.0);
    Vec x = center;
    x[0] += 0.65; x[1] -= 0.65 / 3; x[2] -= 0.65 / 3; x[3] -= 0.65 / 3;  // angle ~1.5
    CHECK_THROWS_AS(kn_certificate(gen, x, 1e-2), std::invalid_argument);
  }
}

TEST_CASE("maximality_check") {
  Vec center = pareto_target(0.5, 5);
  auto gen = CosineGenerator::scaled(center, 1.0);
  auto rng = derived_rng(77, 0);
  CHECK(maximality_check(gen, center));
  for (int trial = 0; trial < 10; ++trial)
    CHECK(maximality_check(gen, interior_point(center, 0.5, rng)));
  SECTION("smaller generator sits strictly below the c=1 envelope") {
    auto small = CosineGenerator::scaled(center, 0.5);
    for (int trial = 0; trial < 10; ++trial) {
      Vec x = interior_point(center, 0.5, rng);
      auto es = eval(small, x);
      auto e1 = eval(gen, x);
      if (es.radius > 1e-6) CHECK(es.value > e1.value);  // smaller c, shallower well
    }
  }
}
