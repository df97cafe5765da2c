#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "olp/solver.hpp"
#include "test_support.hpp"

using namespace olp;

namespace {

MatrixXd mat2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

GameInstance zero_sum_game(PerceptionFamily fam, MatrixXd u1, Capability c1, Capability c2) {
  GameInstance g;
  g.family = std::move(fam);
  g.u1 = u1;
  g.v1 = -u1;
  g.c1 = c1;
  g.c2 = c2;
  g.zero_sum = true;
  return g;
}

const VectorXd half = vec2(0.5, 0.5);

}  // namespace

TEST_CASE("normalize swaps players so c1 <= c2") {
  auto g = zero_sum_game(PerceptionFamily::quantized(), mat2(0.5, -0.5, -0.3, 0.1), Capability(2),
                         Capability(1));
  auto s = normalize(g);
  CHECK(s.swapped);
  CHECK(s.c1 == Capability(1));
  CHECK(s.c2 == Capability(2));
  CHECK((s.u1 - (-g.u1.transpose())).norm() == 0.0);
  CHECK((s.v1 - g.u1.transpose()).norm() == 0.0);
  auto id = normalize(s);
  CHECK(id.swapped);  // already normalized, untouched
}

TEST_CASE("maximin_objective examples") {
  // zero uncertainty: classical worst-case payoff
  auto ginf = zero_sum_game(PerceptionFamily::quantized(), mat2(1, -1, -2, 3),
                            Capability::infinity(), Capability::infinity());
  auto [vi, gi] = maximin_objective(ginf, half);
  CHECK(vi == doctest::Approx(std::min(0.5 * (1 - 2), 0.5 * (-1 + 3))).epsilon(1e-12));

  auto gq = zero_sum_game(PerceptionFamily::quantized(), mat2(0.5, -0.5, -0.5, 0.5),
                          Capability(1), Capability(1));
  auto [vq, ggq] = maximin_objective(gq, half);
  CHECK(vq == doctest::Approx(-0.05).epsilon(1e-12));
  // tied columns: subgradient comes from the lowest-index branch
  CHECK(ggq[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ggq[1] == doctest::Approx(-0.6).epsilon(1e-12));

  CHECK_THROWS_AS(maximin_objective(gq, vec2(0.7, 0.7)), InvalidInput);
}

TEST_CASE("maximin subgradient matches finite differences") {
  std::mt19937_64 rng(71);
  const auto quant = PerceptionFamily::quantized();
  const auto lrk = PerceptionFamily::limited_rank();
  const double h = 1e-6;
  int done = 0;
  while (done < 20) {
    const int m = 2 + static_cast<int>(rng() % 2);
    const int n = 2 + static_cast<int>(rng() % 2);
    const bool use_lr = (rng() % 2) == 0;
    MatrixXd u1;
    try {
      u1 = perceive(use_lr ? lrk : quant, test::random_matrix(m, n, rng), Capability(1));
    } catch (const DegenerateTie&) {
      continue;
    }
    auto g = zero_sum_game(use_lr ? lrk : quant, u1, Capability(1), Capability(2));
    VectorXd x = test::random_simplex_point(m, rng);
    if (x.minCoeff() < 0.05) continue;  // interior points only

    // skip points where the minimizing branch is not unique
    double best = 1e300, second = 1e300;
    for (int k = 0; k < n; ++k) {
      VectorXd ek = VectorXd::Zero(n);
      ek[k] = 1.0;
      const double v = lower_bound_with_grad_x(g.family, u1, g.c1, x, ek).first;
      if (v < best) {
        second = best;
        best = v;
      } else {
        second = std::min(second, v);
      }
    }
    if (second - best < 1e-4) continue;

    auto [val, grad] = maximin_objective(g, x);
    // central differences along simplex tangent directions
    for (int i = 1; i < m; ++i) {
      VectorXd d = VectorXd::Zero(m);
      d[0] = 1.0;
      d[i] = -1.0;
      const double fp = maximin_objective(g, x + h * d).first;
      const double fm = maximin_objective(g, x - h * d).first;
      CHECK(std::abs((fp - fm) / (2 * h) - grad.dot(d)) <= 1e-4);
    }
    ++done;
  }
}

TEST_CASE("solve_maximin") {
  // matching pennies with tight bounds
  auto mp = zero_sum_game(PerceptionFamily::quantized(), mat2(1, -1, -1, 1),
                          Capability::infinity(), Capability::infinity());
  auto r = solve_maximin(mp, 1e-5, 400000, 11);
  CHECK(std::abs(r.value - 0.0) <= 1e-4);
  CHECK(std::abs(r.x_star[0] - 0.5) <= 1e-3);

  // singleton simplex
  MatrixXd row(1, 2);
  row << 0.2, 0.5;
  auto g1 = zero_sum_game(PerceptionFamily::quantized(), row, Capability(1), Capability(1));
  auto r1 = solve_maximin(g1, 1e-6, 1000, 1);
  CHECK(r1.x_star.size() == 1);
  CHECK(r1.x_star[0] == 1.0);
  CHECK(r1.value == doctest::Approx(0.2).epsilon(1e-12));

  // quantized tie instance: every x is optimal, value -0.05
  auto gq = zero_sum_game(PerceptionFamily::quantized(), mat2(0.5, -0.5, -0.5, 0.5),
                          Capability(1), Capability(1));
  auto rq = solve_maximin(gq, 1e-5, 200000, 3);
  CHECK(std::abs(rq.value - (-0.05)) <= 1e-4);
}

TEST_CASE("best responses") {
  const auto quant = PerceptionFamily::quantized();
  auto g = zero_sum_game(quant, mat2(0.5, -0.5, -0.5, 0.5), Capability(1), Capability(2));

  // zero uncertainty: pure argmin / argmax columns
  const MatrixXd v2 = mat2(1, -2, 3, 0.5);
  auto yu = best_response_upper(g, v2, Capability::infinity(), half, 1e-6);
  CHECK(yu[1] == 1.0);  // column averages: 2 vs -0.75
  auto yl = best_response_lower(g, v2, Capability::infinity(), half, 1e-6);
  CHECK(yl[0] == 1.0);

  // quantized: linear in y, compare against a dense grid
  std::mt19937_64 rng(83);
  for (int t = 0; t < 10; ++t) {
    const MatrixXd w = perceive(quant, test::random_matrix(2, 2, rng), Capability(1));
    const VectorXd x = test::random_simplex_point(2, rng);
    auto y = best_response_upper(g, w, Capability(1), x, 1e-6);
    const double got = upper_bound_with_grad_y(quant, w, Capability(1), x, y).first;
    double best = 1e300;
    for (int i = 0; i <= 2000; ++i) {
      const double t1 = i / 2000.0;
      best = std::min(best,
                      upper_bound_with_grad_y(quant, w, Capability(1), x, vec2(t1, 1 - t1)).first);
    }
    CHECK(got <= best + 1e-6);
  }

  // limited rank: curved objective vs grid oracle
  const auto lrk = PerceptionFamily::limited_rank();
  auto gl = zero_sum_game(lrk, mat2(2, 0, 0, 0), Capability(1), Capability(2));
  auto ylr = best_response_upper(gl, mat2(2, 0, 0, 0), Capability(1), half, 1e-6);
  const double got = upper_bound_with_grad_y(lrk, mat2(2, 0, 0, 0), Capability(1), half, ylr).first;
  double best = 1e300;
  for (int i = 0; i <= 2000; ++i) {
    const double t1 = i / 2000.0;
    best = std::min(
        best, upper_bound_with_grad_y(lrk, mat2(2, 0, 0, 0), Capability(1), half, vec2(t1, 1 - t1))
                  .first);
  }
  CHECK(got <= best + 1e-3);

  // tie case: all columns equal, any point attains the max
  auto yt = best_response_lower(g, mat2(1, 1, 1, 1), Capability::infinity(), half, 1e-6);
  CHECK(on_simplex(yt, 1e-9));
}

TEST_CASE("Bauer reduction: pure columns attain the min over mixed y") {
  std::mt19937_64 rng(97);
  std::gamma_distribution<double> near_vertex(0.01, 1.0);
  const auto quant = PerceptionFamily::quantized();
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 2);
    const int n = 2 + static_cast<int>(rng() % 2);
    const MatrixXd u1 = perceive(quant, test::random_matrix(m, n, rng), Capability(1));
    auto g = zero_sum_game(quant, u1, Capability(1), Capability(2));
    const VectorXd x = test::random_simplex_point(m, rng);
    const double pure_min = maximin_objective(g, x).first;
    double mixed_min = 1e300;
    for (int s = 0; s < 500; ++s) {
      VectorXd y(n);
      for (int j = 0; j < n; ++j) y[j] = std::max(near_vertex(rng), 1e-300);
      y /= y.sum();
      mixed_min = std::min(mixed_min, lower_bound_with_grad_x(quant, u1, g.c1, x, y).first);
    }
    CHECK(mixed_min >= pure_min - 1e-12);
    CHECK(mixed_min - pure_min <= 1e-6);
  }
}

TEST_CASE("degeneracy: capability at the intrinsic level reproduces the matrix-game value") {
  std::mt19937_64 rng(101);
  const auto lrk = PerceptionFamily::limited_rank();
  const auto masked = PerceptionFamily::masked();
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixXd u = test::random_matrix(2, 2, rng);
    const auto z = zero_sum_value(u, 1e-4);
    // limited rank: uncertainty vanishes at capability >= rank
    auto gl = zero_sum_game(lrk, u, Capability(numeric_rank(u)), Capability(4));
    auto rl = solve_maximin(gl, 1e-4, 400000, 200 + trial);
    CHECK(std::abs(rl.value - z.value) <= 2e-4);
    // masked: a dense matrix at capability = board size is fully revealed
    auto gm = zero_sum_game(masked, u, Capability(4), Capability(4));
    auto rm = solve_maximin(gm, 1e-4, 400000, 300 + trial);
    CHECK(std::abs(rm.value - z.value) <= 2e-4);
  }
}

TEST_CASE("check_constant_gap") {
  auto rq = check_constant_gap(PerceptionFamily::quantized(), Capability(1), 200, 5);
  CHECK(rq.verdict == "holds");
  CHECK(rq.stats.at("nonzero_max_deviation") <= 1e-12);

  auto rm = check_constant_gap(PerceptionFamily::masked(), Capability(2), 100, 6);
  CHECK(rm.verdict == "fails");
  CHECK(rm.witnesses.size() >= 2);

  auto rl = check_constant_gap(PerceptionFamily::limited_rank(), Capability(1), 100, 7);
  CHECK(rl.verdict == "fails");
}

TEST_CASE("check_narrowly_reversible") {
  std::mt19937_64 rng(103);
  const auto lrk = PerceptionFamily::limited_rank();
  int done = 0;
  while (done < 20) {
    MatrixXd v;
    try {
      v = perceive(lrk, test::random_matrix(3, 3, rng), Capability(1));
    } catch (const DegenerateTie&) {
      continue;
    }
    auto g = zero_sum_game(lrk, v, Capability(1), Capability(2));
    auto r = check_narrowly_reversible(g, 5, 300 + done, 1e-6);
    CHECK(r.verdict == "holds");
    ++done;
  }

  // masked with a fillable column
  const auto masked = PerceptionFamily::masked();
  auto gm = zero_sum_game(masked, mat2(3, 0, 2, 0), Capability(2), Capability(4));
  auto rm = check_narrowly_reversible(gm, 10, 9, 1e-6);
  CHECK(rm.verdict == "holds");
  CHECK(rm.stats.at("not_applicable") == 0);

  // budget too small for column 1: reported NotApplicable, rest still holds
  auto gm2 = zero_sum_game(masked, mat2(3, 0, 2, 0), Capability(2), Capability(3));
  auto rm2 = check_narrowly_reversible(gm2, 3, 9, 1e-6);
  CHECK(rm2.verdict == "holds");
  CHECK(rm2.stats.at("not_applicable") > 0);

  // quantized: the one-step gap between the two levels is exactly 10^-c2
  const auto quant = PerceptionFamily::quantized();
  auto gq = zero_sum_game(quant, mat2(0.5, -0.5, -0.5, 0.5), Capability(1), Capability(2));
  auto rq = check_narrowly_reversible(gq, 5, 13, 0.011);
  CHECK(rq.verdict == "holds");
  CHECK(rq.stats.at("max_gap") == doctest::Approx(0.01).epsilon(1e-9));

  // degenerate singleton narrow set
  auto gd = zero_sum_game(quant, mat2(0.5, -0.5, -0.5, 0.5), Capability(1), Capability(1));
  auto rd = check_narrowly_reversible(gd, 3, 15, 1e-9);
  CHECK(rd.verdict == "holds");
  REQUIRE(rd.witnesses.size() == 1);
  CHECK(rd.witnesses[0].description.find("degenerate") != std::string::npos);
}

TEST_CASE("stackelberg_gap_probe") {
  const auto quant = PerceptionFamily::quantized();
  auto gq = zero_sum_game(quant, mat2(0.5, -0.5, -0.5, 0.5), Capability(1), Capability(2));
  auto rq = solve_maximin(gq, 1e-5, 200000, 21);
  auto pq = stackelberg_gap_probe(gq, rq.x_star, 50, 23, 1e-4);
  CHECK(pq.h1 <= pq.g_lower_est + 1e-4);
  CHECK(pq.g_lower_est - pq.h1 <= 1e-4);
  CHECK(pq.g_lower_est <= pq.g_upper + 1e-12);

  const auto lrk = PerceptionFamily::limited_rank();
  std::mt19937_64 rng(107);
  int done = 0;
  while (done < 5) {
    MatrixXd v;
    try {
      v = perceive(lrk, test::random_matrix(3, 3, rng), Capability(1));
    } catch (const DegenerateTie&) {
      continue;
    }
    auto g = zero_sum_game(lrk, v, Capability(1), Capability(2));
    auto r = solve_maximin(g, 1e-5, 200000, 500 + done);
    auto p = stackelberg_gap_probe(g, r.x_star, 50, 600 + done, 1e-4);
    CHECK(p.h1 <= p.g_lower_est + 1e-4);
    CHECK(p.g_lower_est - p.h1 <= 1e-4);
    ++done;
  }

  // c1 = c2: single best-response call
  auto gd = zero_sum_game(quant, mat2(0.5, -0.5, -0.5, 0.5), Capability(1), Capability(1));
  auto pd = stackelberg_gap_probe(gd, half, 10, 29, 1e-6);
  CHECK(pd.g_lower_est == pd.g_upper);
  CHECK(pd.h1 <= pd.g_lower_est + 1e-9);
}
