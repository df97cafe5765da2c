#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "olp/equilibrium.hpp"
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

GameInstance table_zero_sum(std::shared_ptr<TableFamily> t, const std::string& pid, Capability c1,
                            Capability c2) {
  GameInstance g;
  g.family = PerceptionFamily::make_table(std::move(t));
  g.perceived_id = pid;
  g.u1 = g.family.table->entry(pid).A;
  g.v1 = -g.u1;
  g.c1 = c1;
  g.c2 = c2;
  g.zero_sum = true;
  return g;
}

std::shared_ptr<TableFamily> single_entry_table(const std::string& id, const MatrixXd& A) {
  auto t = std::make_shared<TableFamily>();
  t->level_cap = 1;
  t->universe.push_back({id, A, std::nullopt});
  t->level_map[{id, 1}] = id;
  return t;
}

GameInstance quantized_zero_sum(const MatrixXd& u1, Capability c1, Capability c2) {
  GameInstance g;
  g.family = PerceptionFamily::quantized();
  g.u1 = u1;
  g.v1 = -u1;
  g.c1 = c1;
  g.c2 = c2;
  g.zero_sum = true;
  return g;
}

}  // namespace

TEST_CASE("narrow_elements") {
  MatrixXd row(1, 2);
  row << 0.5, -0.5;
  auto gq = quantized_zero_sum(row, Capability(1), Capability(2));
  CHECK(narrow_elements(gq).size() == 100);  // 10 refinements per nonzero entry
  CHECK_THROWS_AS(narrow_elements(gq, 50), TooLarge);

  auto gt = table_zero_sum(single_entry_table("mp", mat2(1, -1, -1, 1)), "mp", Capability(1),
                           Capability(1));
  auto et = narrow_elements(gt);
  REQUIRE(et.size() == 1);
  CHECK(*et[0].id == "mp");
}

TEST_CASE("verify_nash on a singleton narrow set") {
  auto g = table_zero_sum(single_entry_table("mp", mat2(1, -1, -1, 1)), "mp", Capability(1),
                          Capability(1));
  EnumeratedResponse ry;
  ry.elements = narrow_elements(g);
  ry.responses = {vec2(0.5, 0.5)};
  auto rep = verify_nash(g, vec2(0.5, 0.5), ResponseFunction::from(ry), 1e-9, 100, 1);
  CHECK(rep.holds);
  CHECK(rep.max_deviation_p1 <= 1e-9);
  CHECK(rep.max_deviation_p2 <= 1e-9);

  // pinning a pure response lets the first player deviate profitably
  ry.responses = {vec2(1.0, 0.0)};
  auto bad = verify_nash(g, vec2(0.5, 0.5), ResponseFunction::from(ry), 1e-4, 100, 1);
  CHECK_FALSE(bad.holds);
  CHECK(bad.max_deviation_p1 > 0.5);

  // a suboptimal response is caught with the element as witness
  auto g2 = table_zero_sum(single_entry_table("g", mat2(1, 2, 0, -1)), "g", Capability(1),
                           Capability(1));
  EnumeratedResponse ry2;
  ry2.elements = narrow_elements(g2);
  ry2.responses = {vec2(1.0, 0.0)};
  auto ok = verify_nash(g2, vec2(1, 0), ResponseFunction::from(ry2), 1e-9, 100, 1);
  CHECK(ok.holds);
  ry2.responses = {vec2(0.0, 1.0)};
  auto bad2 = verify_nash(g2, vec2(1, 0), ResponseFunction::from(ry2), 1e-4, 100, 1);
  CHECK_FALSE(bad2.holds);
  CHECK(bad2.max_deviation_p2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(bad2.witness.find("'g'") != std::string::npos);

  // response domain must match the narrow set
  EnumeratedResponse empty;
  CHECK_THROWS_AS(verify_nash(g, vec2(0.5, 0.5), ResponseFunction::from(empty), 1e-4, 100, 1),
                  InvalidResponseFunction);
}

TEST_CASE("search_nash_table") {
  // classical equilibrium at equal capabilities
  auto g = table_zero_sum(single_entry_table("mp", mat2(1, -1, -1, 1)), "mp", Capability(1),
                          Capability(1));
  auto r = search_nash_table(g, 64, 1e-6);
  REQUIRE(r.has_value());
  CHECK(std::abs(r->x_star[0] - 0.5) <= 1e-12);
  CHECK(std::abs(r->value - 0.0) <= 1e-12);
  CHECK(verify_nash(g, r->x_star, ResponseFunction::from(r->Ry), 1e-6, 100, 1).holds);

  // several perceptions sharing one matrix: the standard Nash of that matrix
  {
    auto t = std::make_shared<TableFamily>();
    t->level_cap = 2;
    const MatrixXd A = mat2(1, -1, -1, 1);
    t->universe.push_back({"v", A, std::nullopt});
    t->universe.push_back({"a", A, std::nullopt});
    t->universe.push_back({"b", A, std::nullopt});
    for (const auto& id : {"v", "a", "b"}) {
      t->level_map[{id, 1}] = "v";
      t->level_map[{id, 2}] = id;
    }
    auto g3 = table_zero_sum(t, "v", Capability(1), Capability(2));
    auto r3 = search_nash_table(g3, 64, 1e-6);
    REQUIRE(r3.has_value());
    CHECK(r3->Ry.elements.size() == 3);
    CHECK(std::abs(r3->value - 0.0) <= 1e-12);
    CHECK(verify_nash(g3, r3->x_star, ResponseFunction::from(r3->Ry), 1e-6, 100, 1).holds);
  }

  // maximin-attainable quantized instance: value agrees with the maximin solver
  MatrixXd row(1, 2);
  row << 0.5, -0.5;
  auto gq = quantized_zero_sum(row, Capability(1), Capability(2));
  auto rq = search_nash_table(gq, 64, 1e-6);
  REQUIRE(rq.has_value());
  CHECK(rq->Ry.elements.size() == 100);
  auto mm = solve_maximin(gq, 1e-6, 1000, 1);
  CHECK(std::abs(rq->value - mm.value) <= 1e-6 + 1e-9);
}

TEST_CASE("compact representation") {
  // singleton narrow set: one anchor, exact
  auto g = table_zero_sum(single_entry_table("mp", mat2(1, -1, -1, 1)), "mp", Capability(1),
                          Capability(1));
  auto r = search_nash_table(g, 64, 1e-6);
  REQUIRE(r.has_value());
  auto repr = build_compact_repr(g, r->x_star, r->Ry, 1e-6, 0.0);
  CHECK(repr.anchors.size() == 1);
  CHECK(repr.f_star == doctest::Approx(r->value).epsilon(1e-12));
  CHECK((eval_compact_repr(g, repr, r->Ry.elements[0]) - r->Ry.responses[0]).norm() == 0.0);

  // quantized 1x2: at most |S1| + 1 = 2 anchors; oracle responses verify
  MatrixXd row(1, 2);
  row << 0.5, -0.5;
  auto gq = quantized_zero_sum(row, Capability(1), Capability(2));
  auto rq = search_nash_table(gq, 64, 1e-6);
  REQUIRE(rq.has_value());
  auto reprq = build_compact_repr(gq, rq->x_star, rq->Ry, 1e-6, 1e-6);
  CHECK(reprq.anchors.size() <= 2);
  auto rep = verify_nash(gq, rq->x_star, ResponseFunction::from(reprq), 2e-6, 200, 3);
  CHECK(rep.holds);

  // membership guard
  NarrowElem outside;
  outside.perception = MatrixXd::Zero(1, 2);
  CHECK_THROWS_AS(eval_compact_repr(gq, reprq, outside), InvalidInput);

  // unverified pair rejected
  EnumeratedResponse bad = rq->Ry;
  bad.responses[0] = vec2(bad.responses[0][1], bad.responses[0][0]);
  for (auto& y : bad.responses) y = vec2(1, 0);
  CHECK_THROWS_AS(build_compact_repr(gq, rq->x_star, bad, 1e-9, 0.0), InvalidInput);
}

TEST_CASE("reduction round trip") {
  // general-sum instance with a strict pure Nash at (row 0, column 0)
  auto t = std::make_shared<TableFamily>();
  t->level_cap = 1;
  t->universe.push_back({"t", mat2(3, 1, 2, 0), mat2(2, 0, 1, 1)});
  t->level_map[{"t", 1}] = "t";
  GameInstance g;
  g.family = PerceptionFamily::make_table(t);
  g.perceived_id = "t";
  g.u1 = mat2(3, 1, 2, 0);
  g.v1 = mat2(2, 0, 1, 1);
  g.c1 = Capability(1);
  g.c2 = Capability(1);
  g.zero_sum = false;

  auto red = reduce_general_to_zero_sum(g);
  CHECK(red.game.zero_sum);
  CHECK(red.game.rows() == 4);
  CHECK(red.mapping.m == 2);
  const auto val = validate_table_family(*red.game.family.table);
  CHECK(val.valid);
  CHECK(val.odd);
  // narrow set of the reduced instance: the common perception plus one per element
  CHECK(narrow_elements(red.game).size() == 2);

  auto rr = search_nash_table(red.game, 8, 1e-6);
  REQUIRE(rr.has_value());
  CHECK(rr->x_star.tail(2).sum() <= 1e-9);

  auto [x_star, ry] = map_back_equilibrium(g, red, rr->x_star, rr->Ry);
  CHECK(x_star.size() == 2);
  auto rep = verify_nash(g, x_star, ResponseFunction::from(ry), 1e-4, 100, 1);
  CHECK(rep.holds);

  // guards
  VectorXd corrupt(4);
  corrupt << 0.45, 0.45, 0.05, 0.05;
  CHECK_THROWS_AS(map_back_equilibrium(g, red, corrupt, rr->Ry), ReductionViolation);
  VectorXd uniform(4);
  uniform << 0.5, 0.5, 0.0, 0.0;
  auto [xu, ryu] = map_back_equilibrium(g, red, uniform, rr->Ry);
  CHECK(xu[0] == doctest::Approx(0.5));
}

TEST_CASE("value ordering on a table instance") {
  auto t = std::make_shared<TableFamily>();
  t->level_cap = 2;
  const MatrixXd A = mat2(1, -1, -1, 1);
  t->universe.push_back({"v", A, std::nullopt});
  t->universe.push_back({"a", mat2(1.5, -1, -1, 1), std::nullopt});
  t->universe.push_back({"na", mat2(-1.5, 1, 1, -1), std::nullopt});
  t->universe.push_back({"nv", MatrixXd(-A), std::nullopt});
  for (const auto& id : {"v", "a"}) {
    t->level_map[{id, 1}] = "v";
    t->level_map[{id, 2}] = id;
  }
  for (const auto& id : {"nv", "na"}) {
    t->level_map[{id, 1}] = "nv";
    t->level_map[{id, 2}] = id;
  }
  auto g = table_zero_sum(t, "v", Capability(1), Capability(2));
  auto r = search_nash_table(g, 64, 1e-6);
  REQUIRE(r.has_value());
  const double v_n = nash_value_p1(g, r->x_star, ResponseFunction::from(r->Ry));
  CHECK(v_n == doctest::Approx(r->value).epsilon(1e-12));
  auto mm = solve_maximin(g, 1e-6, 400000, 7);
  const double v_h = maximin_objective(g, mm.x_star).first;
  const double v_s = stackelberg_value_zero_sum(g, 64, {r->x_star});
  CHECK(v_h <= v_n + 1e-9);
  CHECK(v_n <= v_s + 1e-9);
}
