#include <cmath>
#include <random>

#include "doctest.h"
#include "tcam/milp.hpp"

using namespace tcam::milp;

namespace {

// Exhaustive optimum over binaries; continuous variables are not allowed here.
double brute_force(const Model& m, bool* feasible) {
  const int n = static_cast<int>(m.vars().size());
  double best = m.minimize() ? INFINITY : -INFINITY;
  *feasible = false;
  std::vector<double> x(n);
  for (long mask = 0; mask < (1L << n); ++mask) {
    for (int j = 0; j < n; ++j) x[j] = (mask >> j) & 1;
    if (!m.check(x, 1e-9)) continue;
    *feasible = true;
    const double v = m.objective_value(x);
    best = m.minimize() ? std::min(best, v) : std::max(best, v);
  }
  return best;
}

}  // namespace

TEST_SUITE("milp") {
  TEST_CASE("two binaries, pick one") {
    Model m;
    const int x = m.add_binary("x"), y = m.add_binary("y");
    m.add_constraint(LinExpr::var(x) + LinExpr::var(y), Sense::LE, 1);
    m.set_objective(LinExpr::var(x) + LinExpr::var(y), false);
    const auto s = solve(m);
    CHECK(s.status == Status::Optimal);
    CHECK(s.objective == doctest::Approx(1.0));
  }

  TEST_CASE("contradictory bounds are infeasible") {
    Model m;
    const int x = m.add_continuous("x", -10, 10);
    m.add_constraint(LinExpr::var(x), Sense::GE, 1);
    m.add_constraint(LinExpr::var(x), Sense::LE, 0);
    m.set_objective(LinExpr::var(x));
    CHECK(solve(m).status == Status::Infeasible);
  }

  TEST_CASE("unbounded direction is reported") {
    Model m;
    const int x = m.add_continuous("x");
    m.set_objective(LinExpr::var(x), false);
    CHECK(solve(m).status == Status::Unbounded);
  }

  TEST_CASE("lp relaxation with equality") {
    Model m;
    const int x = m.add_continuous("x", 0, 4), y = m.add_continuous("y", 0, 4);
    m.add_constraint(LinExpr::var(x) + LinExpr::var(y), Sense::EQ, 3);
    m.add_constraint(LinExpr::var(x) - LinExpr::var(y), Sense::LE, 1);
    m.set_objective(-1.0 * LinExpr::var(x) - LinExpr::var(y));
    const auto s = solve_lp(m);
    REQUIRE(s.status == Status::Optimal);
    CHECK(m.check(s.x));
    CHECK(s.objective == doctest::Approx(-3.0));
  }

  TEST_CASE("random binary models match enumeration") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coef(-5, 5);
    for (int trial = 0; trial < 60; ++trial) {
      Model m;
      const int n = 4 + trial % 7;
      for (int j = 0; j < n; ++j) m.add_binary("b" + std::to_string(j));
      const int rows = 2 + trial % 5;
      for (int i = 0; i < rows; ++i) {
        LinExpr e;
        int sum_pos = 0;
        for (int j = 0; j < n; ++j) {
          const int c = coef(rng);
          e.add(j, c);
          sum_pos += std::max(c, 0);
        }
        m.add_constraint(e, i % 3 == 2 ? Sense::GE : Sense::LE, i % 3 == 2 ? -sum_pos / 3 : sum_pos / 2);
      }
      LinExpr obj;
      for (int j = 0; j < n; ++j) obj.add(j, coef(rng));
      m.set_objective(obj, trial % 2 == 0);
      bool feasible = false;
      const double want = brute_force(m, &feasible);
      const auto s = solve(m);
      if (!feasible) {
        CHECK(s.status == Status::Infeasible);
        continue;
      }
      REQUIRE(s.status == Status::Optimal);
      CHECK(m.check(s.x));
      CHECK(std::abs(s.objective - want) <= 1e-6);
      CHECK(s.bound_violations == 0);
    }
  }

  TEST_CASE("conditional: guard 1 relaxes, guard 0 enforces") {
    Model m;
    const int a = m.add_continuous("sa", 0, 20), b = m.add_continuous("sb", 0, 20);
    const int p = m.add_binary("p");
    m.add_constraint(LinExpr::var(a), Sense::EQ, 5);
    add_conditional(m, p, LinExpr::var(b) - LinExpr::var(a), Sense::GE, 3, 100);
    m.set_objective(LinExpr::var(b));
    Model fixed0 = m, fixed1 = m;
    fixed0.fix(p, 0);
    fixed1.fix(p, 1);
    CHECK(solve(fixed0).objective == doctest::Approx(8.0));
    CHECK(solve(fixed1).objective == doctest::Approx(0.0));
    CHECK_THROWS(add_conditional(m, p, LinExpr::var(b) - LinExpr::var(a), Sense::GE, 3, 10));
  }

  TEST_CASE("lp export lists sections") {
    Model m;
    const int x = m.add_binary("x");
    const int y = m.add_integer("y", 0, 5);
    m.add_constraint(LinExpr::var(x) + LinExpr::var(y), Sense::LE, 3, "cap");
    m.set_objective(LinExpr::var(y), false);
    const auto lp = m.to_lp();
    CHECK(lp.find("Maximize") != std::string::npos);
    CHECK(lp.find("cap:") != std::string::npos);
    CHECK(lp.find("Binaries") != std::string::npos);
    CHECK(lp.find("Generals") != std::string::npos);
  }
}
