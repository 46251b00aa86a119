#include "streamsim/lp.hpp"

#include <catch_amalgamated.hpp>

using namespace streamsim;

namespace {

LinearProgram::Row row(std::vector<double> coeffs, char op, double rhs) {
  return {std::move(coeffs), rhs, op};
}

}  // namespace

TEST_CASE("basic equality-constrained minimum") {
  // min x0 + 2 x1 s.t. x0 + x1 = 1  ->  x = (1, 0).
  LinearProgram lp;
  lp.num_vars = 2;
  lp.objective = {1.0, 2.0};
  lp.rows = {row({1.0, 1.0}, '=', 1.0)};
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.objective == Catch::Approx(1.0));
  CHECK(sol.x[0] == Catch::Approx(1.0));
  CHECK(sol.x[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("greater-or-equal rows get surplus variables") {
  // min x0 s.t. x0 >= 2.5.
  LinearProgram lp;
  lp.num_vars = 1;
  lp.objective = {1.0};
  lp.rows = {row({1.0}, '>', 2.5)};
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.objective == Catch::Approx(2.5));
}

TEST_CASE("mixed system with slack-covered shortfall") {
  // min s  s.t.  x + s >= 0.8, x <= capacity via x + y = 0.5 (y >= 0).
  // Best x is 0.5, so s = 0.3.
  LinearProgram lp;
  lp.num_vars = 3;  // x, y, s
  lp.objective = {0.0, 0.0, 1.0};
  lp.rows = {row({1.0, 1.0, 0.0}, '=', 0.5), row({1.0, 0.0, 1.0}, '>', 0.8)};
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.objective == Catch::Approx(0.3));
}

TEST_CASE("infeasible systems are detected") {
  // x0 = 1 and x0 = 2 cannot both hold.
  LinearProgram lp;
  lp.num_vars = 1;
  lp.objective = {1.0};
  lp.rows = {row({1.0}, '=', 1.0), row({1.0}, '=', 2.0)};
  CHECK(solve_lp(lp).status == LpStatus::kInfeasible);
}

TEST_CASE("unbounded problems are detected") {
  // min -x0, x0 free upward.
  LinearProgram lp;
  lp.num_vars = 1;
  lp.objective = {-1.0};
  lp.rows = {row({1.0}, '>', 0.0)};
  CHECK(solve_lp(lp).status == LpStatus::kUnbounded);
}

TEST_CASE("redundant equalities are harmless") {
  // The same constraint twice (rank-deficient), as in chain balance rows.
  LinearProgram lp;
  lp.num_vars = 2;
  lp.objective = {1.0, 3.0};
  lp.rows = {row({1.0, 1.0}, '=', 1.0), row({1.0, 1.0}, '=', 1.0),
             row({2.0, 2.0}, '=', 2.0)};
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.objective == Catch::Approx(1.0));
}

TEST_CASE("negative rhs rows are normalized") {
  // -x0 = -2  ->  x0 = 2.
  LinearProgram lp;
  lp.num_vars = 1;
  lp.objective = {1.0};
  lp.rows = {row({-1.0}, '=', -2.0)};
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.x[0] == Catch::Approx(2.0));
}

TEST_CASE("degenerate vertices do not cycle (Beale)") {
  // Beale's cycling example; optimum -0.05 at x = (1/25, 0, 1, 0).
  LinearProgram lp;
  lp.num_vars = 4;
  lp.objective = {-0.75, 150.0, -0.02, 6.0};
  lp.rows = {row({-0.25, 60.0, 0.04, -9.0}, '>', 0.0),
             row({-0.5, 90.0, 0.02, -3.0}, '>', 0.0),
             row({0.0, 0.0, -1.0, 0.0}, '>', -1.0)};
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.objective == Catch::Approx(-0.05));
}

TEST_CASE("occupation-measure shaped program") {
  // Two-state toy chain, actions a/b in state 0 with P(stay) 1 or 0.
  // Variables x(0,a), x(0,b), x(1,only). Balance + normalization + demand.
  LinearProgram lp;
  lp.num_vars = 4;  // x0a, x0b, x1, slack
  lp.objective = {0.0, 0.0, 0.0, 1.0};
  lp.rows = {
      // state 0 balance: inflow = x0a (self) + x1 (always returns to 0)
      row({1.0 - 1.0, 1.0, -1.0, 0.0}, '=', 0.0),
      // state 1 balance: inflow = x0b
      row({0.0, -1.0, 1.0, 0.0}, '=', 0.0),
      row({1.0, 1.0, 1.0, 0.0}, '=', 1.0),
      // reward only from action b at rate 0.5 twice per visit cycle
      row({0.0, 0.5, 0.5, 1.0}, '>', 0.4),
  };
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.objective == Catch::Approx(0.0).margin(1e-9));
}
