#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "iscap/common.hpp"
#include "iscap/socp.hpp"

using namespace iscap;

namespace {

// min t s.t. ||x - x0|| <= t, optionally a^T x = r.  Analytic optimum:
// unconstrained t*=0 at x0; with one equality t* = |r - a^T x0|/||a||.
SocpProblem least_norm_problem(const Eigen::VectorXd& x0) {
  const int n = static_cast<int>(x0.size());
  SocpProblem p;
  p.set_num_vars(n + 1);
  p.objective[n] = 1.0;
  ConeConstraint cone;
  cone.c.add(n, 1.0);
  cone.b = -x0;
  for (int i = 0; i < n; ++i) {
    SparseRow r;
    r.add(i, 1.0);
    cone.rows.push_back(r);
  }
  p.cones.push_back(cone);
  return p;
}

void add_halfspace(SocpProblem& p, const SparseRow& c, double d) {
  ConeConstraint lin;  // c^T x + d >= 0
  lin.c = c;
  lin.d = d;
  lin.b.resize(0);
  p.cones.push_back(lin);
}

}  // namespace

TEST_CASE("least-norm point with and without an equality") {
  Rng rng(101);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 7);
    Eigen::VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0[i] = 3.0 * rng.normal();

    SECTION("unconstrained trial " + std::to_string(trial)) {
      const auto sol = solve_socp(least_norm_problem(x0));
      REQUIRE(sol.status == SocpStatus::Optimal);
      CHECK(sol.objective_value == Catch::Approx(0.0).margin(1e-6));
      CHECK((sol.x.head(n) - x0).norm() < 1e-5);
      CHECK(sol.max_violation < 1e-7);
    }

    SECTION("one equality trial " + std::to_string(trial)) {
      Eigen::VectorXd a(n);
      for (int i = 0; i < n; ++i) a[i] = rng.normal();
      a[0] += 2.0;  // keep it well away from zero
      const double r = 5.0 * rng.normal();
      auto p = least_norm_problem(x0);
      LinearEquality eq;
      eq.a = SparseRow::from_dense(a);
      eq.rhs = r;
      p.equalities.push_back(eq);
      const double expect = std::abs(r - a.dot(x0)) / a.norm();
      const auto sol = solve_socp(p);
      REQUIRE(sol.status == SocpStatus::Optimal);
      CHECK(sol.objective_value == Catch::Approx(expect).margin(1e-6));
      CHECK(std::abs(a.dot(sol.x.head(n)) - r) < 1e-6 * (1.0 + std::abs(r)));
    }
  }
}

TEST_CASE("box linear program via degenerate cones") {
  // min c^T x over -1 <= x_i <= 1 has optimum -||c||_1 at x = -sign(c).
  Rng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 5);
    SocpProblem p;
    p.set_num_vars(n);
    double l1 = 0.0;
    for (int i = 0; i < n; ++i) {
      p.objective[i] = rng.normal() + ((rng.next_u64() & 1) ? 0.5 : -0.5);
      l1 += std::abs(p.objective[i]);
      SparseRow up, lo;
      up.add(i, -1.0);  // 1 - x_i >= 0
      add_halfspace(p, up, 1.0);
      lo.add(i, 1.0);   // x_i + 1 >= 0
      add_halfspace(p, lo, 1.0);
    }
    const auto sol = solve_socp(p);
    REQUIRE(sol.status == SocpStatus::Optimal);
    CHECK(sol.objective_value == Catch::Approx(-l1).margin(1e-6));
    CHECK(sol.max_violation < 1e-7);
  }
}

TEST_CASE("minimum norm over an affine set") {
  // min ||F x|| s.t. 1^T x = 1 -> x* = (F^T F)^-1 1 / (1^T (F^T F)^-1 1).
  Rng rng(77);
  const int n = 5, m = 7;
  Eigen::MatrixXd f(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) f(i, j) = rng.normal();
  SocpProblem p;
  p.set_num_vars(n + 1);
  p.objective[n] = 1.0;
  ConeConstraint cone;
  cone.c.add(n, 1.0);
  cone.b = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i)
    cone.rows.push_back(SparseRow::from_dense(f.row(i).transpose()));
  p.cones.push_back(cone);
  LinearEquality eq;
  for (int i = 0; i < n; ++i) eq.a.add(i, 1.0);
  eq.rhs = 1.0;
  p.equalities.push_back(eq);

  const Eigen::MatrixXd ftf = f.transpose() * f;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd w = ftf.ldlt().solve(ones);
  const Eigen::VectorXd xstar = w / ones.dot(w);
  const double expect = (f * xstar).norm();

  const auto sol = solve_socp(p);
  REQUIRE(sol.status == SocpStatus::Optimal);
  CHECK(sol.objective_value == Catch::Approx(expect).margin(1e-6));
  CHECK((sol.x.head(n) - xstar).norm() < 1e-4);
}

TEST_CASE("infeasible constraints are certified") {
  // ||x|| <= 1 together with x_0 >= 3.
  const int n = 3;
  SocpProblem p;
  p.set_num_vars(n);
  p.objective[0] = 1.0;
  ConeConstraint ball;
  ball.d = 1.0;
  ball.b = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    SparseRow r;
    r.add(i, 1.0);
    ball.rows.push_back(r);
  }
  p.cones.push_back(ball);
  SparseRow above;
  above.add(0, 1.0);
  add_halfspace(p, above, -3.0);  // x_0 - 3 >= 0
  const auto sol = solve_socp(p);
  CHECK(sol.status == SocpStatus::Infeasible);
}

TEST_CASE("unbounded objective maps to infeasible status") {
  // min -x_0 with only x_1 constrained.
  SocpProblem p;
  p.set_num_vars(2);
  p.objective[0] = -1.0;
  ConeConstraint cone;  // |x_1| <= 10
  cone.d = 10.0;
  cone.b = Eigen::VectorXd::Zero(1);
  SparseRow r;
  r.add(1, 1.0);
  cone.rows.push_back(r);
  p.cones.push_back(cone);
  const auto sol = solve_socp(p);
  CHECK(sol.status == SocpStatus::Infeasible);
  CHECK(sol.detail.find("unbounded") != std::string::npos);
}

TEST_CASE("degenerate problems without cones") {
  SECTION("zero objective returns a feasible point") {
    SocpProblem p;
    p.set_num_vars(3);
    LinearEquality eq;
    eq.a.add(0, 1.0);
    eq.a.add(1, 1.0);
    eq.rhs = 2.0;
    p.equalities.push_back(eq);
    const auto sol = solve_socp(p);
    REQUIRE(sol.status == SocpStatus::Optimal);
    CHECK(sol.max_violation < 1e-9);
    CHECK(sol.objective_value == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("descent direction in the null space is unbounded") {
    SocpProblem p;
    p.set_num_vars(2);
    p.objective[1] = 1.0;
    LinearEquality eq;
    eq.a.add(0, 1.0);
    eq.rhs = 1.0;
    p.equalities.push_back(eq);
    const auto sol = solve_socp(p);
    CHECK(sol.status == SocpStatus::Infeasible);
  }
}

TEST_CASE("badly scaled data still solves") {
  // Least-norm with columns scaled across 8 orders of magnitude.
  const int n = 4;
  Eigen::VectorXd x0(n);
  x0 << 1e-4, 2e3, -3e-2, 4.0;
  Eigen::VectorXd d(n);
  d << 1e-4, 1e4, 1e-2, 1.0;
  SocpProblem p;
  p.set_num_vars(n + 1);
  p.objective[n] = 1.0;
  ConeConstraint cone;  // || D x - x0 || <= t at x* = D^-1 x0
  cone.c.add(n, 1.0);
  cone.b = -x0;
  for (int i = 0; i < n; ++i) {
    SparseRow r;
    r.add(i, d[i]);
    cone.rows.push_back(r);
  }
  p.cones.push_back(cone);
  const auto sol = solve_socp(p);
  REQUIRE(sol.status == SocpStatus::Optimal);
  CHECK(sol.objective_value == Catch::Approx(0.0).margin(1e-6));
  for (int i = 0; i < n; ++i)
    CHECK(sol.x[i] * d[i] == Catch::Approx(x0[i]).margin(1e-5));
}

TEST_CASE("problem validation") {
  SocpProblem p;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);  // no vars
  p.set_num_vars(2);
  ConeConstraint bad;
  bad.c.add(5, 1.0);  // out of range
  p.cones.push_back(bad);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.cones.clear();
  ConeConstraint mism;
  SparseRow r;
  r.add(0, 1.0);
  mism.rows.push_back(r);
  mism.b = Eigen::VectorXd::Zero(3);  // 1 row but 3 offsets
  p.cones.push_back(mism);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(solve_socp(p), std::invalid_argument);
  p.cones.clear();
  CHECK_THROWS_AS(solve_socp(p, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_socp(p, 1e-8, 0), std::invalid_argument);
}

TEST_CASE("triplet dump round trip") {
  Eigen::VectorXd x0(2);
  x0 << 1.5, -2.25;
  auto p = least_norm_problem(x0);
  LinearEquality eq;
  eq.a.add(0, 2.0);
  eq.rhs = 3.0;
  p.equalities.push_back(eq);

  const std::string path = "socp_dump_test.txt";
  dump_socp(p, path);

  // Parse the documented "<row> <col> <value>" triples back.
  std::ifstream in(path);
  REQUIRE(in.good());
  std::map<std::pair<int, int>, double> triples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int row, col;
    double v;
    REQUIRE((ss >> row >> col >> v));
    triples[{row, col}] += v;
  }
  // Row 0: objective has a single entry on the epigraph variable.
  CHECK(triples.at({0, 2}) == 1.0);
  // Row 1: the equality 2 x_0 = 3.
  CHECK(triples.at({1, 0}) == 2.0);
  CHECK(triples.at({1, -1}) == 3.0);
  // Row 2: cone scalar side t; rows 3-4 carry I and -x0.
  CHECK(triples.at({2, 2}) == 1.0);
  CHECK(triples.at({3, 0}) == 1.0);
  CHECK(triples.at({3, -1}) == -1.5);
  CHECK(triples.at({4, 1}) == 1.0);
  CHECK(triples.at({4, -1}) == 2.25);
  std::remove(path.c_str());
}

TEST_CASE("reported iteration count and violation are sane") {
  Eigen::VectorXd x0(6);
  x0 << 1, -2, 3, -4, 5, -6;
  const auto sol = solve_socp(least_norm_problem(x0), 1e-8, 100);
  REQUIRE(sol.status == SocpStatus::Optimal);
  CHECK(sol.iterations >= 1);
  CHECK(sol.iterations <= 100);
  CHECK(sol.max_violation < 1e-7);
}
