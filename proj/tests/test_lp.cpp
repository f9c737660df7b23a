#include "doctest.h"

#include "outlr/error.hpp"
#include "outlr/lp.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <random>

using namespace outlr;

namespace {

SparseMatrix sparse(const Eigen::MatrixXd& dense) { return dense.sparseView(); }

// Worst-case complementarity sum_i lambda_i (h_i - g_i x) plus bound terms.
double complementarity(const LinearProgram& lp, const LPSolution& sol) {
  const Vector slack = lp.ineq_rhs - lp.ineq_matrix * sol.primal;
  double cs = sol.dual.dot(slack);
  for (Eigen::Index j = 0; j < lp.num_variables(); ++j) {
    if (std::isfinite(lp.lower[j])) cs += sol.lower_dual[j] * (sol.primal[j] - lp.lower[j]);
    if (std::isfinite(lp.upper[j])) cs += sol.upper_dual[j] * (lp.upper[j] - sol.primal[j]);
  }
  return cs;
}

void check_certificate(const LinearProgram& lp, const LPSolution& sol) {
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.relative_gap() <= 1e-8);
  CHECK(sol.dual.minCoeff() >= 0.0);
  const Vector viol = lp.ineq_matrix * sol.primal - lp.ineq_rhs;
  CHECK(viol.maxCoeff() <= 1e-8);
  CHECK(complementarity(lp, sol) <= 1e-6 * static_cast<double>(lp.num_constraints()));
}

// Minimum of c'x over the vertices of {G x <= h}; nullopt when no vertex is feasible.
std::optional<double> vertex_enumeration(const Eigen::MatrixXd& G, const Vector& h, const Vector& c) {
  const int m = static_cast<int>(G.rows());
  const int n = static_cast<int>(G.cols());
  std::optional<double> best;
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd Gs(n, n);
      Vector hs(n);
      for (int k = 0; k < n; ++k) {
        Gs.row(k) = G.row(idx[static_cast<std::size_t>(k)]);
        hs[k] = h[idx[static_cast<std::size_t>(k)]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Gs);
      if (lu.rank() < n) return;
      const Vector x = lu.solve(hs);
      if ((G * x - h).maxCoeff() > 1e-9) return;
      const double obj = c.dot(x);
      if (!best || obj < *best) best = obj;
      return;
    }
    for (int r = start; r < m; ++r) {
      idx[static_cast<std::size_t>(depth)] = r;
      rec(r + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("lp: single active constraint") {
  Eigen::MatrixXd G(1, 1);
  G << -1.0;
  auto lp = LinearProgram::make(Vector::Ones(1), sparse(G), Vector::Constant(1, -1.0));
  const auto sol = solve_lp(lp);
  check_certificate(lp, sol);
  CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("lp: optimal face is a segment") {
  Eigen::MatrixXd G(3, 2);
  G << -1, 0, 0, -1, -1, -1;
  Vector h(3);
  h << 0, 0, -1;
  auto lp = LinearProgram::make(Vector::Ones(2), sparse(G), h);
  const auto sol = solve_lp(lp);
  check_certificate(lp, sol);
  CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.primal.sum() == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.primal.minCoeff() >= -1e-8);
  const auto oracle = vertex_enumeration(G, h, Vector::Ones(2));
  REQUIRE(oracle);
  CHECK(*oracle == doctest::Approx(1.0));
}

TEST_CASE("lp: empty feasible set is reported infeasible") {
  Eigen::MatrixXd G(2, 1);
  G << 1, -1;
  Vector h(2);
  h << -1, -1;
  const auto sol = solve_lp(LinearProgram::make(Vector::Ones(1), sparse(G), h));
  CHECK(sol.status == LPStatus::Infeasible);
  CHECK(sol.primal.size() == 0);
}

TEST_CASE("lp: unbounded objective") {
  Eigen::MatrixXd G(1, 1);
  G << 1.0;
  const auto sol = solve_lp(LinearProgram::make(Vector::Ones(1), sparse(G), Vector::Ones(1)));
  CHECK(sol.status == LPStatus::Unbounded);
}

TEST_CASE("lp: variable bounds") {
  // min -x1 - 2 x2  s.t.  x1 + x2 <= 3,  0 <= x <= 2  ->  x = (1, 2), objective -5
  Eigen::MatrixXd G(1, 2);
  G << 1, 1;
  LinearProgram lp = LinearProgram::make(Vector{{-1.0, -2.0}}, sparse(G), Vector::Constant(1, 3.0));
  lp.lower = Vector::Zero(2);
  lp.upper = Vector::Constant(2, 2.0);
  const auto sol = solve_lp(lp);
  check_certificate(lp, sol);
  CHECK(sol.primal_objective == doctest::Approx(-5.0).epsilon(1e-8));
  CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.primal[1] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("lp: malformed inputs") {
  Eigen::MatrixXd G(2, 2);
  G.setIdentity();
  auto lp = LinearProgram::make(Vector::Ones(2), sparse(G), Vector::Ones(3));
  CHECK_THROWS_AS(solve_lp(lp), Error);
  try {
    solve_lp(lp);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedProblem);
  }
  auto lp2 = LinearProgram::make(Vector::Ones(2), sparse(G), Vector::Ones(2));
  lp2.lower = Vector::Constant(2, 1.0);
  lp2.upper = Vector::Zero(2);
  CHECK_THROWS_AS(solve_lp(lp2), Error);
}

TEST_CASE("lp: random instances agree with vertex enumeration") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 3);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = dim(rng);
    const int m_extra = std::uniform_int_distribution<int>(0, 8 - 2 * n)(rng);
    const int m = 2 * n + m_extra;
    // Box rows keep the polytope bounded; a known interior point keeps it non-empty.
    Eigen::MatrixXd G(m, n);
    Vector h(m);
    Vector x0(n);
    for (int j = 0; j < n; ++j) x0[j] = 0.5 * unif(rng);
    G.setZero();
    for (int j = 0; j < n; ++j) {
      G(2 * j, j) = 1.0;
      G(2 * j + 1, j) = -1.0;
      h[2 * j] = 2.0 + unif(rng);
      h[2 * j + 1] = 2.0 + unif(rng);
    }
    for (int r = 2 * n; r < m; ++r) {
      for (int j = 0; j < n; ++j) G(r, j) = unif(rng);
      h[r] = G.row(r).dot(x0) + 0.5 * (1.0 + unif(rng));
    }
    Vector c(n);
    for (int j = 0; j < n; ++j) c[j] = unif(rng);

    auto lp = LinearProgram::make(c, sparse(G), h);
    const auto sol = solve_lp(lp);
    const auto oracle = vertex_enumeration(G, h, c);
    REQUIRE(oracle);
    check_certificate(lp, sol);
    CHECK(std::abs(sol.primal_objective - *oracle) <= 1e-6);
    ++compared;
  }
  CHECK(compared == 300);
}
