#include "doctest.h"

#include "outlr/consensus.hpp"
#include "outlr/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace outlr;

namespace {

std::vector<LinearMeasurement> four_point() {
  std::vector<LinearMeasurement> m;
  for (double y : {0.0, 0.0, 0.0, 10.0}) m.emplace_back(Vector::Ones(1), y);
  return m;
}

std::vector<LinearMeasurement> consistent(int M, int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector x(N);
  for (int j = 0; j < N; ++j) x[j] = unif(rng);
  std::vector<LinearMeasurement> m;
  for (int i = 0; i < M; ++i) {
    Vector a(N);
    for (int j = 0; j < N; ++j) a[j] = unif(rng);
    m.emplace_back(a, a.dot(x));
  }
  return m;
}

// Small random instance: y = a'x* + small noise, with `outliers` gross corruptions.
std::vector<LinearMeasurement> tiny_instance(std::mt19937_64& rng, int M, int N, int outliers, double delta) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector x(N);
  for (int j = 0; j < N; ++j) x[j] = unif(rng);
  std::vector<int> order(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> bad(static_cast<std::size_t>(M), false);
  for (int k = 0; k < outliers; ++k) bad[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
  std::vector<LinearMeasurement> m;
  for (int i = 0; i < M; ++i) {
    Vector a(N);
    for (int j = 0; j < N; ++j) a[j] = unif(rng);
    if (a.cwiseAbs().maxCoeff() < 0.1) a[0] = 0.5;
    double y = a.dot(x) + 0.5 * delta * unif(rng);
    if (bad[static_cast<std::size_t>(i)]) y += (unif(rng) < 0 ? -1.0 : 1.0) * delta * (3.0 + 7.0 * (1.0 + unif(rng)) / 2.0);
    m.emplace_back(a, y);
  }
  return m;
}

void check_feasible(const ConstraintSystem& sys, const ConsensusResult& r) {
  for (auto i : r.inliers) CHECK(sys.block_violation(i, r.x) <= 1e-6);
  CHECK(r.inliers.size() + r.removed.size() == static_cast<std::size_t>(sys.M));
}

const std::vector<Eigen::Index> kFirstThree{0, 1, 2};
const std::vector<Eigen::Index> kLast{3};

}  // namespace

TEST_CASE("reweight at zero slack") {
  const Vector w = reweight(Vector::Zero(3), 0.1, 1e-3);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(501.187).epsilon(1e-6));
  CHECK(w[0] == doctest::Approx(std::pow(10.0, 2.7)).epsilon(1e-12));
}

TEST_CASE("reweight params validation") {
  CHECK_THROWS_AS((ReweightParams{.q = 1.0}.validate()), Error);
  CHECK_THROWS_AS((ReweightParams{.q = 0.0}.validate()), Error);
  CHECK_THROWS_AS((ReweightParams{.epsilon = 0.0}.validate()), Error);
  CHECK_THROWS_AS((ReweightParams{.K = 0}.validate()), Error);
  CHECK_NOTHROW(ReweightParams{}.validate());
}

TEST_CASE("all-consistent data keeps everything") {
  const auto meas = consistent(30, 3, 1);
  const auto sys = build_linear_system(meas, 0.1);
  for (const auto& r : {solve_alg1(sys), solve_alg2(sys, {}), solve_l1_full(sys), solve_linf_iterative(sys),
                        solve_ransac(meas, 0.1, 0.99, 5)}) {
    CHECK(r.removed.empty());
    CHECK(r.inliers.size() == 30);
    CHECK(r.s.maxCoeff() <= 1e-6);
    check_feasible(sys, r);
  }
  const auto a1 = solve_alg1(sys);
  CHECK(std::abs(a1.objective) <= 1e-6);
  const auto li = solve_linf_iterative(sys);
  CHECK(li.lp_solves == 1);
}

TEST_CASE("four-point example: alg1") {
  const auto sys = build_linear_system(four_point(), 1.0);
  const auto r = solve_alg1(sys);
  CHECK(r.removed == kLast);
  CHECK(r.inliers == kFirstThree);
  CHECK(r.x[0] >= -1.0 - 1e-6);
  CHECK(r.x[0] <= 1.0 + 1e-6);
  CHECK(r.s[3] >= 8.0 - 1e-6);
  CHECK(r.objective == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(r.duality_gap <= 1e-8);
}

TEST_CASE("four-point example: other methods") {
  const auto meas = four_point();
  const auto sys = build_linear_system(meas, 1.0);
  CHECK(solve_l1_full(sys).removed == kLast);
  CHECK(solve_alg2(sys, {}).removed == kLast);

  const auto li = solve_linf_iterative(sys);
  CHECK(li.removed == kLast);
  CHECK(li.history.empty());
  CHECK(li.lp_solves == 2);
  CHECK(li.s[3] == doctest::Approx(4.0).epsilon(1e-6));

  const auto rs = solve_ransac(meas, 1.0, 0.99, 11);
  CHECK(rs.inliers == kFirstThree);

  const auto ex = exact_consensus(meas, 1.0);
  CHECK(ex.consensus_size() == 3);
  CHECK(ex.inliers == kFirstThree);
}

TEST_CASE("linf first solve attains gamma 4") {
  // Only the outlier and one inlier: min-max of {|x| - 1, |x - 10| - 1} is 4 at x = 5.
  std::vector<LinearMeasurement> m{LinearMeasurement(Vector::Ones(1), 0.0), LinearMeasurement(Vector::Ones(1), 10.0)};
  const auto sys = build_linear_system(m, 1.0);
  const auto r = solve_linf_iterative(sys);
  // Both attain the maximum, so both go.
  CHECK(r.removed.size() == 2);
  CHECK(r.s[0] == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(r.s[1] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("K = 1 reproduces alg1 exactly") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 5; ++t) {
    const auto meas = tiny_instance(rng, 40, 3, 10, 0.2);
    const auto sys = build_linear_system(meas, 0.2);
    const auto a = solve_alg1(sys);
    const auto b = solve_alg2(sys, ReweightParams{.K = 1});
    CHECK(a.x == b.x);
    CHECK(a.s == b.s);
    CHECK(a.removed == b.removed);
    CHECK(a.objective == b.objective);
  }
}

TEST_CASE("reweighting never increases the weighted objective") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto meas = tiny_instance(rng, 60, 3, 25, 0.2);
    const auto sys = build_linear_system(meas, 0.2);
    const ReweightParams p{.K = 6};
    const auto r = solve_alg2(sys, p);
    REQUIRE(r.history.size() == 6);
    CHECK(r.history.back().s == r.s);
    for (std::size_t k = 0; k + 1 < r.history.size(); ++k) {
      const Vector w = reweight(r.history[k].s, p.q, p.epsilon);
      const double next = w.dot(r.history[k + 1].s);
      const double prev = w.dot(r.history[k].s);
      CHECK(next <= prev + 1e-8 * (1.0 + prev));
    }
  }
}

TEST_CASE("slack matches block violation") {
  std::mt19937_64 rng(31);
  const auto meas = tiny_instance(rng, 50, 2, 15, 0.2);
  const auto sys = build_linear_system(meas, 0.2);
  for (const auto& r : {solve_alg1(sys), solve_alg2(sys, {}), solve_l1_full(sys)}) {
    for (Eigen::Index i = 0; i < sys.M; ++i) {
      const bool violated = sys.block_violation(i, r.x) > 1e-6;
      const bool flagged = r.s[i] > 1e-6;
      if (violated) CHECK(flagged);
      if (!flagged) CHECK(sys.block_violation(i, r.x) <= 1e-6);
    }
  }
}

TEST_CASE("oracle dominates every method on tiny instances") {
  std::mt19937_64 rng(2718);
  for (int t = 0; t < 40; ++t) {
    const int M = 6 + t % 7;
    const int N = 1 + t % 2;
    const double delta = 0.2;
    const auto meas = tiny_instance(rng, M, N, M / 4, delta);
    const auto sys = build_linear_system(meas, delta);
    const auto ex = exact_consensus(sys);
    check_feasible(sys, ex);
    for (const auto& r : {solve_alg1(sys), solve_alg2(sys, ReweightParams{.K = 5}), solve_l1_full(sys),
                          solve_linf_iterative(sys), solve_ransac(meas, delta, 0.99, static_cast<std::uint64_t>(t))}) {
      CHECK(r.consensus_size() <= ex.consensus_size());
      check_feasible(sys, r);
    }
  }
}

TEST_CASE("four-point family at 25% outliers") {
  // Variations of the four-point example: a common design value a, three
  // coincident inliers and one gross outlier. Distinct inliers would make the
  // l1 optimum a flat segment on which any point is optimal.
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int alg1_hits = 0, full_hits = 0;
  constexpr int kTrials = 200;
  for (int t = 0; t < kTrials; ++t) {
    const double a = 1.25 + 0.75 * unif(rng);
    const double c = 5.0 * unif(rng);
    const double delta = 0.5 + 0.5 * (1.0 + unif(rng));
    const int bad = std::uniform_int_distribution<int>(0, 3)(rng);
    std::vector<LinearMeasurement> meas;
    for (int i = 0; i < 4; ++i) {
      double y = a * c;
      if (i == bad) y += (unif(rng) < 0 ? -1.0 : 1.0) * delta * (2.5 + 7.5 * std::abs(unif(rng)));
      meas.emplace_back(Vector::Constant(1, a), y);
    }
    const auto sys = build_linear_system(meas, delta);
    const auto ex = exact_consensus(sys);
    alg1_hits += solve_alg1(sys).consensus_size() == ex.consensus_size();
    full_hits += solve_l1_full(sys).consensus_size() == ex.consensus_size();
  }
  CHECK(alg1_hits >= 190);
  CHECK(full_hits >= 190);
}

TEST_CASE("exact oracle guard and ties") {
  const auto big = consistent(21, 1, 3);
  try {
    exact_consensus(big, 0.1);
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooLarge);
  }
  // Two disjoint clusters of equal size: the lexicographically smallest set wins.
  std::vector<LinearMeasurement> m;
  for (double y : {5.0, 0.0, 5.0, 0.0}) m.emplace_back(Vector::Ones(1), y);
  const auto ex = exact_consensus(m, 0.5);
  CHECK(ex.inliers == std::vector<Eigen::Index>{0, 2});
}

TEST_CASE("variable counts") {
  const auto sys = build_linear_system(consistent(10, 3, 8), 0.1);
  CHECK(shared_slack_variable_count(sys) == 13);
  CHECK(per_row_slack_variable_count(sys) == 23);
  CHECK(solve_alg1(sys).lp_variables == 13);
  CHECK(solve_l1_full(sys).lp_variables == 23);
}

TEST_CASE("ransac is reproducible per seed") {
  std::mt19937_64 rng(77);
  const auto meas = tiny_instance(rng, 80, 3, 30, 0.2);
  const auto a = solve_ransac(meas, 0.2, 0.99, 123);
  const auto b = solve_ransac(meas, 0.2, 0.99, 123);
  CHECK(a.inliers == b.inliers);
  CHECK(a.x == b.x);
}
