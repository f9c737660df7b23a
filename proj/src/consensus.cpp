#include "outlr/consensus.hpp"

#include "outlr/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace outlr {

namespace {

using Clock = std::chrono::steady_clock;
using Triplet = Eigen::Triplet<double>;

// [A, extra] where extra is a list of (row, column offset past A, value).
SparseMatrix append_columns(const ConstraintSystem& sys, Eigen::Index extra_cols,
                            const std::vector<Triplet>& extra) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(sys.A.nonZeros()) + extra.size());
  for (int r = 0; r < sys.A.outerSize(); ++r)
    for (decltype(sys.A)::InnerIterator it(sys.A, r); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  for (const auto& t : extra) trips.emplace_back(t.row(), sys.N + t.col(), t.value());
  SparseMatrix G(sys.num_rows(), sys.N + extra_cols);
  G.setFromTriplets(trips.begin(), trips.end());
  return G;
}

LPSolution solve_or_throw(const LinearProgram& lp, const SolverTolerances& tol, const char* what) {
  LPSolution sol = solve_lp(lp, tol);
  if (sol.status != LPStatus::Optimal)
    throw Error(ErrorCode::SolverFailure, std::string(what) + ": LP returned " + to_string(sol.status) + " after " +
                                              std::to_string(sol.iterations) + " iterations");
  return sol;
}

void classify(ConsensusResult& res, double threshold) {
  res.inliers.clear();
  res.removed.clear();
  for (Eigen::Index i = 0; i < res.s.size(); ++i) (res.s[i] > threshold ? res.removed : res.inliers).push_back(i);
}

void check_system(const ConstraintSystem& sys) {
  if (sys.kappa <= 0 || sys.M <= 0 || sys.N <= 0 || sys.A.rows() != sys.kappa * sys.M || sys.A.cols() != sys.N ||
      sys.b.size() != sys.A.rows())
    throw Error(ErrorCode::MalformedProblem, "constraint system dimensions are inconsistent");
}

// minimize weights's  s.t.  A x <= b + s (x) 1_kappa,  s >= 0.
LPSolution solve_shared_slack(const ConstraintSystem& sys, const Vector& weights, const SolverTolerances& tol) {
  std::vector<Triplet> expand;
  expand.reserve(static_cast<std::size_t>(sys.num_rows()));
  for (Eigen::Index r = 0; r < sys.num_rows(); ++r) expand.emplace_back(r, sys.measurement_of_row(r), -1.0);
  Vector cost = Vector::Zero(sys.N + sys.M);
  cost.tail(sys.M) = weights;
  auto lp = LinearProgram::make(std::move(cost), append_columns(sys, sys.M, expand), sys.b);
  lp.lower.tail(sys.M).setZero();
  return solve_or_throw(lp, tol, "shared-slack l1");
}

// minimize gamma  s.t.  A x - gamma <= b,  gamma >= gamma_floor.
// Violations from an interior-point solve are only accurate to about the
// feasibility tolerance, so ties are detected on a coarser scale.
constexpr double kDualTieSlack = 1e-7;
constexpr double kDualTieRatio = 1e-3;

LPSolution solve_min_max(const ConstraintSystem& sys, const SolverTolerances& tol, double gamma_floor = -kInf) {
  std::vector<Triplet> col;
  col.reserve(static_cast<std::size_t>(sys.num_rows()));
  for (Eigen::Index r = 0; r < sys.num_rows(); ++r) col.emplace_back(r, 0, -1.0);
  Vector cost = Vector::Zero(sys.N + 1);
  cost[sys.N] = 1.0;
  auto lp = LinearProgram::make(std::move(cost), append_columns(sys, 1, col), sys.b);
  lp.lower[sys.N] = gamma_floor;
  return solve_or_throw(lp, tol, "min-max");
}

}  // namespace

void ReweightParams::validate() const {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidArgument, "q must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (K < 1) throw Error(ErrorCode::InvalidArgument, "K must be a positive integer");
}

Vector reweight(const Vector& s, double q, double epsilon) {
  return (s.array().abs() + epsilon).pow(q - 1.0).matrix();
}

Eigen::Index shared_slack_variable_count(const ConstraintSystem& sys) { return sys.N + sys.M; }
Eigen::Index per_row_slack_variable_count(const ConstraintSystem& sys) { return sys.N + sys.kappa * sys.M; }

ConsensusResult solve_alg1(const ConstraintSystem& sys, const ConsensusOptions& opts) {
  return solve_alg2(sys, ReweightParams{.q = 0.1, .epsilon = 1e-3, .K = 1}, opts);
}

ConsensusResult solve_alg2(const ConstraintSystem& sys, const ReweightParams& params, const ConsensusOptions& opts) {
  check_system(sys);
  params.validate();
  const auto start = Clock::now();
  ConsensusResult res;
  res.lp_variables = shared_slack_variable_count(sys);
  Vector weights = Vector::Ones(sys.M);
  for (int k = 0; k < params.K; ++k) {
    const LPSolution sol = solve_shared_slack(sys, weights, opts.lp);
    res.x = sol.primal.head(sys.N);
    res.s = sol.primal.tail(sys.M).cwiseMax(0.0);
    res.objective = sol.primal_objective;
    res.duality_gap = sol.relative_gap();
    res.iterations += sol.iterations;
    ++res.lp_solves;
    res.history.push_back({res.x, res.s, Clock::now() - start});
    if (k + 1 < params.K) weights = reweight(res.s, params.q, params.epsilon);
  }
  classify(res, opts.slack_threshold);
  res.runtime = Clock::now() - start;
  return res;
}

ConsensusResult solve_l1_full(const ConstraintSystem& sys, const ConsensusOptions& opts) {
  check_system(sys);
  const auto start = Clock::now();
  const auto rows = sys.num_rows();
  std::vector<Triplet> ident;
  ident.reserve(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) ident.emplace_back(r, r, -1.0);
  Vector cost = Vector::Zero(sys.N + rows);
  cost.tail(rows).setOnes();
  auto lp = LinearProgram::make(std::move(cost), append_columns(sys, rows, ident), sys.b);
  lp.lower.tail(rows).setZero();
  const LPSolution sol = solve_or_throw(lp, opts.lp, "per-row l1");

  ConsensusResult res;
  res.lp_variables = per_row_slack_variable_count(sys);
  res.x = sol.primal.head(sys.N);
  const Vector row_slack = sol.primal.tail(rows).cwiseMax(0.0);
  res.s.resize(sys.M);
  for (Eigen::Index i = 0; i < sys.M; ++i) res.s[i] = row_slack.segment(i * sys.kappa, sys.kappa).maxCoeff();
  res.objective = sol.primal_objective;
  res.duality_gap = sol.relative_gap();
  res.iterations = sol.iterations;
  res.lp_solves = 1;
  classify(res, opts.slack_threshold);
  res.runtime = Clock::now() - start;
  return res;
}

ConsensusResult solve_linf_iterative(const ConstraintSystem& sys, const ConsensusOptions& opts) {
  check_system(sys);
  const auto start = Clock::now();
  ConsensusResult res;
  res.lp_variables = sys.N + 1;
  res.s = Vector::Zero(sys.M);
  std::vector<Eigen::Index> remaining(static_cast<std::size_t>(sys.M));
  std::iota(remaining.begin(), remaining.end(), Eigen::Index{0});
  res.x = Vector::Zero(sys.N);

  while (!remaining.empty()) {
    const ConstraintSystem sub = sys.subset(remaining);
    const LPSolution sol = solve_min_max(sub, opts.lp, 0.0);
    ++res.lp_solves;
    res.iterations += sol.iterations;
    res.duality_gap = sol.relative_gap();
    res.x = sol.primal.head(sys.N);
    const double gamma = sol.primal[sys.N];
    res.objective = gamma;
    if (gamma <= opts.slack_threshold) break;

    // Among the measurements attaining the maximum, drop those whose rows carry
    // the largest dual mass: they are the ones pinning gamma. Equal masses
    // (symmetric data) are dropped together.
    Vector block_max(sub.M), mass = Vector::Zero(sub.M);
    for (Eigen::Index i = 0; i < sub.M; ++i) {
      block_max[i] = sub.block_violation(i, res.x);
      mass[i] = sol.dual.segment(i * sub.kappa, sub.kappa).sum();
    }
    const double worst = block_max.maxCoeff();
    const double tie = std::max(opts.tie_tolerance, kDualTieSlack * (1.0 + std::abs(gamma)));
    double top = 0.0;
    for (Eigen::Index i = 0; i < sub.M; ++i)
      if (block_max[i] >= worst - tie) top = std::max(top, mass[i]);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < sub.M; ++i) {
      const auto original = remaining[static_cast<std::size_t>(i)];
      if (block_max[i] >= worst - tie && mass[i] >= (1.0 - kDualTieRatio) * top)
        res.s[original] = std::max(gamma, block_max[i]);
      else
        keep.push_back(original);
    }
    remaining = std::move(keep);
  }
  for (auto i : remaining) res.s[i] = std::max(0.0, sys.block_violation(i, res.x));
  classify(res, opts.slack_threshold);
  res.runtime = Clock::now() - start;
  return res;
}

ConsensusResult solve_ransac(const std::vector<LinearMeasurement>& measurements, double delta, double rho,
                             std::uint64_t seed) {
  RansacOptions opts;
  opts.rho = rho;
  return solve_ransac(measurements, delta, seed, opts);
}

ConsensusResult solve_ransac(const std::vector<LinearMeasurement>& measurements, double delta, std::uint64_t seed,
                             const RansacOptions& opts) {
  if (!(delta > 0.0)) throw Error(ErrorCode::NonpositiveDelta, "delta must be positive");
  if (!(opts.rho > 0.0 && opts.rho < 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in (0, 1)");
  if (measurements.empty()) throw Error(ErrorCode::InvalidArgument, "no measurements");
  const auto start = Clock::now();
  const auto M = static_cast<Eigen::Index>(measurements.size());
  const auto N = measurements.front().dim();
  if (M < N) throw Error(ErrorCode::InvalidArgument, "RANSAC needs at least N measurements");

  Eigen::MatrixXd A(M, N);
  Vector y(M);
  for (Eigen::Index i = 0; i < M; ++i) {
    const auto& m = measurements[static_cast<std::size_t>(i)];
    if (m.dim() != N) throw Error(ErrorCode::DimensionMismatch, "measurements disagree on dimension");
    A.row(i) = m.a().transpose();
    y[i] = m.y();
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, M - 1);
  std::vector<Eigen::Index> sample(static_cast<std::size_t>(N));
  Eigen::MatrixXd As(N, N);
  Vector ys(N);

  Vector best_x = Vector::Zero(N);
  Eigen::Index best_count = -1;
  double needed = static_cast<double>(opts.max_trials);
  std::int64_t trials = 0;
  int degenerate_run = 0;
  const double log_fail = std::log(1.0 - opts.rho);

  while (trials < opts.max_trials && static_cast<double>(trials) < needed) {
    for (std::size_t k = 0; k < sample.size(); ++k) {
      Eigen::Index idx;
      do {
        idx = pick(rng);
      } while (std::find(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(k), idx) !=
               sample.begin() + static_cast<std::ptrdiff_t>(k));
      sample[k] = idx;
      As.row(static_cast<Eigen::Index>(k)) = A.row(idx);
      ys[static_cast<Eigen::Index>(k)] = y[idx];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(As);
    if (!lu.isInvertible()) {
      // Degenerate sample: draw again without counting a trial.
      if (++degenerate_run >= opts.max_degenerate_draws) break;
      continue;
    }
    degenerate_run = 0;
    ++trials;
    const Vector x = lu.solve(ys);
    const Vector resid = (A * x - y).cwiseAbs();
    const auto count = static_cast<Eigen::Index>((resid.array() <= delta).count());
    if (count > best_count) {
      best_count = count;
      best_x = x;
      const double inlier_prob = std::pow(static_cast<double>(count) / static_cast<double>(M), static_cast<double>(N));
      if (inlier_prob >= 1.0)
        needed = 0.0;
      else if (inlier_prob > 0.0)
        needed = std::ceil(log_fail / std::log1p(-inlier_prob));
    }
  }

  ConsensusResult res;
  res.x = best_x;
  res.s = ((A * best_x - y).cwiseAbs().array() - delta).cwiseMax(0.0).matrix();
  res.iterations = static_cast<int>(trials);
  res.objective = static_cast<double>(std::max<Eigen::Index>(best_count, 0));
  res.lp_variables = N;
  classify(res, opts.slack_threshold);
  res.runtime = Clock::now() - start;
  return res;
}

ConsensusResult exact_consensus(const ConstraintSystem& sys, const ConsensusOptions& opts) {
  check_system(sys);
  if (sys.M > kExactConsensusMaxM)
    throw Error(ErrorCode::TooLarge, "exhaustive search is limited to M <= " + std::to_string(kExactConsensusMaxM) +
                                         " (got " + std::to_string(sys.M) + ")");
  const auto start = Clock::now();
  ConsensusResult res;
  res.lp_variables = sys.N + 1;
  const auto M = sys.M;

  std::vector<Eigen::Index> best;
  Vector best_x = Vector::Zero(sys.N);
  bool found = false;
  for (Eigen::Index k = M; k >= 1 && !found; --k) {
    std::vector<Eigen::Index> combo(static_cast<std::size_t>(k));
    std::iota(combo.begin(), combo.end(), Eigen::Index{0});
    while (true) {
      const LPSolution sol = solve_min_max(sys.subset(combo), opts.lp, -1.0);
      ++res.lp_solves;
      res.iterations += sol.iterations;
      if (sol.primal[sys.N] <= opts.slack_threshold) {
        best = combo;
        best_x = sol.primal.head(sys.N);
        found = true;
        break;
      }
      // Next combination in lexicographic order.
      auto pos = static_cast<std::ptrdiff_t>(k) - 1;
      while (pos >= 0 && combo[static_cast<std::size_t>(pos)] == M - k + pos) --pos;
      if (pos < 0) break;
      ++combo[static_cast<std::size_t>(pos)];
      for (auto j = pos + 1; j < static_cast<std::ptrdiff_t>(k); ++j)
        combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
    }
  }

  res.x = best_x;
  res.s = Vector::Zero(M);
  std::vector<bool> in_set(static_cast<std::size_t>(M), false);
  for (auto i : best) in_set[static_cast<std::size_t>(i)] = true;
  for (Eigen::Index i = 0; i < M; ++i) {
    if (in_set[static_cast<std::size_t>(i)]) {
      res.inliers.push_back(i);
    } else {
      res.removed.push_back(i);
      res.s[i] = std::max(0.0, sys.block_violation(i, res.x));
    }
  }
  res.objective = static_cast<double>(best.size());
  res.runtime = Clock::now() - start;
  return res;
}

ConsensusResult exact_consensus(const std::vector<LinearMeasurement>& measurements, double delta,
                                const ConsensusOptions& opts) {
  if (static_cast<Eigen::Index>(measurements.size()) > kExactConsensusMaxM)
    throw Error(ErrorCode::TooLarge, "exhaustive search is limited to M <= " + std::to_string(kExactConsensusMaxM));
  return exact_consensus(build_linear_system(measurements, delta), opts);
}

}  // namespace outlr
