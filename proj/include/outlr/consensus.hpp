#pragma once

#include "outlr/lp.hpp"
#include "outlr/residuals.hpp"

#include <chrono>
#include <cstdint>
#include <vector>

namespace outlr {

// State after one LP solve of an iterative method.
struct IterationRecord {
  Vector x;
  Vector s;
  std::chrono::duration<double> elapsed{};  // since the method started
};

struct ConsensusResult {
  Vector x;
  Vector s;                            // per-measurement slack, >= 0
  std::vector<Eigen::Index> inliers;   // ascending
  std::vector<Eigen::Index> removed;   // ascending, complement of inliers
  double objective = 0.0;
  double duality_gap = 0.0;            // relative gap of the last LP solve
  int iterations = 0;                  // interior-point iterations, summed over solves
  int lp_solves = 0;
  Eigen::Index lp_variables = 0;       // primal unknowns of the (largest) LP solved
  std::chrono::duration<double> runtime{};
  // One entry per reweighted solve (solve_alg1 / solve_alg2 only); history.back().s == s.
  std::vector<IterationRecord> history;

  std::size_t consensus_size() const { return inliers.size(); }
};

struct ReweightParams {
  double q = 0.1;
  double epsilon = 1e-3;
  int K = 2;

  // Throws Error(InvalidArgument).
  void validate() const;
};

struct ConsensusOptions {
  double slack_threshold = 1e-6;  // s_i above this marks measurement i as removed
  double tie_tolerance = 1e-9;    // max-slack ties in solve_linf_iterative
  SolverTolerances lp{};
};

// w_i = (|s_i| + epsilon)^(q - 1).
Vector reweight(const Vector& s, double q, double epsilon);

// Primal unknowns of the shared-slack LP (N + M) and of the per-row slack LP (N + kappa M).
Eigen::Index shared_slack_variable_count(const ConstraintSystem& sys);
Eigen::Index per_row_slack_variable_count(const ConstraintSystem& sys);

// minimize sum(s)  s.t.  A x <= b + s (x) 1_kappa,  s >= 0.
ConsensusResult solve_alg1(const ConstraintSystem& sys, const ConsensusOptions& opts = {});

// K reweighted solves of  minimize sum(w_k .* s)  under the same constraints,
// starting from unit weights; removal is decided by the K-th slack.
ConsensusResult solve_alg2(const ConstraintSystem& sys, const ReweightParams& params,
                           const ConsensusOptions& opts = {});

// Baseline with one slack per row: minimize sum(s~)  s.t.  A x <= b + s~, s~ >= 0.
// Measurement i is removed when the largest slack of its block exceeds the threshold.
ConsensusResult solve_l1_full(const ConstraintSystem& sys, const ConsensusOptions& opts = {});

// Repeated min-max fitting: minimize gamma s.t. A x <= b + gamma over the
// remaining measurements, dropping the measurements that attain the maximum
// slack until gamma is no longer positive. When several attain it, only those
// with the largest dual mass in the min-max LP are dropped.
ConsensusResult solve_linf_iterative(const ConstraintSystem& sys, const ConsensusOptions& opts = {});

struct RansacOptions {
  double rho = 0.99;
  std::int64_t max_trials = 100000;
  int max_degenerate_draws = 1000;  // consecutive singular samples before giving up
  double slack_threshold = 1e-6;
};

// Hypothesize-and-verify on minimal N-subsets with adaptive trial count
// ceil(log(1 - rho) / log(1 - w^N)), w the best inlier fraction seen so far.
ConsensusResult solve_ransac(const std::vector<LinearMeasurement>& measurements, double delta, double rho,
                             std::uint64_t seed);
ConsensusResult solve_ransac(const std::vector<LinearMeasurement>& measurements, double delta, std::uint64_t seed,
                             const RansacOptions& opts);

inline constexpr Eigen::Index kExactConsensusMaxM = 20;

// Exhaustive maximum consensus. Subsets are tried largest first in
// lexicographic order, so ties resolve to the lexicographically smallest
// index set. A subset is feasible when its min-max slack is <= slack_threshold.
// Throws Error(TooLarge) when M > kExactConsensusMaxM.
ConsensusResult exact_consensus(const ConstraintSystem& sys, const ConsensusOptions& opts = {});
ConsensusResult exact_consensus(const std::vector<LinearMeasurement>& measurements, double delta,
                                const ConsensusOptions& opts = {});

}  // namespace outlr
