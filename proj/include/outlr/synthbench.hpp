#pragma once

#include "outlr/consensus.hpp"
#include "outlr/residuals.hpp"
#include "outlr/sfm.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace outlr {

// Robust linear regression benchmark: y = A x + noise, A uniform in [-1, 1],
// x uniform in [-1, 1], inlier noise N(0, inlier_sigma^2); floor(ratio M)
// uniformly chosen measurements get extra N(0, outlier_sigma^2) noise.
struct RegressionScenario {
  Eigen::Index M = 500;
  Eigen::Index N = 8;
  double inlier_sigma = 0.1;
  double outlier_sigma = 1.0;
  double outlier_ratio = 0.0;
  std::uint64_t seed = 0;

  // Throws Error(InvalidArgument) naming the offending field.
  void validate() const;
};

struct RegressionData {
  std::vector<LinearMeasurement> measurements;
  Vector x_true;
  std::vector<Eigen::Index> outliers;  // ascending
};

RegressionData gen_regression(const RegressionScenario& scenario);

// Cameras on a circle of radius 4 around the origin looking at points drawn
// uniformly from [-1, 1]^3. Each point is seen by each camera with
// probability `visibility` (at least two cameras). Image noise is
// N(0, noise_sigma^2) per coordinate; floor(corrupt_ratio * #obs) observations
// are displaced by an offset of norm uniform in [0.02, 0.1] in a random direction.
struct SceneSpec {
  int cameras = 5;
  int points = 200;
  double corrupt_ratio = 0.1;
  double noise_sigma = 1e-3;
  double visibility = 0.7;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  KnownRotationProblem problem;
  Vector x_true;                        // gauge-fixed: anchor translation 0
  std::vector<Eigen::Index> corrupted;  // ascending observation indices
  double noise_sigma = 0.0;
};

// Throws Error(DegenerateGeometry) if a valid point cannot be drawn after
// bounded retries, Error(InvalidArgument) for fewer than 2 cameras.
SyntheticScene gen_scene(const SceneSpec& spec);
SyntheticScene gen_scene(int cameras, int points, double corrupt_ratio, std::uint64_t seed);

struct MethodSpec {
  Method method = Method::Alg1;
  ReweightParams reweight{};  // alg2 only
};

// Runs one method on a linear system; RANSAC uses the raw measurements and `seed`.
ConsensusResult run_linear_method(const MethodSpec& spec, const std::vector<LinearMeasurement>& measurements,
                                  const ConstraintSystem& sys, double delta, double rho, std::uint64_t seed,
                                  const ConsensusOptions& options = {});

// One row of the trial CSV.
struct TrialRecord {
  std::string method;
  Eigen::Index M = 0;
  Eigen::Index N = 0;
  double outlier_ratio = 0.0;
  double delta = 0.0;
  std::optional<double> q;  // alg2 only
  std::optional<int> K;     // alg2 only
  std::uint64_t seed = 0;
  std::size_t consensus_size = 0;
  std::size_t removed = 0;
  double recall = 0.0;      // kept true inliers / true inliers
  double precision = 0.0;   // removed true outliers / removed (1 when nothing is removed)
  double rmse = 0.0;        // residual RMSE over kept measurements at the returned x
  double runtime_ms = 0.0;
  std::string error;        // non-empty when the cell failed
};

struct SweepConfig {
  std::vector<RegressionScenario> grid;  // seed fields are ignored; per-cell seeds are derived
  std::vector<MethodSpec> methods;
  int repeats = 1;
  std::uint64_t base_seed = 0;
  double delta = 0.3;
  double rho = 0.99;
  ConsensusOptions options{};
};

// Per-cell data seed for grid entry `cell` and repetition `repeat`.
std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t cell, int repeat);

// Runs every (scenario, repeat, method) cell; all methods of a repeat see the
// same data. Records are ordered by scenario, repeat, method. Solver errors
// are recorded in TrialRecord::error and do not abort the sweep.
std::vector<TrialRecord> run_sweep(const SweepConfig& config);

struct KSweepConfig {
  RegressionScenario scenario{};  // outlier_ratio typically 0.5
  std::vector<double> qs{0.1, 0.2, 0.5};
  int k_min = 1;
  int k_max = 10;
  int repeats = 1;
  std::uint64_t base_seed = 0;
  double delta = 0.3;
  double epsilon = 1e-3;
  ConsensusOptions options{};
};

// Consensus of Algorithm 2 as a function of the iteration count: one run with
// K = k_max per (repeat, q), reporting the state after every k in [k_min, k_max].
std::vector<TrialRecord> run_k_sweep(const KSweepConfig& config);

struct OracleConfig {
  RegressionScenario scenario{};  // M <= kExactConsensusMaxM
  std::vector<MethodSpec> methods;
  int repeats = 1;
  std::uint64_t base_seed = 0;
  double delta = 0.3;
  double rho = 0.99;
  ConsensusOptions options{};
};

struct OracleRecord {
  std::string method;
  std::uint64_t seed = 0;
  std::size_t consensus_size = 0;
  std::size_t exact = 0;
  double max_kept_violation = 0.0;  // largest positive block violation over the kept set
  std::string error;
};

// Compares each method with exact_consensus on small generated instances.
// Throws Error(TooLarge) when scenario.M exceeds the enumeration limit.
std::vector<OracleRecord> run_oracle(const OracleConfig& config);

struct AggregateRow {
  std::string method;
  Eigen::Index M = 0;
  Eigen::Index N = 0;
  double outlier_ratio = 0.0;
  double delta = 0.0;
  std::optional<double> q;
  std::optional<int> K;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double consensus_mean = 0.0;
  double consensus_std = 0.0;
  double removed_mean = 0.0;
  double recall_mean = 0.0;
  double precision_mean = 0.0;
  double rmse_mean = 0.0;
  double runtime_ms_mean = 0.0;
  double runtime_ms_std = 0.0;
};

// Groups by (method, M, N, outlier_ratio, delta, q, K) in order of first appearance.
std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records);

// Header: method,M,N,outlier_ratio,delta,q,K,seed,consensus_size,removed,recall,precision,rmse,runtime_ms
// With include_runtime = false the runtime column is written as 0 so that
// output is byte-identical across runs.
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, bool include_runtime = true);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows, bool include_runtime = true);

}  // namespace outlr
