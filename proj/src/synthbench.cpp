#include "outlr/synthbench.hpp"

#include "outlr/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

namespace outlr {

void RegressionScenario::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, field + " " + why);
  };
  if (M < 1) bad("M", "must be positive");
  if (N < 1) bad("N", "must be positive");
  if (!(inlier_sigma >= 0.0)) bad("inlier_sigma", "must be non-negative");
  if (!(outlier_sigma >= 0.0)) bad("outlier_sigma", "must be non-negative");
  if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) bad("outlier_ratio", "must lie in [0, 1)");
}

RegressionData gen_regression(const RegressionScenario& sc) {
  sc.validate();
  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> inlier_noise(0.0, sc.inlier_sigma);
  std::normal_distribution<double> outlier_noise(0.0, sc.outlier_sigma);

  RegressionData data;
  data.x_true.resize(sc.N);
  for (Eigen::Index j = 0; j < sc.N; ++j) data.x_true[j] = unif(rng);

  Eigen::MatrixXd A(sc.M, sc.N);
  for (Eigen::Index i = 0; i < sc.M; ++i)
    for (Eigen::Index j = 0; j < sc.N; ++j) A(i, j) = unif(rng);
  Vector y = A * data.x_true;
  for (Eigen::Index i = 0; i < sc.M; ++i) y[i] += sc.inlier_sigma > 0.0 ? inlier_noise(rng) : 0.0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(sc.M));
  for (Eigen::Index i = 0; i < sc.M; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_out = static_cast<std::size_t>(std::floor(sc.outlier_ratio * static_cast<double>(sc.M)));
  data.outliers.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_out));
  std::sort(data.outliers.begin(), data.outliers.end());
  for (auto i : data.outliers) y[i] += sc.outlier_sigma > 0.0 ? outlier_noise(rng) : 0.0;

  data.measurements.reserve(static_cast<std::size_t>(sc.M));
  for (Eigen::Index i = 0; i < sc.M; ++i) data.measurements.emplace_back(A.row(i).transpose(), y[i]);
  return data;
}

SyntheticScene gen_scene(int cameras, int points, double corrupt_ratio, std::uint64_t seed) {
  SceneSpec spec;
  spec.cameras = cameras;
  spec.points = points;
  spec.corrupt_ratio = corrupt_ratio;
  spec.seed = seed;
  return gen_scene(spec);
}

SyntheticScene gen_scene(const SceneSpec& spec) {
  if (spec.cameras < 2) throw Error(ErrorCode::InvalidArgument, "cameras must be at least 2");
  if (spec.points < 1) throw Error(ErrorCode::InvalidArgument, "points must be positive");
  if (!(spec.corrupt_ratio >= 0.0 && spec.corrupt_ratio < 1.0))
    throw Error(ErrorCode::InvalidArgument, "corrupt_ratio must lie in [0, 1)");
  if (!(spec.visibility > 0.0 && spec.visibility <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "visibility must lie in (0, 1]");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  constexpr double kRadius = 4.0;
  constexpr double kMinDepth = 0.5;
  constexpr int kMaxRetries = 100;

  std::vector<Camera> cams;
  std::vector<Eigen::Vector3d> centers;
  for (int k = 0; k < spec.cameras; ++k) {
    const double theta = 2.0 * std::numbers::pi * (k + 0.25 * unit(rng)) / spec.cameras;
    const Eigen::Vector3d center(kRadius * std::cos(theta), 0.5 * unif(rng), kRadius * std::sin(theta));
    const Eigen::Vector3d forward = -center.normalized();
    const Eigen::Vector3d right = Eigen::Vector3d::UnitY().cross(forward).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    Camera cam;
    cam.id = k;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cams.push_back(cam);
    centers.push_back(center);
  }

  // Shift the world origin to the anchor's center so its translation is zero.
  const Eigen::Vector3d origin = centers.front();
  std::map<int, Eigen::Vector3d> translations;
  for (int k = 0; k < spec.cameras; ++k)
    translations[k] = -cams[static_cast<std::size_t>(k)].rotation * (centers[static_cast<std::size_t>(k)] - origin);
  translations[0] = Eigen::Vector3d::Zero();

  std::map<int, Eigen::Vector3d> world_points;
  std::vector<Observation> obs;
  for (int p = 0; p < spec.points; ++p) {
    Eigen::Vector3d z;
    int retries = 0;
    for (;; ++retries) {
      if (retries >= kMaxRetries)
        throw Error(ErrorCode::DegenerateGeometry, "could not place point " + std::to_string(p) + " in front of all cameras");
      z = Eigen::Vector3d(unif(rng), unif(rng), unif(rng)) - origin;
      bool ok = true;
      for (int k = 0; k < spec.cameras && ok; ++k)
        ok = (cams[static_cast<std::size_t>(k)].rotation * z + translations[k]).z() > kMinDepth;
      if (ok) break;
    }
    world_points[p] = z;

    std::vector<int> seen;
    while (seen.size() < 2) {
      seen.clear();
      for (int k = 0; k < spec.cameras; ++k)
        if (unit(rng) < spec.visibility) seen.push_back(k);
    }
    for (int k : seen) {
      const Eigen::Vector3d c = cams[static_cast<std::size_t>(k)].rotation * z + translations[k];
      Observation o;
      o.point_id = p;
      o.camera_id = k;
      o.z1 = c.x() / c.z() + (spec.noise_sigma > 0.0 ? noise(rng) : 0.0);
      o.z2 = c.y() / c.z() + (spec.noise_sigma > 0.0 ? noise(rng) : 0.0);
      obs.push_back(o);
    }
  }

  std::vector<Eigen::Index> order(obs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_bad = static_cast<std::size_t>(std::floor(spec.corrupt_ratio * static_cast<double>(obs.size())));
  std::vector<Eigen::Index> corrupted(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_bad));
  std::sort(corrupted.begin(), corrupted.end());
  for (auto i : corrupted) {
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    const double magnitude = 0.02 + 0.08 * unit(rng);
    obs[static_cast<std::size_t>(i)].z1 += magnitude * std::cos(angle);
    obs[static_cast<std::size_t>(i)].z2 += magnitude * std::sin(angle);
  }

  KnownRotationProblem problem(std::move(cams), std::move(obs));
  Vector x_true = problem.pack(world_points, translations);
  return SyntheticScene{std::move(problem), std::move(x_true), std::move(corrupted), spec.noise_sigma};
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t cell, int repeat) {
  // splitmix64 over a packed (cell, repeat) key.
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (1 + (static_cast<std::uint64_t>(cell) << 32) +
                                                         static_cast<std::uint64_t>(repeat));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

void score(TrialRecord& rec, const RegressionData& data, const Vector& x, const Vector& s, double threshold) {
  const auto M = static_cast<Eigen::Index>(data.measurements.size());
  std::vector<bool> is_outlier(static_cast<std::size_t>(M), false);
  for (auto i : data.outliers) is_outlier[static_cast<std::size_t>(i)] = true;
  std::size_t kept = 0, kept_true = 0, removed_true = 0;
  double sq = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) {
    const bool out = is_outlier[static_cast<std::size_t>(i)];
    if (s[i] > threshold) {
      removed_true += out ? 1 : 0;
    } else {
      ++kept;
      kept_true += out ? 0 : 1;
      const auto& m = data.measurements[static_cast<std::size_t>(i)];
      const double r = m.a().dot(x) - m.y();
      sq += r * r;
    }
  }
  const auto n_out = data.outliers.size();
  const auto n_in = static_cast<std::size_t>(M) - n_out;
  rec.consensus_size = kept;
  rec.removed = static_cast<std::size_t>(M) - kept;
  rec.recall = n_in == 0 ? 1.0 : static_cast<double>(kept_true) / static_cast<double>(n_in);
  rec.precision = rec.removed == 0 ? 1.0 : static_cast<double>(removed_true) / static_cast<double>(rec.removed);
  rec.rmse = kept == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(kept));
}

TrialRecord base_record(const RegressionScenario& sc, double delta, std::uint64_t seed) {
  TrialRecord rec;
  rec.M = sc.M;
  rec.N = sc.N;
  rec.outlier_ratio = sc.outlier_ratio;
  rec.delta = delta;
  rec.seed = seed;
  return rec;
}

}  // namespace

ConsensusResult run_linear_method(const MethodSpec& spec, const std::vector<LinearMeasurement>& measurements,
                                  const ConstraintSystem& sys, double delta, double rho, std::uint64_t seed,
                                  const ConsensusOptions& options) {
  switch (spec.method) {
    case Method::Alg1: return solve_alg1(sys, options);
    case Method::Alg2: return solve_alg2(sys, spec.reweight, options);
    case Method::L1Full: return solve_l1_full(sys, options);
    case Method::Linf: return solve_linf_iterative(sys, options);
    case Method::Ransac: {
      RansacOptions ro;
      ro.rho = rho;
      ro.slack_threshold = options.slack_threshold;
      return solve_ransac(measurements, delta, seed, ro);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

std::vector<TrialRecord> run_sweep(const SweepConfig& config) {
  if (config.grid.empty()) throw Error(ErrorCode::InvalidArgument, "scenario grid is empty");
  if (config.methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods selected");
  if (config.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be positive");
  std::vector<TrialRecord> out;
  for (std::size_t cell = 0; cell < config.grid.size(); ++cell) {
    for (int rep = 0; rep < config.repeats; ++rep) {
      RegressionScenario sc = config.grid[cell];
      sc.seed = derive_seed(config.base_seed, cell, rep);
      const RegressionData data = gen_regression(sc);
      const ConstraintSystem sys = build_linear_system(data.measurements, config.delta);
      for (const auto& spec : config.methods) {
        TrialRecord rec = base_record(sc, config.delta, sc.seed);
        rec.method = to_string(spec.method);
        if (spec.method == Method::Alg2) {
          rec.q = spec.reweight.q;
          rec.K = spec.reweight.K;
        }
        try {
          const ConsensusResult res =
              run_linear_method(spec, data.measurements, sys, config.delta, config.rho, sc.seed, config.options);
          score(rec, data, res.x, res.s, config.options.slack_threshold);
          rec.runtime_ms = std::chrono::duration<double, std::milli>(res.runtime).count();
        } catch (const Error& e) {
          rec.error = e.what();
        }
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::vector<TrialRecord> run_k_sweep(const KSweepConfig& config) {
  if (config.qs.empty()) throw Error(ErrorCode::InvalidArgument, "no q values");
  if (config.k_min < 1 || config.k_max < config.k_min) throw Error(ErrorCode::InvalidArgument, "invalid K range");
  if (config.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be positive");
  std::vector<TrialRecord> out;
  for (int rep = 0; rep < config.repeats; ++rep) {
    RegressionScenario sc = config.scenario;
    sc.seed = derive_seed(config.base_seed, 0, rep);
    const RegressionData data = gen_regression(sc);
    const ConstraintSystem sys = build_linear_system(data.measurements, config.delta);
    for (double q : config.qs) {
      ReweightParams params{.q = q, .epsilon = config.epsilon, .K = config.k_max};
      std::optional<ConsensusResult> res;
      std::string error;
      try {
        res = solve_alg2(sys, params, config.options);
      } catch (const Error& e) {
        error = e.what();
      }
      for (int k = config.k_min; k <= config.k_max; ++k) {
        TrialRecord rec = base_record(sc, config.delta, sc.seed);
        rec.method = to_string(Method::Alg2);
        rec.q = q;
        rec.K = k;
        if (res) {
          const auto& it = res->history[static_cast<std::size_t>(k - 1)];
          score(rec, data, it.x, it.s, config.options.slack_threshold);
          rec.runtime_ms = std::chrono::duration<double, std::milli>(it.elapsed).count();
        } else {
          rec.error = error;
        }
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::vector<OracleRecord> run_oracle(const OracleConfig& config) {
  config.scenario.validate();
  if (config.scenario.M > kExactConsensusMaxM)
    throw Error(ErrorCode::TooLarge, "oracle needs M <= " + std::to_string(kExactConsensusMaxM));
  if (config.methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods selected");
  if (config.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be positive");
  std::vector<OracleRecord> out;
  for (int rep = 0; rep < config.repeats; ++rep) {
    RegressionScenario sc = config.scenario;
    sc.seed = derive_seed(config.base_seed, 0, rep);
    const RegressionData data = gen_regression(sc);
    const ConstraintSystem sys = build_linear_system(data.measurements, config.delta);
    const auto exact = exact_consensus(sys, config.options);
    for (const auto& spec : config.methods) {
      OracleRecord rec;
      rec.method = to_string(spec.method);
      rec.seed = sc.seed;
      rec.exact = exact.consensus_size();
      try {
        const auto res =
            run_linear_method(spec, data.measurements, sys, config.delta, config.rho, sc.seed, config.options);
        rec.consensus_size = res.consensus_size();
        // Kept set must be feasible at the returned x.
        for (auto i : res.inliers)
          rec.max_kept_violation = std::max(rec.max_kept_violation, sys.block_violation(i, res.x));
      } catch (const Error& e) {
        rec.error = e.what();
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records) {
  using Key = std::tuple<std::string, Eigen::Index, Eigen::Index, double, double, std::optional<double>,
                         std::optional<int>>;
  std::vector<Key> order;
  std::map<Key, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) {
    Key key{r.method, r.M, r.N, r.outlier_ratio, r.delta, r.q, r.K};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<AggregateRow> rows;
  for (const auto& key : order) {
    const auto& members = groups[key];
    AggregateRow row;
    std::tie(row.method, row.M, row.N, row.outlier_ratio, row.delta, row.q, row.K) = key;
    std::vector<double> cons, rt;
    for (const auto* r : members) {
      ++row.trials;
      if (!r->error.empty()) {
        ++row.failures;
        continue;
      }
      cons.push_back(static_cast<double>(r->consensus_size));
      rt.push_back(r->runtime_ms);
      row.removed_mean += static_cast<double>(r->removed);
      row.recall_mean += r->recall;
      row.precision_mean += r->precision;
      row.rmse_mean += r->rmse;
    }
    const auto n = static_cast<double>(cons.size());
    auto mean_std = [](const std::vector<double>& v) {
      if (v.empty()) return std::pair{0.0, 0.0};
      double m = 0.0;
      for (double e : v) m += e;
      m /= static_cast<double>(v.size());
      double var = 0.0;
      for (double e : v) var += (e - m) * (e - m);
      return std::pair{m, v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0};
    };
    std::tie(row.consensus_mean, row.consensus_std) = mean_std(cons);
    std::tie(row.runtime_ms_mean, row.runtime_ms_std) = mean_std(rt);
    if (n > 0) {
      row.removed_mean /= n;
      row.recall_mean /= n;
      row.precision_mean /= n;
      row.rmse_mean /= n;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

template <typename T>
std::string opt_str(const std::optional<T>& v) {
  if (!v) return "";
  std::ostringstream ss;
  ss << *v;
  return ss.str();
}

}  // namespace

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, bool include_runtime) {
  out << "method,M,N,outlier_ratio,delta,q,K,seed,consensus_size,removed,recall,precision,rmse,runtime_ms\n";
  for (const auto& r : records) {
    out << r.method << ',' << r.M << ',' << r.N << ',' << r.outlier_ratio << ',' << r.delta << ',' << opt_str(r.q)
        << ',' << opt_str(r.K) << ',' << r.seed << ',';
    if (!r.error.empty()) {
      out << ",,,,,\n";
      continue;
    }
    out << r.consensus_size << ',' << r.removed << ',' << r.recall << ',' << r.precision << ',' << r.rmse << ','
        << (include_runtime ? r.runtime_ms : 0.0) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows, bool include_runtime) {
  out << "method,M,N,outlier_ratio,delta,q,K,trials,failures,consensus_mean,consensus_std,removed_mean,recall_mean,"
         "precision_mean,rmse_mean,runtime_ms_mean,runtime_ms_std\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.M << ',' << r.N << ',' << r.outlier_ratio << ',' << r.delta << ',' << opt_str(r.q)
        << ',' << opt_str(r.K) << ',' << r.trials << ',' << r.failures << ',' << r.consensus_mean << ','
        << r.consensus_std << ',' << r.removed_mean << ',' << r.recall_mean << ',' << r.precision_mean << ','
        << r.rmse_mean << ',' << (include_runtime ? r.runtime_ms_mean : 0.0) << ','
        << (include_runtime ? r.runtime_ms_std : 0.0) << '\n';
  }
}

}  // namespace outlr
