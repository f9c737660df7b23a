#include "cli.hpp"

#include "outlr/error.hpp"
#include "outlr/sfm.hpp"
#include "outlr/synthbench.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace outlr::cli {
namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by the commands that run a consensus method.
struct Common {
  double delta = 0.0;
  std::vector<double> q;
  double eps = 1e-3;
  int iters = 2;
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--delta", c.delta, "Inlier threshold (required)")->required();
  cmd->add_option("--q", c.q, "Reweighting exponent(s) for alg2")->delimiter(',');
  cmd->add_option("--eps", c.eps, "Reweighting epsilon")->capture_default_str();
  cmd->add_option("--iters", c.iters, "Reweighted solves K for alg2")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  cmd->add_option("--out", c.out, "Output path");
}

void check_common(const Common& c) {
  if (!(c.delta > 0.0) || !std::isfinite(c.delta)) throw ConfigError("--delta must be positive, got " + std::to_string(c.delta));
  if (!(c.eps > 0.0)) throw ConfigError("--eps must be positive");
  if (c.iters < 1) throw ConfigError("--iters must be at least 1");
  for (double q : c.q)
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("--q values must lie in (0, 1)");
}

void check_ratio(double r) {
  if (!(r >= 0.0 && r < 1.0)) {
    std::ostringstream msg;
    msg << "--ratio must lie in [0, 1), got " << r;
    throw ConfigError(msg.str());
  }
}

std::vector<MethodSpec> method_specs(const std::vector<std::string>& names, const Common& c) {
  if (names.empty()) throw ConfigError("--methods is empty");
  const std::vector<double> qs = c.q.empty() ? std::vector<double>{0.1} : c.q;
  std::vector<MethodSpec> specs;
  for (const auto& n : names) {
    Method m;
    try {
      m = parse_method(n);
    } catch (const Error&) {
      throw ConfigError("--methods: unknown method '" + n + "'");
    }
    if (m == Method::Alg2) {
      for (double q : qs) specs.push_back({m, ReweightParams{.q = q, .epsilon = c.eps, .K = c.iters}});
    } else {
      specs.push_back({m, {}});
    }
  }
  return specs;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::DataError, "cannot write " + path);
  return f;
}

// "a..b" or a single integer.
std::pair<int, int> parse_k_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const int k = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return {1, k};
    }
    const int lo = std::stoi(text.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(text);
    const std::string hi_text = text.substr(dots + 2);
    const int hi = std::stoi(hi_text, &used);
    if (used != hi_text.size()) throw std::invalid_argument(text);
    if (lo < 1 || hi < lo) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::exception&) {
    throw ConfigError("--sweep-k expects a range like 1..10, got '" + text + "'");
  }
}

// synth ---------------------------------------------------------------------

struct SynthArgs {
  Common c;
  std::vector<std::string> methods{"alg1"};
  std::vector<double> ratios;
  int repeats = 1;
  Eigen::Index M = 500;
  Eigen::Index N = 8;
  std::string sweep_k;
  std::string agg;
  bool no_runtime = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  check_common(a.c);
  if (a.repeats < 1) throw ConfigError("--repeats must be at least 1");
  const bool sweep = !a.sweep_k.empty();
  std::vector<double> ratios = a.ratios;
  if (ratios.empty()) ratios = sweep ? std::vector<double>{0.5} : std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  for (double r : ratios) check_ratio(r);
  RegressionScenario base;
  base.M = a.M;
  base.N = a.N;
  for (double r : ratios) {
    base.outlier_ratio = r;
    try {
      base.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }

  std::string agg_path = a.agg;
  if (agg_path.empty() && !a.c.out.empty()) {
    std::filesystem::path p(a.c.out);
    agg_path = (p.parent_path() / (p.stem().string() + "_agg.csv")).string();
  }

  std::vector<TrialRecord> records;
  std::ostringstream cfg;
  cfg << "# synth M=" << a.M << " N=" << a.N << " ratio=" << join(ratios) << " delta=" << a.c.delta
      << " repeats=" << a.repeats << " seed=" << a.c.seed;
  if (sweep) {
    if (ratios.size() != 1) throw ConfigError("--sweep-k takes a single --ratio");
    const auto [k_lo, k_hi] = parse_k_range(a.sweep_k);
    KSweepConfig kc;
    kc.scenario = base;
    kc.scenario.outlier_ratio = ratios.front();
    if (!a.c.q.empty()) kc.qs = a.c.q;
    kc.k_min = k_lo;
    kc.k_max = k_hi;
    kc.repeats = a.repeats;
    kc.base_seed = a.c.seed;
    kc.delta = a.c.delta;
    kc.epsilon = a.c.eps;
    cfg << " method=alg2 q=" << join(kc.qs) << " eps=" << kc.epsilon << " K=" << k_lo << ".." << k_hi;
    records = run_k_sweep(kc);
  } else {
    SweepConfig sc;
    for (double r : ratios) {
      base.outlier_ratio = r;
      sc.grid.push_back(base);
    }
    sc.methods = method_specs(a.methods, a.c);
    sc.repeats = a.repeats;
    sc.base_seed = a.c.seed;
    sc.delta = a.c.delta;
    cfg << " methods=" << join(a.methods) << " q=" << (a.c.q.empty() ? "0.1" : join(a.c.q)) << " eps=" << a.c.eps
        << " K=" << a.c.iters;
    records = run_sweep(sc);
  }

  std::size_t failures = 0;
  for (const auto& r : records) failures += r.error.empty() ? 0 : 1;
  const auto rows = aggregate(records);
  const bool runtime = !a.no_runtime;
  if (a.c.out.empty()) {
    err << cfg.str() << "\n";
    write_trials_csv(out, records, runtime);
  } else {
    out << cfg.str() << "\n";
    auto f = open_out(a.c.out);
    write_trials_csv(f, records, runtime);
    out << "# trials: " << a.c.out << " (" << records.size() << " rows)\n";
  }
  if (!agg_path.empty()) {
    auto f = open_out(agg_path);
    write_aggregate_csv(f, rows, runtime);
    (a.c.out.empty() ? err : out) << "# aggregate: " << agg_path << " (" << rows.size() << " rows)\n";
  }
  if (failures > 0) {
    err << "error: " << failures << " of " << records.size() << " trials failed\n";
    for (const auto& r : records)
      if (!r.error.empty()) {
        err << "  " << r.method << " seed=" << r.seed << ": " << r.error << "\n";
        break;
      }
    return kSolver;
  }
  return kOk;
}

// sfm -----------------------------------------------------------------------

struct SfmArgs {
  Common c;
  std::string method = "alg1";
  std::string cameras;
  std::string observations;
  double dmin = 0.01;
  double dmax = 1e4;
  std::string norm = "l1";
};

int cmd_sfm(const SfmArgs& a, std::ostream& out) {
  check_common(a.c);
  if (a.c.q.size() > 1) throw ConfigError("sfm takes a single --q");
  Method method;
  try {
    method = parse_method(a.method);
  } catch (const Error&) {
    throw ConfigError("--method: unknown method '" + a.method + "'");
  }
  if (method == Method::Ransac) throw ConfigError("--method ransac is not available for sfm");
  if (!(a.dmin > 0.0 && a.dmin < a.dmax)) throw ConfigError("--dmin/--dmax must satisfy 0 < dmin < dmax");
  if (a.norm != "l1" && a.norm != "linf") throw ConfigError("--norm must be l1 or linf");

  SfmParams p;
  p.delta = a.c.delta;
  p.norm_p = a.norm == "l1" ? NormP::L1 : NormP::Linf;
  p.depth = DepthBounds{a.dmin, a.dmax};
  p.reweight = ReweightParams{.q = a.c.q.empty() ? 0.1 : a.c.q.front(), .epsilon = a.c.eps, .K = a.c.iters};

  const auto problem = load_problem(a.cameras, a.observations);
  const auto rep = run_sfm_outlier_removal(problem, method, p);

  out << "# sfm method=" << a.method << " delta=" << p.delta << " norm=" << a.norm << " dmin=" << a.dmin
      << " dmax=" << a.dmax;
  if (method == Method::Alg2) out << " q=" << p.reweight.q << " eps=" << p.reweight.epsilon << " K=" << p.reweight.K;
  out << " seed=" << a.c.seed << "\n";
  out << "# cameras=" << problem.cameras().size() << " points=" << problem.point_ids().size()
      << " observations=" << problem.observations().size() << " kappa=" << rep.kappa
      << " lp_variables=" << rep.num_variables << " lp_solves=" << rep.result.lp_solves << "\n";
  const std::string label = method == Method::Alg2 ? "alg2(K=" + std::to_string(p.reweight.K) + ")" : a.method;
  out << "method,removed,remaining,rmse,runtime_s\n";
  out << label << "," << rep.removed << "," << rep.remaining << "," << std::setprecision(6) << rep.rmse_kept << ","
      << std::chrono::duration<double>(rep.result.runtime).count() << "\n";

  if (!a.c.out.empty()) {
    std::vector<Observation> kept;
    for (auto i : rep.result.inliers) kept.push_back(problem.observations()[static_cast<std::size_t>(i)]);
    open_out(a.c.out).close();
    save_observations(a.c.out, kept);
    out << "# kept observations: " << a.c.out << "\n";
  }
  return kOk;
}

// scene ---------------------------------------------------------------------

struct SceneArgs {
  SceneSpec spec;
  std::string dir;
};

int cmd_scene(const SceneArgs& a, std::ostream& out) {
  if (a.spec.cameras < 2) throw ConfigError("--cams must be at least 2");
  if (a.spec.points < 1) throw ConfigError("--points must be positive");
  if (!(a.spec.corrupt_ratio >= 0.0 && a.spec.corrupt_ratio < 1.0)) throw ConfigError("--ratio must lie in [0, 1)");
  if (!(a.spec.noise_sigma >= 0.0)) throw ConfigError("--noise must be non-negative");
  if (!(a.spec.visibility > 0.0 && a.spec.visibility <= 1.0)) throw ConfigError("--visibility must lie in (0, 1]");
  const auto scene = gen_scene(a.spec);
  std::filesystem::create_directories(a.dir);
  const auto dir = std::filesystem::path(a.dir);
  save_cameras((dir / "cameras.txt").string(), scene.problem.cameras());
  save_observations((dir / "observations.txt").string(), scene.problem.observations());
  auto f = open_out((dir / "corrupted.txt").string());
  for (auto i : scene.corrupted) f << i << "\n";
  out << "# scene cams=" << a.spec.cameras << " points=" << a.spec.points << " ratio=" << a.spec.corrupt_ratio
      << " noise=" << a.spec.noise_sigma << " visibility=" << a.spec.visibility << " seed=" << a.spec.seed << "\n";
  out << "# wrote " << scene.problem.observations().size() << " observations (" << scene.corrupted.size()
      << " corrupted) to " << a.dir << "\n";
  return kOk;
}

// oracle --------------------------------------------------------------------

struct OracleArgs {
  Common c;
  std::vector<std::string> methods{"alg1", "alg2", "l1full", "linf", "ransac"};
  Eigen::Index M = 10;
  Eigen::Index N = 1;
  double ratio = 0.2;
  int repeats = 50;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out, std::ostream& err) {
  check_common(a.c);
  if (a.M > kExactConsensusMaxM)
    throw ConfigError("--M must be at most " + std::to_string(kExactConsensusMaxM) + " for exhaustive enumeration");
  check_ratio(a.ratio);
  if (a.repeats < 1) throw ConfigError("--repeats must be at least 1");
  OracleConfig oc;
  oc.scenario.M = a.M;
  oc.scenario.N = a.N;
  oc.scenario.outlier_ratio = a.ratio;
  try {
    oc.scenario.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  oc.methods = method_specs(a.methods, a.c);
  oc.repeats = a.repeats;
  oc.base_seed = a.c.seed;
  oc.delta = a.c.delta;
  const auto recs = run_oracle(oc);

  out << "# oracle M=" << a.M << " N=" << a.N << " ratio=" << a.ratio << " delta=" << a.c.delta
      << " repeats=" << a.repeats << " methods=" << join(a.methods) << " q=" << (a.c.q.empty() ? "0.1" : join(a.c.q))
      << " eps=" << a.c.eps << " K=" << a.c.iters << " seed=" << a.c.seed << "\n";

  struct Acc {
    std::size_t n = 0, optimal = 0, failures = 0;
    double consensus = 0.0, exact = 0.0, gap = 0.0;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> acc;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    std::string key = r.method;
    if (r.method == "alg2" && oc.methods.size() > 0) {
      const auto& spec = oc.methods[i % oc.methods.size()];
      std::ostringstream k;
      k << "alg2(q=" << spec.reweight.q << ",K=" << spec.reweight.K << ")";
      key = k.str();
    }
    if (!acc.count(key)) order.push_back(key);
    auto& x = acc[key];
    if (!r.error.empty()) {
      ++x.failures;
      ++failures;
      continue;
    }
    ++x.n;
    x.consensus += static_cast<double>(r.consensus_size);
    x.exact += static_cast<double>(r.exact);
    x.gap += static_cast<double>(r.exact) - static_cast<double>(r.consensus_size);
    x.optimal += r.consensus_size == r.exact ? 1 : 0;
  }
  out << "method,instances,mean_consensus,mean_exact,mean_gap,optimal_fraction,failures\n";
  out << std::setprecision(6);
  for (const auto& key : order) {
    const auto& x = acc[key];
    const double n = x.n ? static_cast<double>(x.n) : 1.0;
    out << key << "," << x.n << "," << x.consensus / n << "," << x.exact / n << "," << x.gap / n << ","
        << static_cast<double>(x.optimal) / n << "," << x.failures << "\n";
  }
  if (!a.c.out.empty()) {
    auto f = open_out(a.c.out);
    f << "method,seed,consensus_size,exact,error\n";
    for (const auto& r : recs) f << r.method << "," << r.seed << "," << r.consensus_size << "," << r.exact << "," << r.error << "\n";
  }
  if (failures > 0) {
    err << "error: " << failures << " method runs failed\n";
    return kSolver;
  }
  return kOk;
}

int code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::DataError:
    case ErrorCode::UnknownId:
    case ErrorCode::UnderconstrainedPoint:
      return kData;
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonpositiveDelta:
    case ErrorCode::TooLarge:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MixedResidualArity:
      return kConfig;
    default:
      return kSolver;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Outlier removal by slack-variable linear programming", "outlr"};
  app.require_subcommand(1);
  app.allow_extras(false);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Robust regression benchmark; writes trial CSV");
  add_common(c_synth, synth.c);
  c_synth->add_option("--methods", synth.methods, "Comma-separated methods: alg1,alg2,l1full,linf,ransac")
      ->delimiter(',')
      ->capture_default_str();
  c_synth->add_option("--ratio", synth.ratios, "Outlier ratio(s), comma-separated")->delimiter(',');
  c_synth->add_option("--repeats", synth.repeats, "Trials per ratio")->capture_default_str();
  c_synth->add_option("--M", synth.M, "Measurements per instance")->capture_default_str();
  c_synth->add_option("--N", synth.N, "Model dimension")->capture_default_str();
  c_synth->add_option("--sweep-k", synth.sweep_k, "Iteration sweep for alg2, e.g. 1..10");
  c_synth->add_option("--agg", synth.agg, "Aggregate CSV path (default: <out>_agg.csv)");
  c_synth->add_flag("--no-runtime", synth.no_runtime, "Write runtime as 0 for byte-identical output");

  SfmArgs sfm;
  auto* c_sfm = app.add_subcommand("sfm", "Outlier removal on a known-rotation reconstruction");
  add_common(c_sfm, sfm.c);
  c_sfm->add_option("--method", sfm.method, "alg1, alg2, l1full or linf")->capture_default_str();
  c_sfm->add_option("--cameras", sfm.cameras, "Camera rotation file")->required();
  c_sfm->add_option("--observations", sfm.observations, "Observation file")->required();
  c_sfm->add_option("--dmin", sfm.dmin, "Minimum depth")->capture_default_str();
  c_sfm->add_option("--dmax", sfm.dmax, "Maximum depth")->capture_default_str();
  c_sfm->add_option("--norm", sfm.norm, "Residual norm: l1 or linf")->capture_default_str();

  SceneArgs scene;
  auto* c_scene = app.add_subcommand("scene", "Write a synthetic known-rotation dataset");
  c_scene->add_option("--cams", scene.spec.cameras, "Cameras")->capture_default_str();
  c_scene->add_option("--points", scene.spec.points, "Points")->capture_default_str();
  c_scene->add_option("--ratio", scene.spec.corrupt_ratio, "Fraction of corrupted observations")->capture_default_str();
  c_scene->add_option("--noise", scene.spec.noise_sigma, "Image noise sigma")->capture_default_str();
  c_scene->add_option("--visibility", scene.spec.visibility, "Per-camera visibility probability")->capture_default_str();
  c_scene->add_option("--seed", scene.spec.seed, "Random seed")->capture_default_str();
  c_scene->add_option("--out", scene.dir, "Output directory")->required();

  OracleArgs oracle;
  auto* c_oracle = app.add_subcommand("oracle", "Compare methods with exhaustive maximum consensus");
  add_common(c_oracle, oracle.c);
  c_oracle->add_option("--methods", oracle.methods, "Comma-separated methods")->delimiter(',')->capture_default_str();
  c_oracle->add_option("--M", oracle.M, "Measurements per instance (at most 20)")->capture_default_str();
  c_oracle->add_option("--N", oracle.N, "Model dimension")->capture_default_str();
  c_oracle->add_option("--ratio", oracle.ratio, "Outlier ratio")->capture_default_str();
  c_oracle->add_option("--repeats", oracle.repeats, "Instances")->capture_default_str();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, out, err);
    if (c_sfm->parsed()) return cmd_sfm(sfm, out);
    if (c_scene->parsed()) return cmd_scene(scene, out);
    if (c_oracle->parsed()) return cmd_oracle(oracle, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kConfig;
}

}  // namespace outlr::cli
