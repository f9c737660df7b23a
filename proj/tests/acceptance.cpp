// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed gating criteria.

#include "outlr/consensus.hpp"
#include "outlr/error.hpp"
#include "outlr/lp.hpp"
#include "outlr/residuals.hpp"
#include "outlr/sfm.hpp"
#include "outlr/synthbench.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

using namespace outlr;

namespace {

int g_failed = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail, bool gating = true) {
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << title;
  if (!gating) std::cout << " (non-gating)";
  std::cout << "\n    " << detail << std::endl;
  if (!pass && gating) ++g_failed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const std::vector<MethodSpec>& linear_methods() {
  static const std::vector<MethodSpec> m{{Method::Alg1, {}},
                                         {Method::Alg2, {}},
                                         {Method::L1Full, {}},
                                         {Method::Linf, {}},
                                         {Method::Ransac, {}}};
  return m;
}

// 1 -------------------------------------------------------------------------

void criterion_feasibility() {
  const auto t0 = std::chrono::steady_clock::now();
  const double delta = 0.3, tol = 1e-6;
  const double ratios[] = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  double worst = -1e300;
  std::string worst_where;
  int runs = 0, errors = 0;
  for (int inst = 0; inst < 200; ++inst) {
    RegressionScenario sc;
    sc.M = 100;
    sc.N = 8;
    sc.outlier_ratio = ratios[inst % 7];
    sc.seed = derive_seed(101, 0, inst);
    const auto data = gen_regression(sc);
    const auto sys = build_linear_system(data.measurements, delta);
    for (const auto& spec : linear_methods()) {
      try {
        const auto res = run_linear_method(spec, data.measurements, sys, delta, 0.99, sc.seed);
        for (auto i : res.inliers) {
          const auto& m = data.measurements[static_cast<std::size_t>(i)];
          const double excess = std::abs(m.a().dot(res.x) - m.y()) - delta;
          if (excess > worst) {
            worst = excess;
            worst_where = std::string(to_string(spec.method)) + " regression #" + std::to_string(inst);
          }
        }
        ++runs;
      } catch (const Error& e) {
        ++errors;
        std::cout << "    regression #" << inst << " " << to_string(spec.method) << ": " << e.what() << "\n";
      }
    }
  }
  const SfmParams base{.delta = 3e-3};
  for (int scene_i = 0; scene_i < 20; ++scene_i) {
    const auto scene = gen_scene(SceneSpec{.cameras = 5, .points = 200, .corrupt_ratio = 0.1, .noise_sigma = 1e-3,
                                           .seed = derive_seed(202, 0, scene_i)});
    const auto res = assemble_residuals(scene.problem, NormP::L1, std::nullopt);
    for (auto m : {Method::Alg1, Method::Alg2, Method::L1Full, Method::Linf}) {
      try {
        const auto rep = run_sfm_outlier_removal(scene.problem, m, base);
        for (auto i : rep.result.inliers) {
          const double excess = eval_residual(res[static_cast<std::size_t>(i)], rep.result.x) - base.delta;
          if (excess > worst) {
            worst = excess;
            worst_where = std::string(to_string(m)) + " scene #" + std::to_string(scene_i);
          }
        }
        ++runs;
      } catch (const Error& e) {
        ++errors;
        std::cout << "    scene #" << scene_i << " " << to_string(m) << ": " << e.what() << "\n";
      }
    }
  }
  const bool pass = errors == 0 && worst <= tol;
  std::ostringstream d;
  d << runs << " runs, " << errors << " errors; worst kept residual - delta = " << worst << " (" << worst_where
    << "), limit " << tol << "; " << fmt("%.1f s", seconds_since(t0));
  report(1, pass, "kept sets feasible at returned x", d.str());
}

// 2 -------------------------------------------------------------------------

void criterion_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const double delta = 0.3;
  std::vector<MethodSpec> methods = linear_methods();
  methods[1].reweight.K = 5;
  std::map<std::string, int> optimal, exceeded, errors;
  int instances = 0;
  for (int inst = 0; inst < 200; ++inst) {
    OracleConfig oc;
    oc.scenario.M = 8 + inst % 5;  // 8..12
    oc.scenario.N = 1 + (inst / 5) % 2;
    oc.scenario.outlier_ratio = 0.25;
    oc.methods = methods;
    oc.base_seed = derive_seed(303, static_cast<std::size_t>(inst), 0);
    oc.delta = delta;
    for (const auto& r : run_oracle(oc)) {
      if (!r.error.empty()) {
        ++errors[r.method];
        continue;
      }
      // A consensus larger than the optimum is only possible through an infeasible kept set.
      if (r.consensus_size > r.exact || r.max_kept_violation > 1e-6) ++exceeded[r.method];
      if (r.consensus_size == r.exact) ++optimal[r.method];
    }
    ++instances;
  }
  bool bounded = true;
  int total_errors = 0;
  for (const auto& m : methods) {
    bounded = bounded && exceeded[to_string(m.method)] == 0;
    total_errors += errors[to_string(m.method)];
  }
  const double f1 = optimal["alg1"] / static_cast<double>(instances);
  const double f2 = optimal["alg2"] / static_cast<double>(instances);
  const bool pass = bounded && total_errors == 0 && f1 >= 0.9 && f2 >= 0.9;
  std::ostringstream d;
  d << instances << " instances (M 8..12, N 1..2, 25% outliers); every method <= exact: " << (bounded ? "yes" : "no")
    << "; errors " << total_errors << "; optimal fraction alg1 " << f1 << ", alg2(K=5) " << f2
    << " (need >= 0.9 each); l1full " << optimal["l1full"] / static_cast<double>(instances) << ", linf "
    << optimal["linf"] / static_cast<double>(instances) << ", ransac "
    << optimal["ransac"] / static_cast<double>(instances) << "; " << fmt("%.1f s", seconds_since(t0));
  report(2, pass, "consensus bounded by exact enumeration; l1 methods optimal on >= 90%", d.str());
}

// 3 -------------------------------------------------------------------------

void criterion_k_curve() {
  const auto t0 = std::chrono::steady_clock::now();
  KSweepConfig kc;
  kc.scenario.outlier_ratio = 0.5;
  kc.qs = {0.1, 0.2, 0.5};
  kc.k_min = 1;
  kc.k_max = 15;
  kc.repeats = 30;
  kc.base_seed = 404;
  const auto rows = aggregate(run_k_sweep(kc));
  bool pass = true;
  std::ostringstream d;
  for (double q : kc.qs) {
    std::map<int, double> curve;
    std::size_t failures = 0;
    for (const auto& r : rows)
      if (r.q && *r.q == q) {
        curve[*r.K] = r.consensus_mean;
        failures += r.failures;
      }
    double worst_drop = 0.0;
    for (int k = kc.k_min; k < kc.k_max; ++k) worst_drop = std::max(worst_drop, curve[k] - curve[k + 1]);
    const double drift = std::abs(curve[kc.k_max] - curve[10]);
    const bool ok = failures == 0 && worst_drop <= 1.0 && drift <= 2.0;
    pass = pass && ok;
    d << "q=" << q << ": K=1 " << curve[1] << ", K=5 " << curve[5] << ", K=10 " << curve[10] << ", K=15 "
      << curve[15] << "; largest step decrease " << worst_drop << "; |K15-K10| " << drift << "\n    ";
  }
  d << kc.repeats << " repeats, M=500 N=8; " << fmt("%.1f s", seconds_since(t0));
  report(3, pass, "alg2 consensus non-degrading in K and stable beyond K=10", d.str());
}

// 4 -------------------------------------------------------------------------

void criterion_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) {
    RegressionScenario sc;
    sc.outlier_ratio = r;
    cfg.grid.push_back(sc);
  }
  cfg.methods = {{Method::Alg1, {}}, {Method::Alg2, ReweightParams{.K = 5}}, {Method::L1Full, {}}, {Method::Ransac, {}}};
  cfg.repeats = 100;
  cfg.base_seed = 505;
  const auto rows = aggregate(run_sweep(cfg));
  std::map<std::pair<double, std::string>, double> mean_of;
  std::size_t failures = 0;
  for (const auto& r : rows) {
    mean_of[{r.outlier_ratio, r.method}] = r.consensus_mean;
    failures += r.failures;
  }
  bool pass = failures == 0;
  std::ostringstream d;
  d << "ratio: alg2(K=5) / alg1 / l1full / ransac mean consensus\n    ";
  for (const auto& sc : cfg.grid) {
    const double r = sc.outlier_ratio;
    const double a1 = mean_of[{r, "alg1"}], a2 = mean_of[{r, "alg2"}], lf = mean_of[{r, "l1full"}],
                 rs = mean_of[{r, "ransac"}];
    bool ok = a2 >= a1 && std::abs(a1 - lf) <= 1.0;
    if (r >= 0.4 - 1e-12) ok = ok && rs < std::min({a1, a2, lf});
    pass = pass && ok;
    d << r << ": " << a2 << " / " << a1 << " / " << lf << " / " << rs << (ok ? "" : "  <- violated") << "\n    ";
  }
  d << "failures " << failures << "; " << fmt("%.1f s", seconds_since(t0));
  report(4, pass, "alg2 >= alg1 ~ l1full, ransac below at ratio >= 0.4", d.str());
}

// 5 -------------------------------------------------------------------------

void criterion_speedup() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> t_alg1, t_full, ratios;
  bool counts_exact = true;
  std::size_t min_obs = SIZE_MAX;
  int errors = 0;
  Eigen::Index shown_alg1 = 0, shown_full = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const auto scene = gen_scene(SceneSpec{.cameras = 5, .points = 620, .corrupt_ratio = 0.1, .noise_sigma = 1e-3,
                                           .seed = derive_seed(606, 0, seed)});
    const auto M = static_cast<Eigen::Index>(scene.problem.observations().size());
    const Eigen::Index N = scene.problem.dim();
    min_obs = std::min(min_obs, static_cast<std::size_t>(M));
    const SfmParams p{.delta = 3e-3};
    try {
      const auto r1 = run_sfm_outlier_removal(scene.problem, Method::Alg1, p);
      const auto rf = run_sfm_outlier_removal(scene.problem, Method::L1Full, p);
      counts_exact = counts_exact && r1.kappa == 6 && r1.num_variables == N + M && rf.num_variables == N + 6 * M;
      shown_alg1 = r1.num_variables;
      shown_full = rf.num_variables;
      t_alg1.push_back(std::chrono::duration<double>(r1.result.runtime).count());
      t_full.push_back(std::chrono::duration<double>(rf.result.runtime).count());
      ratios.push_back(t_alg1.back() / t_full.back());
    } catch (const Error& e) {
      ++errors;
      std::cout << "    seed " << seed << ": " << e.what() << "\n";
    }
  }
  const double m1 = median(t_alg1), mf = median(t_full);
  const double ratio = m1 / mf;
  const bool pass = errors == 0 && min_obs >= 2000 && counts_exact && ratio <= 0.7;
  std::ostringstream d;
  d << "10 scenes, >= " << min_obs << " observations; unknowns alg1 " << shown_alg1 << " vs l1full " << shown_full
    << " (exact N+M vs N+6M: " << (counts_exact ? "yes" : "no") << "); median runtime alg1 " << fmt("%.3f s", m1)
    << ", l1full " << fmt("%.3f s", mf) << ", ratio " << fmt("%.3f", ratio) << " (limit 0.7; speedup "
    << fmt("%.2fx", 1.0 / ratio) << ", 3x informational: " << (ratio <= 1.0 / 3.0 ? "reached" : "not reached")
    << "); " << fmt("%.1f s", seconds_since(t0));
  report(5, pass, "shared-slack LP faster than per-row slack LP", d.str());
}

// 6 -------------------------------------------------------------------------

void criterion_sfm_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const double sigma = 1e-3;
  const SfmParams p{.delta = 3.0 * sigma};
  std::vector<double> recall2, recall1, removed1, removed2;
  int not_more = 0, errors = 0;
  const int seeds = 50;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto scene = gen_scene(SceneSpec{.cameras = 5, .points = 200, .corrupt_ratio = 0.1, .noise_sigma = sigma,
                                           .seed = derive_seed(707, 0, seed)});
    const auto M = scene.problem.observations().size();
    const double n_in = static_cast<double>(M - scene.corrupted.size());
    std::vector<bool> bad(M, false);
    for (auto i : scene.corrupted) bad[static_cast<std::size_t>(i)] = true;
    auto recall = [&](const SfmReport& r) {
      double kept = 0.0;
      for (auto i : r.result.inliers) kept += bad[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
      return kept / n_in;
    };
    try {
      const auto r1 = run_sfm_outlier_removal(scene.problem, Method::Alg1, p);
      const auto r2 = run_sfm_outlier_removal(scene.problem, Method::Alg2, p);
      recall1.push_back(recall(r1));
      recall2.push_back(recall(r2));
      removed1.push_back(static_cast<double>(r1.removed));
      removed2.push_back(static_cast<double>(r2.removed));
      not_more += r2.removed <= r1.removed ? 1 : 0;
    } catch (const Error& e) {
      ++errors;
      std::cout << "    seed " << seed << ": " << e.what() << "\n";
    }
  }
  const double frac = not_more / static_cast<double>(seeds);
  const bool pass = errors == 0 && mean(recall2) >= 0.95 && frac >= 0.6;
  std::ostringstream d;
  d << seeds << " scenes (5 cameras, 200 points, 10% corrupted, delta = 3 sigma); mean recall alg2(K=2) "
    << mean(recall2) << " (need >= 0.95), alg1 " << mean(recall1) << "; mean removed alg2 " << mean(removed2)
    << ", alg1 " << mean(removed1) << "; fraction of scenes where alg2 removes <= alg1 " << frac << " (need >= 0.6); errors "
    << errors << "; " << fmt("%.1f s", seconds_since(t0));
  report(6, pass, "synthetic SfM recovery and removal ordering", d.str());
}

// 7 -------------------------------------------------------------------------

// Expects <dir>/<name>/{cameras.txt, observations.txt, focal.txt}, where
// focal.txt holds the focal length in pixels used to calibrate the images.
void criterion_real_data() {
  const char* dir = std::getenv("OUTLR_REAL_DATA");
  const std::pair<const char*, double> refs[] = {{"house", 0.60}, {"cathedral", 0.81}, {"college", 0.52}};
  if (!dir) {
    std::cout << "criterion 7: SKIP  real-dataset RMSE reference (non-gating)\n"
              << "    OUTLR_REAL_DATA not set; no converted datasets available" << std::endl;
    return;
  }
  bool pass = true;
  int found = 0;
  std::ostringstream d;
  for (const auto& [name, ref] : refs) {
    const auto base = std::filesystem::path(dir) / name;
    if (!std::filesystem::exists(base / "focal.txt")) continue;
    ++found;
    try {
      double focal = 0.0;
      std::ifstream(base / "focal.txt") >> focal;
      const auto problem = load_problem((base / "cameras.txt").string(), (base / "observations.txt").string());
      const SfmParams p{.delta = 5.0 / focal};
      const auto rep = run_sfm_outlier_removal(problem, Method::Alg1, p);
      const double px = rep.rmse_kept * focal;
      const bool ok = std::abs(px - ref) <= 0.15 * ref;
      pass = pass && ok;
      d << name << ": removed " << rep.removed << ", RMSE " << px << " px (reference " << ref << ")\n    ";
    } catch (const Error& e) {
      pass = false;
      d << name << ": " << e.what() << "\n    ";
    }
  }
  if (found == 0) {
    std::cout << "criterion 7: SKIP  real-dataset RMSE reference (non-gating)\n    no datasets under " << dir
              << std::endl;
    return;
  }
  report(7, pass, "real-dataset RMSE within 15% of reference", d.str(), false);
}

// 8 -------------------------------------------------------------------------

std::optional<double> vertex_min(const Eigen::MatrixXd& G, const Vector& h, const Vector& c) {
  const int m = static_cast<int>(G.rows()), n = static_cast<int>(G.cols());
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
      if (!best || c.dot(x) < *best) best = c.dot(x);
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

void criterion_lp() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int solved = 0, non_optimal = 0, disagree = 0;
  double worst_gap = 0.0, worst_cs = 0.0, worst_obj = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 3;
    const int m = 2 * n + std::uniform_int_distribution<int>(0, 8 - 2 * n)(rng);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, n);
    Vector h(m), x0(n), c(n);
    for (int j = 0; j < n; ++j) x0[j] = 0.5 * unif(rng);
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
    for (int j = 0; j < n; ++j) c[j] = unif(rng);
    const auto lp = LinearProgram::make(c, G.sparseView(), h);
    const auto sol = solve_lp(lp);
    if (sol.status != LPStatus::Optimal) {
      ++non_optimal;
      continue;
    }
    ++solved;
    worst_gap = std::max(worst_gap, sol.relative_gap());
    const Vector slack = h - G * sol.primal;
    worst_cs = std::max(worst_cs, sol.dual.dot(slack));
    const auto ref = vertex_min(G, h, c);
    const double diff = ref ? std::abs(*ref - sol.primal_objective) : 1e300;
    worst_obj = std::max(worst_obj, diff);
    disagree += diff <= 1e-6 ? 0 : 1;
  }
  const bool pass = non_optimal == 0 && worst_gap <= 1e-8 && worst_cs <= 1e-6 && disagree == 0;
  std::ostringstream d;
  d << solved << " random LPs (n <= 3, m <= 8); non-optimal " << non_optimal << "; worst relative gap " << worst_gap
    << " (limit 1e-8); worst complementarity " << worst_cs << " (limit 1e-6); worst |objective - vertex optimum| "
    << worst_obj << ", disagreements " << disagree << "; " << fmt("%.1f s", seconds_since(t0));
  report(8, pass, "LP certificates and vertex agreement", d.str());
}

}  // namespace

int main(int argc, char** argv) {
  // Optional list of criterion ids to run, e.g. "outlr_acceptance 2 5".
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  const std::vector<std::pair<int, std::function<void()>>> all{
      {1, criterion_feasibility}, {2, criterion_oracle},       {3, criterion_k_curve}, {4, criterion_ordering},
      {5, criterion_speedup},     {6, criterion_sfm_recovery}, {7, criterion_real_data}, {8, criterion_lp}};
  for (const auto& [id, fn] : all) {
    if (!want(id)) continue;
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, "aborted", e.what(), id != 7);
    }
  }
  std::cout << (g_failed == 0 ? "all gating criteria passed" : std::to_string(g_failed) + " gating criteria failed")
            << std::endl;
  return g_failed;
}
