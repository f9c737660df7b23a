#include "outlr/consensus.hpp"
#include "outlr/error.hpp"
#include "outlr/sfm.hpp"
#include "outlr/synthbench.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace outlr;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<LinearMeasurement> to_measurements(const RowMatrix& A, const Vector& y) {
  if (A.rows() != y.size())
    throw Error(ErrorCode::DimensionMismatch, "A has " + std::to_string(A.rows()) + " rows but y has " +
                                                  std::to_string(y.size()) + " entries");
  std::vector<LinearMeasurement> out;
  out.reserve(static_cast<std::size_t>(A.rows()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) out.emplace_back(A.row(i).transpose(), y(i));
  return out;
}

MethodSpec method_spec(const std::string& name, double q, double epsilon, int K) {
  MethodSpec spec{parse_method(name), {}};
  spec.reweight.q = q;
  spec.reweight.epsilon = epsilon;
  spec.reweight.K = K;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Outlier removal by slack minimization";

  static py::exception<Error> exc(m, "OutlrError", PyExc_RuntimeError);
  // Messages start with the error code name, e.g. "InvalidArgument: ...".
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(exc, e.what());
    }
  });

  py::class_<ConsensusResult>(m, "ConsensusResult")
      .def_readonly("x", &ConsensusResult::x)
      .def_readonly("s", &ConsensusResult::s)
      .def_readonly("inliers", &ConsensusResult::inliers)
      .def_readonly("removed", &ConsensusResult::removed)
      .def_readonly("objective", &ConsensusResult::objective)
      .def_readonly("iterations", &ConsensusResult::iterations)
      .def_readonly("lp_solves", &ConsensusResult::lp_solves)
      .def_readonly("lp_variables", &ConsensusResult::lp_variables)
      .def_property_readonly("runtime", [](const ConsensusResult& r) { return r.runtime.count(); })
      .def_property_readonly("consensus_size", &ConsensusResult::consensus_size)
      .def("__repr__", [](const ConsensusResult& r) {
        return "<ConsensusResult kept=" + std::to_string(r.inliers.size()) +
               " removed=" + std::to_string(r.removed.size()) + ">";
      });

  m.def(
      "fit_linear",
      [](const RowMatrix& A, const Vector& y, double delta, const std::string& method, double q, double epsilon, int K,
         double rho, std::uint64_t seed) {
        const auto meas = to_measurements(A, y);
        const auto sys = build_linear_system(meas, delta);
        return run_linear_method(method_spec(method, q, epsilon, K), meas, sys, delta, rho, seed);
      },
      py::arg("A"), py::arg("y"), py::arg("delta"), py::arg("method") = "alg1", py::arg("q") = 0.1,
      py::arg("epsilon") = 1e-3, py::arg("K") = 2, py::arg("rho") = 0.99, py::arg("seed") = 0,
      py::call_guard<py::gil_scoped_release>(),
      "Robust fit of y ~ A x with |y - A x| <= delta on the kept rows.");

  m.def(
      "exact_consensus",
      [](const RowMatrix& A, const Vector& y, double delta) { return exact_consensus(to_measurements(A, y), delta); },
      py::arg("A"), py::arg("y"), py::arg("delta"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "gen_regression",
      [](Eigen::Index M, Eigen::Index N, double outlier_ratio, std::uint64_t seed, double inlier_sigma,
         double outlier_sigma) {
        RegressionScenario sc;
        sc.M = M;
        sc.N = N;
        sc.outlier_ratio = outlier_ratio;
        sc.seed = seed;
        sc.inlier_sigma = inlier_sigma;
        sc.outlier_sigma = outlier_sigma;
        const auto d = gen_regression(sc);
        RowMatrix A(M, N);
        Vector y(M);
        for (Eigen::Index i = 0; i < M; ++i) {
          A.row(i) = d.measurements[static_cast<std::size_t>(i)].a().transpose();
          y(i) = d.measurements[static_cast<std::size_t>(i)].y();
        }
        return py::make_tuple(A, y, d.x_true, d.outliers);
      },
      py::arg("M") = 500, py::arg("N") = 8, py::arg("outlier_ratio") = 0.0, py::arg("seed") = 0,
      py::arg("inlier_sigma") = 0.1, py::arg("outlier_sigma") = 1.0,
      "Returns (A, y, x_true, outlier_indices).");

  py::class_<SfmReport>(m, "SfmReport")
      .def_readonly("result", &SfmReport::result)
      .def_readonly("removed", &SfmReport::removed)
      .def_readonly("remaining", &SfmReport::remaining)
      .def_readonly("rmse", &SfmReport::rmse_kept)
      .def_readonly("num_variables", &SfmReport::num_variables);

  m.def(
      "sfm_remove_outliers",
      [](const std::string& cameras, const std::string& observations, double delta, const std::string& method,
         const std::string& norm, double d_min, double d_max, int K) {
        if (norm != "l1" && norm != "linf") throw Error(ErrorCode::InvalidArgument, "norm must be l1 or linf");
        const auto problem = load_problem(cameras, observations);
        SfmParams p;
        p.delta = delta;
        p.norm_p = norm == "l1" ? NormP::L1 : NormP::Linf;
        p.depth = DepthBounds{d_min, d_max};
        p.reweight.K = K;
        return run_sfm_outlier_removal(problem, parse_method(method), p);
      },
      py::arg("cameras"), py::arg("observations"), py::arg("delta"), py::arg("method") = "alg1",
      py::arg("norm") = "l1", py::arg("d_min") = 0.01, py::arg("d_max") = 1e4, py::arg("K") = 2,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "write_scene",
      [](const std::string& directory, int cameras, int points, double corrupt_ratio, double noise_sigma,
         std::uint64_t seed) {
        SceneSpec spec;
        spec.cameras = cameras;
        spec.points = points;
        spec.corrupt_ratio = corrupt_ratio;
        spec.noise_sigma = noise_sigma;
        spec.seed = seed;
        const auto scene = gen_scene(spec);
        save_cameras(directory + "/cameras.txt", scene.problem.cameras());
        save_observations(directory + "/observations.txt", scene.problem.observations());
        return scene.corrupted;
      },
      py::arg("directory"), py::arg("cameras") = 5, py::arg("points") = 200, py::arg("corrupt_ratio") = 0.1,
      py::arg("noise_sigma") = 1e-3, py::arg("seed") = 0,
      "Writes cameras.txt and observations.txt; returns the corrupted observation indices.");
}
