#include "outlr/sfm.hpp"

#include "outlr/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <set>

namespace outlr {

KnownRotationProblem::KnownRotationProblem(std::vector<Camera> cameras, std::vector<Observation> observations)
    : cameras_(std::move(cameras)), observations_(std::move(observations)) {
  if (cameras_.size() < 2) throw Error(ErrorCode::InvalidArgument, "at least two cameras are required");
  for (std::size_t k = 0; k < cameras_.size(); ++k) {
    const auto& cam = cameras_[k];
    const Eigen::Matrix3d& R = cam.rotation;
    if (!R.allFinite() || (R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        std::abs(R.determinant() - 1.0) > 1e-6)
      throw Error(ErrorCode::InvalidArgument, "camera " + std::to_string(cam.id) + " rotation is not orthonormal");
    if (!camera_index_.emplace(cam.id, k).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate camera id " + std::to_string(cam.id));
  }

  std::map<int, std::set<int>> seen_by;
  for (const auto& obs : observations_) {
    if (!camera_index_.count(obs.camera_id))
      throw Error(ErrorCode::UnknownId, "observation of point " + std::to_string(obs.point_id) +
                                            " references unknown camera " + std::to_string(obs.camera_id));
    if (!std::isfinite(obs.z1) || !std::isfinite(obs.z2))
      throw Error(ErrorCode::InvalidArgument, "non-finite image coordinate for point " + std::to_string(obs.point_id));
    seen_by[obs.point_id].insert(obs.camera_id);
  }
  for (const auto& [pid, cams] : seen_by) {
    if (cams.size() < 2)
      throw Error(ErrorCode::UnderconstrainedPoint,
                  "point " + std::to_string(pid) + " is observed by " + std::to_string(cams.size()) + " camera(s)");
    point_offset_.emplace(pid, 3 * static_cast<Eigen::Index>(point_ids_.size()));
    point_ids_.push_back(pid);
  }
  Eigen::Index offset = 3 * static_cast<Eigen::Index>(point_ids_.size());
  for (std::size_t k = 1; k < cameras_.size(); ++k) {
    translation_offset_.emplace(cameras_[k].id, offset);
    offset += 3;
  }
  dim_ = offset;
}

Eigen::Index KnownRotationProblem::point_offset(int point_id) const {
  auto it = point_offset_.find(point_id);
  if (it == point_offset_.end()) throw Error(ErrorCode::UnknownId, "unknown point " + std::to_string(point_id));
  return it->second;
}

std::optional<Eigen::Index> KnownRotationProblem::translation_offset(int camera_id) const {
  if (!camera_index_.count(camera_id)) throw Error(ErrorCode::UnknownId, "unknown camera " + std::to_string(camera_id));
  auto it = translation_offset_.find(camera_id);
  if (it == translation_offset_.end()) return std::nullopt;
  return it->second;
}

const Camera& KnownRotationProblem::camera(int camera_id) const {
  auto it = camera_index_.find(camera_id);
  if (it == camera_index_.end()) throw Error(ErrorCode::UnknownId, "unknown camera " + std::to_string(camera_id));
  return cameras_[it->second];
}

Eigen::Vector3d KnownRotationProblem::point(const Vector& x, int point_id) const {
  return x.segment<3>(point_offset(point_id));
}

Eigen::Vector3d KnownRotationProblem::translation(const Vector& x, int camera_id) const {
  const auto off = translation_offset(camera_id);
  return off ? Eigen::Vector3d(x.segment<3>(*off)) : Eigen::Vector3d::Zero();
}

Vector KnownRotationProblem::pack(const std::map<int, Eigen::Vector3d>& points,
                                  const std::map<int, Eigen::Vector3d>& translations) const {
  Vector x = Vector::Zero(dim_);
  for (int pid : point_ids_) {
    auto it = points.find(pid);
    if (it == points.end()) throw Error(ErrorCode::UnknownId, "no coordinates for point " + std::to_string(pid));
    x.segment<3>(point_offset_.at(pid)) = it->second;
  }
  for (const auto& cam : cameras_) {
    auto it = translations.find(cam.id);
    const Eigen::Vector3d t = it == translations.end() ? Eigen::Vector3d::Zero() : it->second;
    if (cam.id == anchor_camera_id()) {
      if (!t.isZero(0.0)) throw Error(ErrorCode::InvalidArgument, "anchor camera translation must be zero");
      continue;
    }
    x.segment<3>(translation_offset_.at(cam.id)) = t;
  }
  return x;
}

std::vector<QuasiConvexResidual> assemble_residuals(const KnownRotationProblem& problem, NormP norm_p,
                                                    std::optional<DepthBounds> depth_bounds) {
  const auto N = problem.dim();
  std::vector<QuasiConvexResidual> out;
  out.reserve(problem.observations().size());
  for (const auto& obs : problem.observations()) {
    const Eigen::Matrix3d& R = problem.camera(obs.camera_id).rotation;
    const Eigen::Index p = problem.point_offset(obs.point_id);
    const auto t = problem.translation_offset(obs.camera_id);
    const Eigen::RowVector3d du = obs.z1 * R.row(2) - R.row(0);
    const Eigen::RowVector3d dv = obs.z2 * R.row(2) - R.row(1);

    QuasiConvexResidual r;
    r.norm_p = norm_p;
    r.depth_bounds = depth_bounds;
    r.u.resize(N);
    r.v.resize(N);
    r.w.resize(N);
    // Coefficients are inserted in ascending index order: points precede translations.
    for (int k = 0; k < 3; ++k) {
      r.u.insertBack(p + k) = du[k];
      r.v.insertBack(p + k) = dv[k];
      r.w.insertBack(p + k) = R(2, k);
    }
    if (t) {
      r.u.insertBack(*t + 0) = -1.0;
      r.u.insertBack(*t + 2) = obs.z1;
      r.v.insertBack(*t + 1) = -1.0;
      r.v.insertBack(*t + 2) = obs.z2;
      r.w.insertBack(*t + 2) = 1.0;
    }
    out.push_back(std::move(r));
  }
  return out;
}

double reprojection_sq_error(const KnownRotationProblem& problem, const Observation& obs, const Vector& x) {
  const Eigen::Matrix3d& R = problem.camera(obs.camera_id).rotation;
  const Eigen::Vector3d cam = R * problem.point(x, obs.point_id) + problem.translation(x, obs.camera_id);
  if (!(cam.z() > 0.0))
    throw Error(ErrorCode::NonpositiveDepth, "point " + std::to_string(obs.point_id) + " has depth " +
                                                 std::to_string(cam.z()) + " in camera " +
                                                 std::to_string(obs.camera_id));
  const double e1 = obs.z1 - cam.x() / cam.z();
  const double e2 = obs.z2 - cam.y() / cam.z();
  return e1 * e1 + e2 * e2;
}

double compute_rmse(const KnownRotationProblem& problem, const Vector& x) {
  double sum = 0.0;
  for (const auto& o : problem.observations()) sum += reprojection_sq_error(problem, o, x);
  return std::sqrt(sum / static_cast<double>(problem.observations().size()));
}

double compute_rmse(const KnownRotationProblem& problem, const Vector& x,
                    const std::vector<Eigen::Index>& observation_indices) {
  if (observation_indices.empty()) return 0.0;
  double sum = 0.0;
  for (auto i : observation_indices)
    sum += reprojection_sq_error(problem, problem.observations().at(static_cast<std::size_t>(i)), x);
  return std::sqrt(sum / static_cast<double>(observation_indices.size()));
}

const char* to_string(Method m) {
  switch (m) {
    case Method::Alg1: return "alg1";
    case Method::Alg2: return "alg2";
    case Method::L1Full: return "l1full";
    case Method::Linf: return "linf";
    case Method::Ransac: return "ransac";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::Alg1, Method::Alg2, Method::L1Full, Method::Linf, Method::Ransac})
    if (name == to_string(m)) return m;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "' (expected alg1, alg2, l1full, linf, ransac)");
}

SfmReport run_sfm_outlier_removal(const KnownRotationProblem& problem, Method method, const SfmParams& params) {
  const double d_min = params.depth.d_min;
  if (!(d_min > 0.0 && params.depth.d_max > d_min))
    throw Error(ErrorCode::InvalidArgument, "depth bounds must satisfy 0 < d_min < d_max");
  // The assembled residuals have no constant terms, so the problem is
  // homogeneous in x. Solving with the depth floor at 1 keeps slacks in
  // residual units; x is scaled back afterwards.
  const auto residuals =
      assemble_residuals(problem, params.norm_p, DepthBounds{1.0, params.depth.d_max / d_min});
  const ConstraintSystem sys = build_quasiconvex_system(residuals, params.delta);
  SfmReport report;
  report.kappa = sys.kappa;
  switch (method) {
    case Method::Alg1: report.result = solve_alg1(sys, params.options); break;
    case Method::Alg2: report.result = solve_alg2(sys, params.reweight, params.options); break;
    case Method::L1Full: report.result = solve_l1_full(sys, params.options); break;
    case Method::Linf: report.result = solve_linf_iterative(sys, params.options); break;
    case Method::Ransac:
      throw Error(ErrorCode::InvalidArgument, "RANSAC applies to linear residuals only");
  }
  report.result.x *= d_min;
  for (auto& h : report.result.history) h.x *= d_min;
  report.num_variables = report.result.lp_variables;
  report.removed = report.result.removed.size();
  report.remaining = report.result.inliers.size();
  report.rmse_kept = compute_rmse(problem, report.result.x, report.result.inliers);
  return report;
}

}  // namespace outlr
