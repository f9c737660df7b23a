#pragma once

#include "outlr/consensus.hpp"
#include "outlr/residuals.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace outlr {

struct Camera {
  int id = 0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // rows r1, r2, r3
};

// Calibrated image coordinates of one point seen by one camera.
struct Observation {
  int point_id = 0;
  int camera_id = 0;
  double z1 = 0.0;
  double z2 = 0.0;
};

// Multiview reconstruction with fixed rotations. Unknowns are the 3D points
// followed by the translations of every camera except the anchor, whose
// translation is pinned to zero:
//   x = [p_0, p_1, ..., t_1, t_2, ...],  dim = 3 #points + 3 (#cameras - 1).
class KnownRotationProblem {
 public:
  // The first camera is the anchor. Points are ordered by ascending id.
  // Throws Error(InvalidArgument) for a non-rotation matrix or duplicate ids,
  // Error(UnknownId) for observations of unknown cameras, and
  // Error(UnderconstrainedPoint) when a point is seen by fewer than 2 cameras.
  KnownRotationProblem(std::vector<Camera> cameras, std::vector<Observation> observations);

  const std::vector<Camera>& cameras() const { return cameras_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const std::vector<int>& point_ids() const { return point_ids_; }
  int anchor_camera_id() const { return cameras_.front().id; }
  Eigen::Index dim() const { return dim_; }

  Eigen::Index point_offset(int point_id) const;
  // Empty for the anchor camera.
  std::optional<Eigen::Index> translation_offset(int camera_id) const;
  const Camera& camera(int camera_id) const;

  Eigen::Vector3d point(const Vector& x, int point_id) const;
  Eigen::Vector3d translation(const Vector& x, int camera_id) const;

  // Packs points and translations into x; the anchor translation must be zero.
  Vector pack(const std::map<int, Eigen::Vector3d>& points, const std::map<int, Eigen::Vector3d>& translations) const;

 private:
  std::vector<Camera> cameras_;
  std::vector<Observation> observations_;
  std::vector<int> point_ids_;
  std::map<int, std::size_t> camera_index_;
  std::map<int, Eigen::Index> point_offset_;
  std::map<int, Eigen::Index> translation_offset_;
  Eigen::Index dim_ = 0;
};

// One residual per observation. Clearing the projective denominator gives
//   u = z1 r3 - r1 (point), (-1, 0, z1) (translation)
//   v = z2 r3 - r2 (point), (0, -1, z2) (translation)
//   w = r3 (point), (0, 0, 1) (translation)
// with all constant terms zero.
std::vector<QuasiConvexResidual> assemble_residuals(const KnownRotationProblem& problem, NormP norm_p,
                                                    std::optional<DepthBounds> depth_bounds);

// Squared Euclidean reprojection error of one observation, evaluated from the
// projection (r1 z + t1, r2 z + t2) / (r3 z + t3).
// Throws Error(NonpositiveDepth).
double reprojection_sq_error(const KnownRotationProblem& problem, const Observation& obs, const Vector& x);

// sqrt(mean squared reprojection error) over all observations, or over the
// selected ones (0 for an empty selection).
double compute_rmse(const KnownRotationProblem& problem, const Vector& x);
double compute_rmse(const KnownRotationProblem& problem, const Vector& x,
                    const std::vector<Eigen::Index>& observation_indices);

enum class Method { Alg1, Alg2, L1Full, Linf, Ransac };

const char* to_string(Method m);
// Accepts "alg1", "alg2", "l1full", "linf", "ransac". Throws Error(InvalidArgument).
Method parse_method(const std::string& name);

struct SfmParams {
  double delta = 0.0;
  NormP norm_p = NormP::L1;
  DepthBounds depth{0.01, 1e4};
  ReweightParams reweight{};
  ConsensusOptions options{};
};

struct SfmReport {
  ConsensusResult result;
  std::size_t removed = 0;
  std::size_t remaining = 0;
  double rmse_kept = 0.0;  // over kept observations at the returned x
  int kappa = 0;
  Eigen::Index num_variables = 0;
};

// Builds the depth-bounded system (kappa = 6), runs the chosen solver and
// reports removal counts and the RMSE of the kept observations. The LP is
// solved with depths rescaled so that d_min = 1; result.x is returned in the
// original scale while result.s stays in the rescaled one, where a unit of
// slack is at most a unit of residual.
// Method::Ransac is rejected with Error(InvalidArgument).
SfmReport run_sfm_outlier_removal(const KnownRotationProblem& problem, Method method, const SfmParams& params);

// Dataset text format. Blank lines and '#' comments are ignored.
//   cameras:       camera_id r11 r12 r13 r21 r22 r23 r31 r32 r33
//   observations:  point_id camera_id z1 z2
// Parse errors throw Error(DataError) naming the file and line.
std::vector<Camera> load_cameras(const std::string& path);
std::vector<Observation> load_observations(const std::string& path);
KnownRotationProblem load_problem(const std::string& cameras_path, const std::string& observations_path);
void save_cameras(const std::string& path, const std::vector<Camera>& cameras);
void save_observations(const std::string& path, const std::vector<Observation>& observations);

}  // namespace outlr
