#pragma once

#include "outlr/lp.hpp"

#include <optional>
#include <vector>

namespace outlr {

// One scalar observation of a linear model: |a'x - y| <= delta for inliers.
class LinearMeasurement {
 public:
  // Throws Error(InvalidArgument) if every entry of a is zero.
  LinearMeasurement(Vector a, double y);

  const Vector& a() const { return a_; }
  double y() const { return y_; }
  Eigen::Index dim() const { return a_.size(); }

 private:
  Vector a_;
  double y_;
};

enum class NormP { L1, Linf };

const char* to_string(NormP p);

struct DepthBounds {
  double d_min;
  double d_max;
};

// ||(u'x + u~, v'x + v~)||_p / (w'x + w~), the projective reprojection error
// in coefficient form. Depth is the denominator. Coefficients are sparse since
// a geometric residual touches a handful of unknowns.
struct QuasiConvexResidual {
  using Coeffs = Eigen::SparseVector<double>;

  Coeffs u;
  double u_tilde = 0.0;
  Coeffs v;
  double v_tilde = 0.0;
  Coeffs w;
  double w_tilde = 0.0;
  NormP norm_p = NormP::L1;
  std::optional<DepthBounds> depth_bounds;

  Eigen::Index dim() const { return u.size(); }
  double depth(const Vector& x) const { return w.dot(x) + w_tilde; }

  // Throws Error(DimensionMismatch) or Error(InvalidArgument).
  void validate() const;
};

// Stacked block inequalities A x <= b + s (x) 1_kappa, with one block of
// kappa consecutive rows per measurement.
struct ConstraintSystem {
  Eigen::SparseMatrix<double, Eigen::RowMajor> A;
  Vector b;
  int kappa = 0;
  Eigen::Index M = 0;
  Eigen::Index N = 0;

  Eigen::Index measurement_of_row(Eigen::Index row) const { return row / kappa; }
  Eigen::Index num_rows() const { return b.size(); }

  // Largest row violation (row'x - rhs) inside block i; <= 0 means the block
  // holds with zero slack.
  double block_violation(Eigen::Index i, const Vector& x) const;

  // Restriction to the listed measurements, in the given order.
  ConstraintSystem subset(const std::vector<Eigen::Index>& measurements) const;
};

// J = I_M (x) 1_{1 x kappa}; J' s expands one slack per measurement to its
// kappa rows.
SparseMatrix slack_expansion(Eigen::Index M, int kappa);

ConstraintSystem build_linear_system(const std::vector<LinearMeasurement>& measurements, double delta);

// Row order inside a block:
//   L1:   +u+v, +u-v, -u+v, -u-v, [-depth, +depth]
//   Linf: +u, -u, +v, -v, [-depth, +depth]
// Every row is stored as (coef - delta w)'x <= delta w~ - const.
ConstraintSystem build_quasiconvex_system(const std::vector<QuasiConvexResidual>& residuals, double delta);

// Throws Error(NonpositiveDepth) when w'x + w~ <= 0.
double eval_residual(const QuasiConvexResidual& residual, const Vector& x);

}  // namespace outlr
