#include "outlr/residuals.hpp"

#include "outlr/error.hpp"

#include <cmath>
#include <string>

namespace outlr {

using Triplet = Eigen::Triplet<double>;

LinearMeasurement::LinearMeasurement(Vector a, double y) : a_(std::move(a)), y_(y) {
  if (a_.size() == 0 || a_.isZero(0.0))
    throw Error(ErrorCode::InvalidArgument, "measurement coefficient vector is identically zero");
  if (!a_.allFinite() || !std::isfinite(y_)) throw Error(ErrorCode::InvalidArgument, "measurement is not finite");
}

const char* to_string(NormP p) { return p == NormP::L1 ? "l1" : "linf"; }

void QuasiConvexResidual::validate() const {
  if (v.size() != u.size() || w.size() != u.size())
    throw Error(ErrorCode::DimensionMismatch, "u, v and w must have equal length");
  if (depth_bounds && !(depth_bounds->d_min > 0.0 && depth_bounds->d_max > depth_bounds->d_min))
    throw Error(ErrorCode::InvalidArgument, "depth bounds must satisfy 0 < d_min < d_max");
}

double ConstraintSystem::block_violation(Eigen::Index i, const Vector& x) const {
  double worst = -kInf;
  for (Eigen::Index r = i * kappa; r < (i + 1) * kappa; ++r) worst = std::max(worst, A.row(r).dot(x) - b[r]);
  return worst;
}

ConstraintSystem ConstraintSystem::subset(const std::vector<Eigen::Index>& measurements) const {
  ConstraintSystem out;
  out.kappa = kappa;
  out.N = N;
  out.M = static_cast<Eigen::Index>(measurements.size());
  out.b.resize(out.M * kappa);
  std::vector<Triplet> trips;
  Eigen::Index dst = 0;
  for (auto i : measurements) {
    for (Eigen::Index r = i * kappa; r < (i + 1) * kappa; ++r, ++dst) {
      for (decltype(A)::InnerIterator it(A, r); it; ++it) trips.emplace_back(dst, it.col(), it.value());
      out.b[dst] = b[r];
    }
  }
  out.A.resize(out.M * kappa, N);
  out.A.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseMatrix slack_expansion(Eigen::Index M, int kappa) {
  SparseMatrix J(M, M * kappa);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(M * kappa));
  for (Eigen::Index i = 0; i < M; ++i)
    for (int k = 0; k < kappa; ++k) trips.emplace_back(i, i * kappa + k, 1.0);
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

ConstraintSystem build_linear_system(const std::vector<LinearMeasurement>& measurements, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::NonpositiveDelta, "delta must be positive");
  if (measurements.empty()) throw Error(ErrorCode::InvalidArgument, "no measurements");
  const auto N = measurements.front().dim();
  ConstraintSystem sys;
  sys.kappa = 2;
  sys.M = static_cast<Eigen::Index>(measurements.size());
  sys.N = N;
  sys.b.resize(2 * sys.M);
  std::vector<Triplet> trips;
  for (Eigen::Index i = 0; i < sys.M; ++i) {
    const auto& m = measurements[static_cast<std::size_t>(i)];
    if (m.dim() != N)
      throw Error(ErrorCode::DimensionMismatch, "measurement " + std::to_string(i) + " has dimension " +
                                                    std::to_string(m.dim()) + ", expected " + std::to_string(N));
    for (Eigen::Index j = 0; j < N; ++j) {
      if (m.a()[j] == 0.0) continue;
      trips.emplace_back(2 * i, j, m.a()[j]);
      trips.emplace_back(2 * i + 1, j, -m.a()[j]);
    }
    sys.b[2 * i] = m.y() + delta;
    sys.b[2 * i + 1] = -m.y() + delta;
  }
  sys.A.resize(2 * sys.M, N);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

ConstraintSystem build_quasiconvex_system(const std::vector<QuasiConvexResidual>& residuals, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::NonpositiveDelta, "delta must be positive");
  if (residuals.empty()) throw Error(ErrorCode::InvalidArgument, "no residuals");
  const auto& first = residuals.front();
  const auto N = first.dim();
  for (const auto& r : residuals) {
    r.validate();
    if (r.dim() != N) throw Error(ErrorCode::DimensionMismatch, "residuals disagree on variable dimension");
    if (r.norm_p != first.norm_p || r.depth_bounds.has_value() != first.depth_bounds.has_value())
      throw Error(ErrorCode::MixedResidualArity, "all residuals must share the norm and depth-bound presence");
  }
  const bool with_depth = first.depth_bounds.has_value();
  const int kappa = with_depth ? 6 : 4;

  ConstraintSystem sys;
  sys.kappa = kappa;
  sys.M = static_cast<Eigen::Index>(residuals.size());
  sys.N = N;
  sys.b.resize(kappa * sys.M);
  std::vector<Triplet> trips;

  using Coeffs = QuasiConvexResidual::Coeffs;
  auto emit = [&](Eigen::Index row, const Coeffs& coef, double rhs) {
    for (Coeffs::InnerIterator it(coef); it; ++it)
      if (it.value() != 0.0) trips.emplace_back(row, it.index(), it.value());
    sys.b[row] = rhs;
  };

  for (Eigen::Index i = 0; i < sys.M; ++i) {
    const auto& r = residuals[static_cast<std::size_t>(i)];
    const Coeffs dw = delta * r.w;
    const double dwt = delta * r.w_tilde;
    const Eigen::Index row = i * kappa;
    // (coef)'x + const <= delta (w'x + w~)  ->  (coef - delta w)'x <= delta w~ - const
    if (r.norm_p == NormP::L1) {
      emit(row + 0, Coeffs(r.u + r.v - dw), dwt - (r.u_tilde + r.v_tilde));
      emit(row + 1, Coeffs(r.u - r.v - dw), dwt - (r.u_tilde - r.v_tilde));
      emit(row + 2, Coeffs(-r.u + r.v - dw), dwt - (-r.u_tilde + r.v_tilde));
      emit(row + 3, Coeffs(-r.u - r.v - dw), dwt - (-r.u_tilde - r.v_tilde));
    } else {
      emit(row + 0, Coeffs(r.u - dw), dwt - r.u_tilde);
      emit(row + 1, Coeffs(-r.u - dw), dwt + r.u_tilde);
      emit(row + 2, Coeffs(r.v - dw), dwt - r.v_tilde);
      emit(row + 3, Coeffs(-r.v - dw), dwt + r.v_tilde);
    }
    if (with_depth) {
      emit(row + 4, Coeffs(-r.w), r.w_tilde - r.depth_bounds->d_min);
      emit(row + 5, r.w, r.depth_bounds->d_max - r.w_tilde);
    }
  }
  sys.A.resize(kappa * sys.M, N);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

double eval_residual(const QuasiConvexResidual& residual, const Vector& x) {
  if (x.size() != residual.dim()) throw Error(ErrorCode::DimensionMismatch, "x has the wrong dimension");
  const double depth = residual.depth(x);
  if (!(depth > 0.0)) throw Error(ErrorCode::NonpositiveDepth, "denominator w'x + w~ = " + std::to_string(depth));
  const double e1 = std::abs(residual.u.dot(x) + residual.u_tilde);
  const double e2 = std::abs(residual.v.dot(x) + residual.v_tilde);
  const double num = residual.norm_p == NormP::L1 ? e1 + e2 : std::max(e1, e2);
  return num / depth;
}

}  // namespace outlr
