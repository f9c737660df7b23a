#include "outlr/lp.hpp"

#include "outlr/error.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace outlr {

const char* to_string(LPStatus status) {
  switch (status) {
    case LPStatus::Optimal: return "Optimal";
    case LPStatus::Infeasible: return "Infeasible";
    case LPStatus::Unbounded: return "Unbounded";
    case LPStatus::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

LinearProgram LinearProgram::make(Vector cost, SparseMatrix ineq_matrix, Vector ineq_rhs) {
  LinearProgram lp;
  const auto n = cost.size();
  lp.cost = std::move(cost);
  lp.ineq_matrix = std::move(ineq_matrix);
  lp.ineq_rhs = std::move(ineq_rhs);
  lp.lower = Vector::Constant(n, -kInf);
  lp.upper = Vector::Constant(n, kInf);
  return lp;
}

void LinearProgram::validate() const {
  const auto n = cost.size();
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::MalformedProblem, msg); };
  if (ineq_matrix.rows() != ineq_rhs.size())
    fail("constraint matrix has " + std::to_string(ineq_matrix.rows()) + " rows but rhs has " +
         std::to_string(ineq_rhs.size()) + " entries");
  if (ineq_matrix.cols() != n)
    fail("constraint matrix has " + std::to_string(ineq_matrix.cols()) + " columns but cost has " +
         std::to_string(n) + " entries");
  if (lower.size() != n || upper.size() != n) fail("bound vectors must match the variable count");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
      fail("invalid bounds on variable " + std::to_string(j));
    if (lower[j] == kInf || upper[j] == -kInf) fail("bound on variable " + std::to_string(j) + " excludes every value");
  }
  if (!cost.allFinite() || !ineq_rhs.allFinite()) fail("cost and rhs must be finite");
  for (int k = 0; k < ineq_matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(ineq_matrix, k); it; ++it)
      if (!std::isfinite(it.value())) fail("constraint matrix contains a non-finite entry");
}

double LPSolution::relative_gap() const {
  return std::abs(primal_objective - dual_objective) / (1.0 + std::abs(primal_objective));
}

namespace {

using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Bound rows appended after the user rows: -x_j <= -l_j and x_j <= u_j.
struct StackedSystem {
  RowMatrix G;
  SparseMatrix Gt;
  Vector h;
  std::vector<Eigen::Index> lower_vars;
  std::vector<Eigen::Index> upper_vars;
};

StackedSystem stack(const LinearProgram& lp) {
  StackedSystem s;
  const auto n = lp.num_variables();
  const auto m = lp.num_constraints();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isfinite(lp.lower[j])) s.lower_vars.push_back(j);
    if (std::isfinite(lp.upper[j])) s.upper_vars.push_back(j);
  }
  const auto total = m + static_cast<Eigen::Index>(s.lower_vars.size() + s.upper_vars.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(lp.ineq_matrix.nonZeros() + total - m));
  for (int k = 0; k < lp.ineq_matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(lp.ineq_matrix, k); it; ++it)
      if (it.value() != 0.0) trips.emplace_back(it.row(), it.col(), it.value());
  s.h.resize(total);
  s.h.head(m) = lp.ineq_rhs;
  Eigen::Index r = m;
  for (auto j : s.lower_vars) {
    trips.emplace_back(r, j, -1.0);
    s.h[r++] = -lp.lower[j];
  }
  for (auto j : s.upper_vars) {
    trips.emplace_back(r, j, 1.0);
    s.h[r++] = lp.upper[j];
  }
  s.G.resize(total, n);
  s.G.setFromTriplets(trips.begin(), trips.end());
  s.G.makeCompressed();
  s.Gt = s.G.transpose();
  return s;
}

// Assembles H = G' diag(d) G + diag(reg) into a fixed sparsity pattern.
// Each row of G contributes an outer product; the destination slot of every
// (i, j) pair is resolved once up front.
class NormalMatrix {
 public:
  explicit NormalMatrix(const RowMatrix& G) {
    const auto n = G.cols();
    std::vector<Eigen::Triplet<double>> pattern;
    for (Eigen::Index j = 0; j < n; ++j) pattern.emplace_back(j, j, 0.0);
    for (int r = 0; r < G.outerSize(); ++r) {
      for (RowMatrix::InnerIterator a(G, r); a; ++a)
        for (RowMatrix::InnerIterator b(G, r); b; ++b)
          if (b.col() <= a.col()) pattern.emplace_back(a.col(), b.col(), 0.0);
    }
    H_.resize(n, n);
    H_.setFromTriplets(pattern.begin(), pattern.end());
    H_.makeCompressed();

    auto slot = [&](Eigen::Index row, Eigen::Index col) {
      const auto* begin = H_.innerIndexPtr() + H_.outerIndexPtr()[col];
      const auto* end = H_.innerIndexPtr() + H_.outerIndexPtr()[col + 1];
      const auto* it = std::lower_bound(begin, end, static_cast<int>(row));
      return static_cast<int>(it - H_.innerIndexPtr());
    };
    diag_slot_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) diag_slot_[static_cast<std::size_t>(j)] = slot(j, j);
    row_begin_.push_back(0);
    for (int r = 0; r < G.outerSize(); ++r) {
      for (RowMatrix::InnerIterator a(G, r); a; ++a)
        for (RowMatrix::InnerIterator b(G, r); b; ++b)
          if (b.col() <= a.col()) {
            pair_slot_.push_back(slot(a.col(), b.col()));
            pair_coef_.push_back(a.value() * b.value());
          }
      row_begin_.push_back(pair_slot_.size());
    }
  }

  const SparseMatrix& assemble(const Vector& d) {
    double* values = H_.valuePtr();
    std::fill(values, values + H_.nonZeros(), 0.0);
    for (std::size_t r = 0; r + 1 < row_begin_.size(); ++r) {
      const double dr = d[static_cast<Eigen::Index>(r)];
      for (std::size_t k = row_begin_[r]; k < row_begin_[r + 1]; ++k) values[pair_slot_[k]] += dr * pair_coef_[k];
    }
    double peak = 0.0;
    for (int s : diag_slot_) peak = std::max(peak, values[s]);
    const double floor = 1e-14 * std::max(peak, 1e-300);
    for (int s : diag_slot_) values[s] += 1e-12 * values[s] + floor;
    return H_;
  }

  const SparseMatrix& matrix() const { return H_; }

 private:
  SparseMatrix H_;
  std::vector<int> diag_slot_;
  std::vector<std::size_t> row_begin_;
  std::vector<int> pair_slot_;
  std::vector<double> pair_coef_;
};

using Factorization = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

// Solves (G' D G) x = rhs by conjugate gradients on the unregularized
// operator, preconditioned with the regularized factorization. Near the end of
// a solve D spans many orders of magnitude and the factor alone is not accurate.
Vector solve_normal(const Factorization& chol, const StackedSystem& sys, const Vector& d, const Vector& rhs) {
  auto apply = [&](const Vector& v) -> Vector { return sys.Gt * (d.cwiseProduct(sys.G * v)); };
  Vector x = chol.solve(rhs);
  Vector r = rhs - apply(x);
  const double target = 1e-14 * std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
  constexpr int kMaxCg = 50;
  if (r.lpNorm<Eigen::Infinity>() > target) {
    Vector zv = chol.solve(r);
    Vector p = zv;
    double rz = r.dot(zv);
    Vector best = x;
    double best_res = r.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < kMaxCg && rz > 0.0; ++it) {
      const Vector Ap = apply(p);
      const double pAp = p.dot(Ap);
      if (!(pAp > 0.0)) break;
      const double alpha = rz / pAp;
      x += alpha * p;
      r -= alpha * Ap;
      const double res = r.lpNorm<Eigen::Infinity>();
      if (res < best_res) {
        best_res = res;
        best = x;
      }
      if (res <= target) break;
      zv = chol.solve(r);
      const double rz_next = r.dot(zv);
      p = zv + (rz_next / rz) * p;
      rz = rz_next;
    }
    x = best;
  }
  if (!x.allFinite()) throw Error(ErrorCode::NumericalFailure, "normal-equation solve produced non-finite values");
  return x;
}

double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

}  // namespace

LPSolution solve_lp(const LinearProgram& lp, const SolverTolerances& tol) {
  lp.validate();
  const auto n = lp.num_variables();
  const auto m_user = lp.num_constraints();
  const StackedSystem sys = stack(lp);
  const auto m = sys.G.rows();
  const Vector& c = lp.cost;
  const Vector& h = sys.h;

  LPSolution out;
  out.dual = Vector::Zero(m_user);
  out.lower_dual = Vector::Zero(n);
  out.upper_dual = Vector::Zero(n);

  if (m == 0) {
    out.iterations = 0;
    if (c.isZero()) {
      out.status = LPStatus::Optimal;
      out.primal = Vector::Zero(n);
    } else {
      out.status = LPStatus::Unbounded;
    }
    return out;
  }

  NormalMatrix normal(sys.G);
  Factorization chol;
  chol.analyzePattern(normal.matrix());
  auto factor = [&](const Vector& d) {
    chol.factorize(normal.assemble(d));
    if (chol.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "LDL^T factorization failed");
  };

  // Starting point: least-squares primal, minimum-norm dual, both shifted
  // into the positive orthant.
  const Vector ones = Vector::Ones(m);
  factor(ones);
  Vector x = solve_normal(chol, sys, ones, sys.Gt * h);
  Vector z = h - sys.G * x;
  Vector lambda = sys.G * solve_normal(chol, sys, ones, -c);
  {
    const double shift_z = -z.minCoeff();
    if (shift_z >= -1e-8 * std::max(1.0, z.norm())) z.array() += 1.0 + shift_z;
    const double shift_l = -lambda.minCoeff();
    if (shift_l >= -1e-8 * std::max(1.0, lambda.norm())) lambda.array() += 1.0 + shift_l;
  }

  const double c_scale = 1.0 + c.lpNorm<Eigen::Infinity>();
  constexpr double kInfeasTol = 1e-8;
  constexpr int kMaxCorrectors = 3;
  constexpr double kStepScale = 0.99;

  auto finish = [&](LPStatus status, int iter) {
    out.status = status;
    out.iterations = iter;
    if (status != LPStatus::Infeasible) out.primal = x;
    out.primal_objective = c.dot(x);
    out.dual_objective = -h.dot(lambda);
    out.dual = lambda.head(m_user);
    Eigen::Index r = m_user;
    for (auto j : sys.lower_vars) out.lower_dual[j] = lambda[r++];
    for (auto j : sys.upper_vars) out.upper_dual[j] = lambda[r++];
    return out;
  };

  for (int iter = 0; iter < tol.max_iterations; ++iter) {
    const Vector Gx = sys.G * x;
    const Vector r_dual = c + sys.Gt * lambda;
    const Vector r_primal = Gx + z - h;
    const double mu = z.dot(lambda) / static_cast<double>(m);
    const double pobj = c.dot(x);
    const double dobj = -h.dot(lambda);

    const double violation = std::max(0.0, (Gx - h).maxCoeff());
    const double dual_res = r_dual.lpNorm<Eigen::Infinity>();
    if (violation <= tol.feas_tol && dual_res <= tol.feas_tol * c_scale &&
        std::abs(pobj - dobj) <= tol.gap_tol * (1.0 + std::abs(pobj)))
      return finish(LPStatus::Optimal, iter);

    const double h_lambda = h.dot(lambda);
    if (h_lambda < 0.0 && (sys.Gt * lambda).lpNorm<Eigen::Infinity>() <= kInfeasTol * -h_lambda)
      return finish(LPStatus::Infeasible, iter);
    if (pobj < 0.0 && Gx.cwiseMax(0.0).lpNorm<Eigen::Infinity>() <= kInfeasTol * -pobj)
      return finish(LPStatus::Unbounded, iter);

    const Vector d = lambda.cwiseQuotient(z);
    factor(d);

    // Newton system for the residual triple (r_dual, r_primal, r_comp).
    auto direction = [&](const Vector& r_comp, Vector& dx, Vector& dz, Vector& dl) {
      const Vector t = (r_comp + lambda.cwiseProduct(r_primal)).cwiseQuotient(z);
      dx = solve_normal(chol, sys, d, -r_dual - sys.Gt * t);
      const Vector Gdx = sys.G * dx;
      dz = -r_primal - Gdx;
      dl = t + d.cwiseProduct(Gdx);
    };

    Vector dx, dz, dl;
    const Vector zl = z.cwiseProduct(lambda);
    direction(-zl, dx, dz, dl);
    const double ap_aff = max_step(z, dz);
    const double ad_aff = max_step(lambda, dl);
    const double mu_aff = (z + ap_aff * dz).dot(lambda + ad_aff * dl) / static_cast<double>(m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Vector r_comp = (-zl - dz.cwiseProduct(dl)).array() + sigma * mu;
    direction(r_comp, dx, dz, dl);
    double ap = std::min(1.0, kStepScale * max_step(z, dz));
    double ad = std::min(1.0, kStepScale * max_step(lambda, dl));
    // Centrality correctors: push outlying products toward the target and
    // keep the correction only while it lengthens the step.
    for (int k = 0; k < kMaxCorrectors && std::min(ap, ad) < 0.9; ++k) {
      const double at = std::min(1.0, 1.5 * std::min(ap, ad) + 0.1);
      const Vector v = (z + at * dz).cwiseProduct(lambda + at * dl);
      const double target = sigma * mu;
      const Vector goal = v.cwiseMax(0.1 * target).cwiseMin(10.0 * target);
      Vector cx, cz, cl;
      const Vector t = (goal - v).cwiseMax(-10.0 * target).cwiseQuotient(z);
      cx = solve_normal(chol, sys, d, -(sys.Gt * t));
      const Vector Gcx = sys.G * cx;
      cz = -Gcx;
      cl = t + d.cwiseProduct(Gcx);
      cx += dx;
      cz += dz;
      cl += dl;
      const double cp = std::min(1.0, kStepScale * max_step(z, cz));
      const double cd = std::min(1.0, kStepScale * max_step(lambda, cl));
      if (std::min(cp, cd) < 1.01 * std::min(ap, ad)) break;
      dx = std::move(cx);
      dz = std::move(cz);
      dl = std::move(cl);
      ap = cp;
      ad = cd;
    }

    x += ap * dx;
    z += ap * dz;
    lambda += ad * dl;
    if (!x.allFinite() || !z.allFinite() || !lambda.allFinite())
      throw Error(ErrorCode::NumericalFailure, "interior-point iterate became non-finite");
  }
  return finish(LPStatus::IterationLimit, tol.max_iterations);
}

}  // namespace outlr
