#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "penlogit/dataset.hpp"

namespace penlogit {

enum class SeparationKind { None, QuasiComplete, Complete };

inline const char* to_string(SeparationKind k) {
  switch (k) {
    case SeparationKind::None: return "none";
    case SeparationKind::QuasiComplete: return "quasi-complete";
    case SeparationKind::Complete: return "complete";
  }
  return "none";
}

// direction satisfies (2y_i-1) x_i' direction >= 0 for all i whenever
// separated is set, with strict inequality exactly on perfectly_predicted.
struct SeparationReport {
  bool separated = false;
  SeparationKind kind = SeparationKind::None;
  Eigen::VectorXd direction;
  std::vector<int> perfectly_predicted;
  bool solver_ok = true;
  std::string warning;
};

namespace detail {

struct SimplexResult {
  bool ok = false;
  double objective = 0.0;
  Eigen::VectorXd x;
};

// Dense two-phase primal simplex for max c'x s.t. Ax <= b, x >= 0.
// Dantzig pricing; switches to Bland's rule once the objective stalls, which
// guarantees termination on the degenerate vertices these margin LPs produce.
inline SimplexResult simplex_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& c, int max_iter = 50000) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const double tol = 1e-9;
  SimplexResult res;

  int na = 0;
  for (int i = 0; i < m; ++i)
    if (b(i) < 0) ++na;
  const int ncols = n + m + na;
  const int rhs = ncols;

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, ncols + 1);
  std::vector<int> basis(m);
  std::vector<char> row_active(m, 1);
  int ak = 0;
  for (int i = 0; i < m; ++i) {
    const double sgn = b(i) >= 0 ? 1.0 : -1.0;
    T.block(i, 0, 1, n) = sgn * A.row(i);
    T(i, n + i) = sgn;
    T(i, rhs) = sgn * b(i);
    if (b(i) >= 0) {
      basis[i] = n + i;
    } else {
      T(i, n + m + ak) = 1.0;
      basis[i] = n + m + ak;
      ++ak;
    }
  }

  // Cost row convention: T(m, j) holds the reduced cost of a minimization
  // problem and T(m, rhs) holds minus the current objective value.
  auto pivot = [&](int pr, int pc) {
    T.row(pr) /= T(pr, pc);
    for (int r = 0; r <= m; ++r) {
      if (r == pr) continue;
      const double f = T(r, pc);
      if (f != 0.0) T.row(r) -= f * T.row(pr);
    }
    basis[pr] = pc;
  };

  auto run = [&](bool allow_artificial) -> int {
    bool bland = false;
    int stall = 0;
    double last_obj = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
      int enter = -1;
      double best = -tol;
      const int limit = allow_artificial ? ncols : n + m;
      for (int j = 0; j < limit; ++j) {
        const double r = T(m, j);
        if (r < best) {
          best = r;
          enter = j;
          if (bland) break;
        }
        if (bland && r < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return 0;  // optimal

      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (!row_active[i]) continue;
        const double a = T(i, enter);
        if (a > tol) {
          const double r = T(i, rhs) / a;
          if (r < ratio - 1e-12 || (r < ratio + 1e-12 && (leave < 0 || basis[i] < basis[leave]))) {
            ratio = r;
            leave = i;
          }
        }
      }
      if (leave < 0) return 2;  // unbounded

      pivot(leave, enter);
      const double obj = -T(m, rhs);
      if (std::abs(obj - last_obj) < 1e-13) {
        if (++stall > 2 * (m + 1)) bland = true;
      } else {
        stall = 0;
        last_obj = obj;
      }
    }
    return 1;  // iteration cap
  };

  if (na > 0) {
    for (int j = n + m; j < ncols; ++j) T(m, j) = 1.0;
    for (int i = 0; i < m; ++i)
      if (basis[i] >= n + m) T.row(m) -= T.row(i);
    if (run(true) != 0) return res;
    if (-T(m, rhs) > 1e-7) return res;  // infeasible
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n + m) continue;
      int pc = -1;
      for (int j = 0; j < n + m; ++j)
        if (std::abs(T(i, j)) > 1e-7) { pc = j; break; }
      if (pc >= 0)
        pivot(i, pc);
      else
        row_active[i] = 0;  // redundant constraint
    }
  }

  T.row(m).setZero();
  for (int j = 0; j < n; ++j) T(m, j) = -c(j);
  for (int i = 0; i < m; ++i) {
    if (!row_active[i] || basis[i] >= n) continue;
    const double d = -c(basis[i]);
    if (d != 0.0) T.row(m) -= d * T.row(i);
  }
  for (int j = n + m; j < ncols; ++j) T(m, j) = 0.0;
  if (run(false) != 0) return res;

  res.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (row_active[i] && basis[i] < n) res.x(basis[i]) = std::max(0.0, T(i, rhs));
  res.objective = c.dot(res.x);
  res.ok = true;
  return res;
}

}  // namespace detail

// Detects separation in the design Z (including the intercept column).
//
// Two LPs over the box |beta_j| <= 1 on column-rescaled data: first maximize
// the minimum signed margin (a positive optimum certifies a direction with
// every margin strict, i.e. complete separation), then maximize the margin
// sum subject to all margins nonnegative (a positive optimum certifies
// quasi-complete separation). The margin-sum optimum can sit on a vertex that
// zeroes rows which another feasible direction predicts perfectly, so the
// witness direction is averaged with re-solves restricted to still-uncovered
// rows until the perfectly predicted set stops growing.
inline SeparationReport detect(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                               double tol = 1e-8) {
  const int nobs = static_cast<int>(Z.rows());
  const int p = static_cast<int>(Z.cols());
  SeparationReport rep;
  rep.direction = Eigen::VectorXd::Zero(p);

  Eigen::VectorXd scale(p);
  for (int j = 0; j < p; ++j) {
    const double mx = Z.col(j).cwiseAbs().maxCoeff();
    scale(j) = mx > 0 ? mx : 1.0;
  }
  Eigen::MatrixXd M(nobs, p);
  for (int i = 0; i < nobs; ++i)
    M.row(i) = (2.0 * y(i) - 1.0) * Z.row(i).cwiseQuotient(scale.transpose());
  const Eigen::VectorXd rowsum = M.rowwise().sum();

  auto fail = [&](const char* what) {
    rep.solver_ok = false;
    rep.warning = std::string("separation LP failed (") + what + "); verdict unknown";
    return rep;
  };
  auto finish = [&](SeparationKind kind, const Eigen::VectorXd& beta_s,
                    const Eigen::VectorXd& margins) {
    rep.separated = true;
    rep.kind = kind;
    rep.direction = beta_s.cwiseQuotient(scale);
    const double mx = rep.direction.cwiseAbs().maxCoeff();
    if (mx > 0) rep.direction /= mx;
    for (int i = 0; i < nobs; ++i)
      if (margins(i) > tol) rep.perfectly_predicted.push_back(i);
    return rep;
  };

  // Shift t = beta + 1 in [0, 2] so the box maps onto t >= 0 with cap rows.
  // Margin LP, complete test: max eps s.t. M t - eps >= rowsum, t <= 2, eps <= 1.
  {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nobs + p + 1, p + 1);
    Eigen::VectorXd b(nobs + p + 1);
    A.block(0, 0, nobs, p) = -M;
    A.block(0, p, nobs, 1).setOnes();
    b.head(nobs) = -rowsum;
    for (int j = 0; j < p; ++j) {
      A(nobs + j, j) = 1.0;
      b(nobs + j) = 2.0;
    }
    A(nobs + p, p) = 1.0;
    b(nobs + p) = 1.0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p + 1);
    c(p) = 1.0;
    const auto r = detail::simplex_max(A, b, c);
    if (!r.ok) return fail("min-margin phase");
    if (r.objective > tol) {
      const Eigen::VectorXd beta_s = r.x.head(p).array() - 1.0;
      const Eigen::VectorXd marg = M * beta_s;
      if (marg.minCoeff() > tol) return finish(SeparationKind::Complete, beta_s, marg);
      // Numerically marginal certificate: fall through to the quasi test.
    }
  }

  // Margin-sum LP: max sum_i M_i t s.t. M t >= rowsum (margins >= 0), t <= 2.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nobs + p, p);
  Eigen::VectorXd b(nobs + p);
  A.block(0, 0, nobs, p) = -M;
  b.head(nobs) = -rowsum;
  for (int j = 0; j < p; ++j) {
    A(nobs + j, j) = 1.0;
    b(nobs + j) = 2.0;
  }
  auto solve_uncovered = [&](const std::vector<char>& covered, Eigen::VectorXd& beta_out,
                             double& gain) -> bool {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    double offset = 0.0;
    for (int i = 0; i < nobs; ++i) {
      if (covered[i]) continue;
      c += M.row(i).transpose();
      offset += rowsum(i);
    }
    const auto r = detail::simplex_max(A, b, c);
    if (!r.ok) return false;
    beta_out = r.x.array() - 1.0;
    gain = r.objective - offset;  // sum of margins over uncovered rows
    return true;
  };

  std::vector<char> covered(nobs, 0);
  Eigen::VectorXd beta_s = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd margins = Eigen::VectorXd::Zero(nobs);
  bool any = false;
  for (int pass = 0; pass < 8; ++pass) {
    Eigen::VectorXd cand;
    double gain = 0.0;
    if (!solve_uncovered(covered, cand, gain)) return fail("margin-sum phase");
    if (gain <= tol) break;
    beta_s = any ? Eigen::VectorXd(0.5 * (beta_s + cand)) : cand;
    any = true;
    margins = M * beta_s;
    bool grew = false;
    for (int i = 0; i < nobs; ++i) {
      if (!covered[i] && margins(i) > tol) {
        covered[i] = 1;
        grew = true;
      }
    }
    if (!grew) break;
  }

  if (any && margins.maxCoeff() > tol && margins.minCoeff() > -tol) {
    const bool all = margins.minCoeff() > tol;
    return finish(all ? SeparationKind::Complete : SeparationKind::QuasiComplete, beta_s, margins);
  }
  return rep;
}

inline SeparationReport detect(const Dataset& d, double tol = 1e-8) {
  return detect(design_matrix(d), d.y, tol);
}

}  // namespace penlogit
