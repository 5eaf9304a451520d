#include "quench/linprog.hpp"

#include <cmath>
#include <sstream>

namespace quench {

namespace {
constexpr double kPivotTol = 1e-11;
}

LpResult solve_linear_feasibility(const std::vector<LinearConstraint>& raw, int nvars,
                                  double tol) {
  const int m = static_cast<int>(raw.size());
  for (const auto& c : raw) {
    if (c.a.size() != nvars || !c.a.allFinite() || !std::isfinite(c.b)) {
      return {LpStatus::NumericalFailure, {}, 0.0, "malformed constraint"};
    }
  }
  if (m == 0) return {LpStatus::Feasible, Eigen::VectorXd::Zero(nvars), 0.0, ""};

  // Equilibrate: scaling a row by a positive factor leaves the feasible set
  // unchanged but keeps the tableau, and the tolerance, well conditioned
  // when row magnitudes span many orders.
  std::vector<LinearConstraint> constraints = raw;
  for (auto& c : constraints) {
    const double s = std::max(c.a.lpNorm<Eigen::Infinity>(), std::abs(c.b));
    if (s > 1.0) {
      c.a /= s;
      c.b /= s;
    }
  }

  // Split free variables, add one slack per row, and one artificial per row
  // whose right-hand side is negative after normalization.
  std::vector<int> art_rows;
  for (int i = 0; i < m; ++i) {
    if (constraints[i].b < 0) art_rows.push_back(i);
  }
  const int na = static_cast<int>(art_rows.size());
  const int ncols = 2 * nvars + m + na;

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, ncols + 1);  // last row: phase-1 objective
  std::vector<int> basis(m);

  int art = 0;
  for (int i = 0; i < m; ++i) {
    const double sign = constraints[i].b < 0 ? -1.0 : 1.0;
    for (int j = 0; j < nvars; ++j) {
      t(i, j) = sign * constraints[i].a(j);
      t(i, nvars + j) = -sign * constraints[i].a(j);
    }
    t(i, 2 * nvars + i) = sign;  // slack
    t(i, ncols) = sign * constraints[i].b;
    if (sign < 0) {
      t(i, 2 * nvars + m + art) = 1.0;
      basis[i] = 2 * nvars + m + art;
      ++art;
      // Objective row accumulates -(artificial rows) so reduced costs start
      // consistent with the basis.
      t.row(m) -= t.row(i);
    } else {
      basis[i] = 2 * nvars + i;
    }
  }
  for (int k = 0; k < na; ++k) t(m, 2 * nvars + m + k) += 1.0;
  // Zero out objective entries over the artificial basis columns.
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= 2 * nvars + m) t(m, basis[i]) = 0.0;
  }

  const long max_iters = 200L * (m + ncols);
  long stall = 0;
  double last_obj = std::numeric_limits<double>::infinity();
  for (long iter = 0; iter < max_iters; ++iter) {
    const double obj = -t(m, ncols);
    if (obj < last_obj - 1e-14) {
      last_obj = obj;
      stall = 0;
    } else {
      ++stall;
    }
    const bool bland = stall > 2 * (m + 4);

    // Entering column.
    int enter = -1;
    double best = -kPivotTol;
    for (int j = 0; j < ncols; ++j) {
      const double rc = t(m, j);
      if (rc < -kPivotTol) {
        if (bland) {
          enter = j;
          break;
        }
        if (rc < best) {
          best = rc;
          enter = j;
        }
      }
    }
    if (enter < 0) break;  // optimal

    // Ratio test.
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      const double a = t(i, enter);
      if (a > kPivotTol) {
        const double ratio = t(i, ncols) / a;
        if (leave < 0 || ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && basis[i] > basis[leave])) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) {
      return {LpStatus::NumericalFailure, {}, 0.0, "phase-1 objective unbounded (numerical)"};
    }

    // Pivot.
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t(i, enter);
      if (f != 0.0) t.row(i) -= f * t.row(leave);
    }
    basis[leave] = enter;
    if (iter == max_iters - 1) {
      return {LpStatus::NumericalFailure, {}, 0.0, "iteration cap reached"};
    }
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(nvars);
  for (int i = 0; i < m; ++i) {
    const int b = basis[i];
    if (b < nvars) x(b) += t(i, ncols);
    else if (b < 2 * nvars) x(b - nvars) -= t(i, ncols);
  }
  double worst = 0.0;
  for (const auto& c : constraints) worst = std::max(worst, c.a.dot(x) - c.b);
  if (worst <= tol) return {LpStatus::Feasible, std::move(x), worst, ""};

  const double art_sum = -t(m, ncols);
  if (art_sum > tol) {
    return {LpStatus::Infeasible, {}, worst, "phase-1 optimum positive"};
  }
  return {LpStatus::NumericalFailure, std::move(x), worst, "residual above tolerance"};
}

std::string to_lp_format(const std::vector<LinearConstraint>& constraints, int nvars) {
  std::ostringstream os;
  os << "\\ feasibility instance\nMinimize\n obj: 0\nSubject To\n";
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    os << " c" << i << ":";
    for (int j = 0; j < nvars; ++j) {
      const double a = constraints[i].a(j);
      if (a == 0.0) continue;
      os << (a >= 0 ? " +" : " ") << a << " x" << j;
    }
    os << " <= " << constraints[i].b << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < nvars; ++j) os << " x" << j << " free\n";
  os << "End\n";
  return os.str();
}

}  // namespace quench
