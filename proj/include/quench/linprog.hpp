#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace quench {

// Affine inequality a . x <= b over free variables.
struct LinearConstraint {
  Eigen::VectorXd a;
  double b = 0.0;
};

enum class LpStatus { Feasible, Infeasible, NumericalFailure };

struct LpResult {
  LpStatus status = LpStatus::NumericalFailure;
  Eigen::VectorXd point;
  double max_violation = 0.0;
  std::string detail;
};

// Phase-1 dense simplex: returns a point satisfying every constraint within
// `tol`, or certifies that none was found. Numerical failure (iteration cap)
// is reported separately from infeasibility.
LpResult solve_linear_feasibility(const std::vector<LinearConstraint>& constraints, int nvars,
                                  double tol = 1e-9);

// Text dump of the instance in LP format, for external cross-solving.
std::string to_lp_format(const std::vector<LinearConstraint>& constraints, int nvars);

}  // namespace quench
