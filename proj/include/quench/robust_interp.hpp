#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "quench/linprog.hpp"

namespace quench {

// Raised when an exact decoder cannot reconstruct (singular or inconsistent
// system, typically more corruptions than the decoding radius allows).
struct UnrecoverableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when the robust decoder's feasibility programs have no solution at
// the stated tolerances, i.e. the caller understated epsilon or k.
struct AssumptionViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense polynomial, coefficients in ascending degree order.
struct Polynomial {
  Eigen::VectorXd coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  double eval(double x) const;
  void trim();  // drop trailing exact zeros, keep at least the constant term
};

struct Interval {
  double a = 0.0;
  double b = 0.0;
};

// Ordered disjoint closed intervals of equal width `delta`, consecutive ones
// separated by at least delta. p_min is the smallest probability mass of a
// bin under the density the family was built for.
struct BinFamily {
  std::vector<Interval> intervals;
  double delta = 0.0;
  double p_min = 0.0;

  // Index of the bin containing x, or -1 (gaps between bins are not in any).
  int find_bin(double x) const;
};

enum class Provenance { Clean, Corrupted, Unknown };

struct NoisySample {
  double x = 0.0;
  double y = 0.0;
  Provenance provenance = Provenance::Unknown;
};

// One representative per occupied bin (the first sample that lands in it),
// sorted by bin index. Representatives are pairwise >= delta apart.
std::vector<std::pair<int, double>> delta_separated_subset(const std::vector<double>& samples,
                                                           const BinFamily& bins);

// B bins of width r/B inside [-r, r] with r = radius_factor/sqrt(l); p_min is
// the quadrature mass of the extreme bin under the angular density. At
// radius_factor = 1 and B = l this reproduces bin width l^{-3/2}.
BinFamily make_bins_circumference(int l, int B, double radius_factor = 1.0);

// B bins of width (1/sqrt(l))/(2B) inside [1 - 1/sqrt(l), 1]; p_min from
// quadrature of the radial density over the lightest extreme bin. At B = l
// the width is the reference value 1/(2 l^{3/2}).
BinFamily make_bins_radial(int l, int B);

// Closed-form reference for the radial family: 1/(2B sqrt(pi e^2)).
double radial_p_min_formula(int B);

// Value at x of the unique interpolant through the given nodes (barycentric
// second form; returns the stored value when x hits a node).
double lagrange_eval(const std::vector<double>& nodes, const std::vector<double>& values,
                     double x);

// (e^2 L / (delta d))^d: growth factor for extrapolating a degree-d
// polynomial from delta-separated nodes in [0, b] out to L.
double remez_extrapolation_bound(double delta, int d, double L);
double log10_remez_extrapolation_bound(double delta, int d, double L);

// 2^d / (delta^d d!): interior bound for nodes and target inside [-1, 1].
double remez_interior_bound(double delta, int d);
double log10_remez_interior_bound(double delta, int d);

// delta^d / (d + 1): a monic degree-d polynomial attains at least this value
// somewhere on any d+1 delta-separated nodes.
double leading_coeff_floor(double delta, int d);

// Exact decoder: solves for an error locator E (monic, degree k) and
// Q = E * p, then divides. Needs deg_bound <= n - 2k - 1 and at most k
// corruptions with otherwise exact values.
Polynomial classic_berlekamp_welch(const std::vector<double>& xs, const std::vector<double>& ys,
                                   int k, int deg_bound);

// Optional insight into a robust decode, for tests and report assembly.
struct RbwDiagnostics {
  Eigen::VectorXd locator;      // monic error-locator coefficients, ascending
  std::vector<int> kept_nodes;  // indices used in the final fit
  bool lp2_solved = false;      // false when the second program was trivially feasible
};

// Robust decoder on [-1, 1]: the two feasibility programs of the decoding
// theorem, then a least-squares refit on the nodes the locator leaves alone.
// Nodes must be pairwise delta-separated. Returns a polynomial of degree at
// most n - 2k - 1. k = 0 reduces to plain interpolation.
Polynomial robust_berlekamp_welch(const std::vector<double>& xs, const std::vector<double>& ys,
                                  int k, double delta, double epsilon,
                                  RbwDiagnostics* diag = nullptr);

// Same algorithm in a Chebyshev basis on [lo, hi], with an explicit degree
// cap (may be below n - 2k - 1). Keeps high-degree fits well conditioned and
// evaluates stably outside the interval via the Clenshaw recurrence.
struct ChebyshevFit {
  double lo = -1.0;
  double hi = 1.0;
  Eigen::VectorXd coeffs;  // T_0, T_1, ... on the mapped interval

  double eval(double x) const;
  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

ChebyshevFit robust_chebyshev_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                                  int k, double delta, double epsilon, int deg_bound, double lo,
                                  double hi, RbwDiagnostics* diag = nullptr);

// CSV round-trip for sample sets (columns: x, y, provenance).
std::string noisy_samples_to_csv(const std::vector<NoisySample>& samples);
std::vector<NoisySample> noisy_samples_from_csv(const std::string& text);

}  // namespace quench
