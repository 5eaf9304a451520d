#pragma once

#include <Eigen/Dense>

#include "quench/hamiltonian_sim.hpp"
#include "quench/rng.hpp"

namespace quench {

// Parameters of the coefficient ensemble N(0, sigma^2 I_l) with sigma^2 = 1/l.
struct EnsembleParams {
  int l = 0;

  double sigma2() const { return 1.0 / static_cast<double>(l); }
  double sigma() const { return std::sqrt(sigma2()); }

  void validate() const {
    if (l < 1) throw std::invalid_argument("ensemble needs l >= 1");
  }
};

// Orthonormal 2D frame in R^l. e_z points along the worst-case direction;
// polar coordinates (r, theta) map to r cos(theta) e_z + r sin(theta) e_x.
struct PlaneFrame {
  std::shared_ptr<const TermTable> table;
  Eigen::VectorXd e_z;
  Eigen::VectorXd e_x;

  void validate() const;
};

// l i.i.d. normals with variance 1/l.
CoeffVector sample_coeffs(std::shared_ptr<const TermTable> table, RngStream& rng);
Eigen::VectorXd sample_coeff_values(const EnsembleParams& params, RngStream& rng);

// Haar-random plane through g_worst and the origin: e_z = normalize(g_worst),
// e_x = Gram-Schmidt of a uniform direction.
PlaneFrame sample_plane(const CoeffVector& g_worst, RngStream& rng);

CoeffVector embed(const PlaneFrame& frame, double r, double theta);

// Radius of an l-dimensional draw from N(0, sigma^2 I): a scaled chi(l).
double sample_radius(const EnsembleParams& params, RngStream& rng);

// X = cos(theta) with theta from the angular marginal sin^{l-2}(theta);
// sampled as the first coordinate of a uniform direction in R^l.
double sample_angle_x(int l, RngStream& rng);

// D(X) = C_l (1 - X^2)^{(l-3)/2} with C_l = Gamma(l/2)/(sqrt(pi) Gamma((l-1)/2)).
double angular_density(double x, int l);

// Gautschi bounds on the prefactor: sqrt((l-2)/2pi) < C_l < sqrt(l/2pi).
double angular_density_prefactor(int l);

// rho_R(r) = r^{l-1} exp(-r^2 / 2 sigma^2) / (2^{l/2-1} Gamma(l/2) sigma^l).
double radial_density(double r, const EnsembleParams& params);

// E[R] = sigma sqrt(2) Gamma((l+1)/2) / Gamma(l/2); E[R^2] = l sigma^2.
double radial_mean(const EnsembleParams& params);

// Coefficient sign flips realizing Z^mask H Z^mask; an involution and isometry.
CoeffVector conjugate_coeffs(const CoeffVector& coeffs, const std::vector<int>& mask);

// Survival function of the chi-square distribution with `dof` degrees of
// freedom: the p-value of a goodness-of-fit statistic.
double chi_square_sf(double x, int dof);

}  // namespace quench
