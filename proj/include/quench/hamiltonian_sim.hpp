#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "quench/lattice_pauli.hpp"

namespace quench {

// Coefficient vector g over a term table: H(g) = sum_i g_i P_i. The canonical
// term ordering makes `values` the coordinate system shared by every module.
struct CoeffVector {
  std::shared_ptr<const TermTable> table;
  Eigen::VectorXd values;

  void validate() const;
  int l() const { return static_cast<int>(values.size()); }
};

CoeffVector zero_coeffs(std::shared_ptr<const TermTable> table);

// Time evolution of Z^y |+^n> under H(coeffs) for time tau, projected back
// onto |+^n>.
struct EvolutionSpec {
  CoeffVector coeffs;
  double tau = 1.0;
  std::vector<int> input_mask;  // y; empty means all-zero

  void validate() const;
};

// Nearest-neighbor Ising family H_S = sum J_ij Z_i Z_j - sum h_i Z_i
// + (pi/8 tau) sum_{j in S} Z_j. Entries of J follow the lattice edge order.
struct WorstCaseSpec {
  std::vector<int> subset;      // indicator over vertices
  std::vector<double> couplings;  // per edge
  std::vector<double> fields;     // per vertex
  double tau = 1.0;
};

Eigen::MatrixXcd build_hamiltonian(const CoeffVector& coeffs);

// H(coeffs) * v without materializing H.
Eigen::VectorXcd apply_hamiltonian(const CoeffVector& coeffs, const Eigen::VectorXcd& v);

// |<+^n| e^{-i H tau} Z^y |+^n>|^2 via Hermitian eigendecomposition.
double output_probability(const EvolutionSpec& spec);

// The unitary e^{-i H tau} itself (test oracle for unitarity checks).
Eigen::MatrixXcd evolution_operator(const CoeffVector& coeffs, double tau);

// Squared truncated-series amplitude |<+| sum_{k<=m} (-iHt)^k/k! Z^y |+>|^2.
// Equals the degree-2m polynomial surrogate of the output probability,
// evaluated without expanding monomials.
double taylor_probability(const EvolutionSpec& spec, int m);

// 2 e^{h t} (e h t / m)^{m+1}; requires m > e*h*t so the geometric tail sums.
double taylor_error_bound(double h_norm, double t, int m);

// min(||g||_1, sqrt(l) ||g||_2), an upper bound on ||H(g)||.
double spectral_norm_bound(const CoeffVector& coeffs);

// Exact ||H(g)|| by eigendecomposition (test oracle; dense cap applies).
double exact_spectral_norm(const CoeffVector& coeffs);

CoeffVector worst_case_coeffs(const WorstCaseSpec& spec, std::shared_ptr<const TermTable> table);

// H_{S,y} = H_S + (pi / 2 tau) sum_k y_k Z_k, as a coefficient shift.
CoeffVector shift_coeffs(const CoeffVector& coeffs, const std::vector<int>& y, double tau);

// | |<+|Z^x e^{-iHt} Z^y|+>|^2 - |<+| e^{-i(Z^x H Z^x)t} Z^{x xor y}|+>|^2 |,
// with the conjugated Hamiltonian realized by coefficient sign flips.
double hiding_identity_residual(const CoeffVector& coeffs, const std::vector<int>& x,
                                const std::vector<int>& y, double tau);

}  // namespace quench
