#include "quench/hamiltonian_sim.hpp"

#include <cmath>

#include "quench/gaussian_geometry.hpp"

namespace quench {

using cplx = std::complex<double>;

namespace {

// Z^y |+^n> as a state vector: uniform amplitudes with parity signs.
Eigen::VectorXcd masked_plus_state(int n, const std::vector<int>& mask) {
  const std::int64_t dim = std::int64_t{1} << n;
  const double amp = 1.0 / std::sqrt(static_cast<double>(dim));
  Eigen::VectorXcd v(dim);
  for (std::int64_t z = 0; z < dim; ++z) {
    int par = 0;
    for (int s = 0; s < n; ++s) {
      if (s < static_cast<int>(mask.size()) && mask[s] && ((z >> s) & 1)) par ^= 1;
    }
    v(z) = par ? -amp : amp;
  }
  return v;
}

std::vector<int> xor_masks(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int ai = i < a.size() ? a[i] : 0;
    int bi = i < b.size() ? b[i] : 0;
    out[i] = ai ^ bi;
  }
  return out;
}

cplx evolved_amplitude(const CoeffVector& coeffs, double tau, const std::vector<int>& in_mask,
                       const std::vector<int>& out_mask) {
  const int n = coeffs.table->n();
  Eigen::MatrixXcd h = build_hamiltonian(coeffs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXcd& vec = es.eigenvectors();

  Eigen::VectorXcd in = masked_plus_state(n, in_mask);
  Eigen::VectorXcd out = masked_plus_state(n, out_mask);
  Eigen::VectorXcd in_e = vec.adjoint() * in;
  Eigen::VectorXcd out_e = vec.adjoint() * out;
  cplx amp = 0.0;
  for (int i = 0; i < lam.size(); ++i) {
    amp += std::conj(out_e(i)) * std::exp(cplx(0, -lam(i) * tau)) * in_e(i);
  }
  return amp;
}

}  // namespace

void CoeffVector::validate() const {
  if (!table) throw std::invalid_argument("CoeffVector without term table");
  if (values.size() != table->l()) throw std::invalid_argument("coefficient length != table.l");
  if (!values.allFinite()) throw std::invalid_argument("non-finite coefficient");
}

CoeffVector zero_coeffs(std::shared_ptr<const TermTable> table) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(table->l());
  return CoeffVector{std::move(table), std::move(v)};
}

void EvolutionSpec::validate() const {
  coeffs.validate();
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  if (!input_mask.empty() && static_cast<int>(input_mask.size()) != coeffs.table->n()) {
    throw std::invalid_argument("input mask length != qubit count");
  }
}

Eigen::MatrixXcd build_hamiltonian(const CoeffVector& coeffs) {
  coeffs.validate();
  const int n = coeffs.table->n();
  if (n > kMaxDenseQubits) throw ResourceError("dense cap exceeded");
  const std::int64_t dim = std::int64_t{1} << n;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  const auto& terms = coeffs.table->terms();
  for (int i = 0; i < coeffs.l(); ++i) {
    const double g = coeffs.values(i);
    if (g == 0.0) continue;
    const PauliTerm& t = terms[i];
    std::int64_t flip = 0;
    for (std::size_t j = 0; j < t.sites.size(); ++j) {
      if (t.letters[j] != PauliLetter::Z) flip |= std::int64_t{1} << t.sites[j];
    }
    for (std::int64_t col = 0; col < dim; ++col) {
      cplx phase(g, 0.0);
      for (std::size_t j = 0; j < t.sites.size(); ++j) {
        const bool bit = (col >> t.sites[j]) & 1;
        switch (t.letters[j]) {
          case PauliLetter::X: break;
          case PauliLetter::Y: phase *= bit ? cplx(0, -1) : cplx(0, 1); break;
          case PauliLetter::Z: phase *= bit ? -1.0 : 1.0; break;
        }
      }
      h(col ^ flip, col) += phase;
    }
  }
  return h;
}

Eigen::VectorXcd apply_hamiltonian(const CoeffVector& coeffs, const Eigen::VectorXcd& v) {
  const auto& terms = coeffs.table->terms();
  const std::int64_t dim = v.size();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
  for (int i = 0; i < coeffs.l(); ++i) {
    const double g = coeffs.values(i);
    if (g == 0.0) continue;
    const PauliTerm& t = terms[i];
    std::int64_t flip = 0;
    for (std::size_t j = 0; j < t.sites.size(); ++j) {
      if (t.letters[j] != PauliLetter::Z) flip |= std::int64_t{1} << t.sites[j];
    }
    for (std::int64_t col = 0; col < dim; ++col) {
      cplx phase(g, 0.0);
      for (std::size_t j = 0; j < t.sites.size(); ++j) {
        const bool bit = (col >> t.sites[j]) & 1;
        switch (t.letters[j]) {
          case PauliLetter::X: break;
          case PauliLetter::Y: phase *= bit ? cplx(0, -1) : cplx(0, 1); break;
          case PauliLetter::Z: phase *= bit ? -1.0 : 1.0; break;
        }
      }
      out(col ^ flip) += phase * v(col);
    }
  }
  return out;
}

double output_probability(const EvolutionSpec& spec) {
  spec.validate();
  cplx amp = evolved_amplitude(spec.coeffs, spec.tau, spec.input_mask, {});
  return std::norm(amp);
}

Eigen::MatrixXcd evolution_operator(const CoeffVector& coeffs, double tau) {
  Eigen::MatrixXcd h = build_hamiltonian(coeffs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXcd& vec = es.eigenvectors();
  Eigen::VectorXcd ph(lam.size());
  for (int i = 0; i < lam.size(); ++i) ph(i) = std::exp(cplx(0, -lam(i) * tau));
  return vec * ph.asDiagonal() * vec.adjoint();
}

double taylor_probability(const EvolutionSpec& spec, int m) {
  spec.validate();
  if (m < 0) throw std::invalid_argument("truncation order must be >= 0");
  const int n = spec.coeffs.table->n();
  Eigen::VectorXcd v = masked_plus_state(n, spec.input_mask);
  Eigen::VectorXcd out = masked_plus_state(n, {});

  cplx amp = 0.0;
  cplx ck(1.0, 0.0);  // (-i tau)^k / k!
  for (int k = 0; k <= m; ++k) {
    if (k > 0) {
      v = apply_hamiltonian(spec.coeffs, v);
      ck *= cplx(0, -spec.tau) / static_cast<double>(k);
    }
    amp += ck * out.dot(v);
  }
  return std::norm(amp);
}

double taylor_error_bound(double h_norm, double t, int m) {
  if (h_norm < 0 || t < 0) throw std::invalid_argument("negative norm or time");
  const double c = std::exp(1.0) * h_norm * t;
  if (h_norm == 0.0) return 0.0;
  if (m <= c) {
    throw std::invalid_argument("truncation order too small: need m > e*||H||*t");
  }
  return 2.0 * std::exp(h_norm * t) * std::pow(c / m, m + 1);
}

double spectral_norm_bound(const CoeffVector& coeffs) {
  coeffs.validate();
  const double l1 = coeffs.values.lpNorm<1>();
  const double l2 = coeffs.values.norm();
  return std::min(l1, std::sqrt(static_cast<double>(coeffs.l())) * l2);
}

double exact_spectral_norm(const CoeffVector& coeffs) {
  Eigen::MatrixXcd h = build_hamiltonian(coeffs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

CoeffVector worst_case_coeffs(const WorstCaseSpec& spec, std::shared_ptr<const TermTable> table) {
  const Lattice& lat = table->lattice();
  const int n = lat.sites();
  const auto edges = lat.edges();
  if (static_cast<int>(spec.couplings.size()) != static_cast<int>(edges.size()) ||
      static_cast<int>(spec.fields.size()) != n ||
      static_cast<int>(spec.subset.size()) != n) {
    throw std::invalid_argument("worst-case spec does not match lattice dimensions");
  }
  if (!(spec.tau > 0)) throw std::invalid_argument("tau must be positive");
  for (double j : spec.couplings) {
    if (std::abs(j) > 10.0) throw std::invalid_argument("|J| exceeds O(1) cap");
  }
  for (double h : spec.fields) {
    if (std::abs(h) > 10.0) throw std::invalid_argument("|h| exceeds O(1) cap");
  }

  CoeffVector g = zero_coeffs(table);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    g.values(table->zz_term_index(edges[e].first, edges[e].second)) = spec.couplings[e];
  }
  const double pin = M_PI / (8.0 * spec.tau);
  for (int v = 0; v < n; ++v) {
    g.values(table->z_term_index(v)) = -spec.fields[v] + (spec.subset[v] ? pin : 0.0);
  }
  return g;
}

CoeffVector shift_coeffs(const CoeffVector& coeffs, const std::vector<int>& y, double tau) {
  coeffs.validate();
  if (static_cast<int>(y.size()) != coeffs.table->n()) {
    throw std::invalid_argument("shift mask length != qubit count");
  }
  CoeffVector out = coeffs;
  const double step = M_PI / (2.0 * tau);
  for (int k = 0; k < coeffs.table->n(); ++k) {
    if (y[k]) out.values(coeffs.table->z_term_index(k)) += step;
  }
  return out;
}

double hiding_identity_residual(const CoeffVector& coeffs, const std::vector<int>& x,
                                const std::vector<int>& y, double tau) {
  coeffs.validate();
  const double lhs = std::norm(evolved_amplitude(coeffs, tau, y, x));
  CoeffVector conj = conjugate_coeffs(coeffs, x);
  const double rhs = std::norm(evolved_amplitude(conj, tau, xor_masks(x, y), {}));
  return std::abs(lhs - rhs);
}

}  // namespace quench
