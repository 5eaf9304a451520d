#include "quench/gaussian_geometry.hpp"

#include <cmath>

namespace quench {

void PlaneFrame::validate() const {
  if (!table) throw std::invalid_argument("PlaneFrame without term table");
  const double tol = 1e-12;
  if (std::abs(e_z.norm() - 1.0) > tol || std::abs(e_x.norm() - 1.0) > tol) {
    throw std::invalid_argument("frame axes not unit length");
  }
  if (std::abs(e_z.dot(e_x)) > tol) throw std::invalid_argument("frame axes not orthogonal");
}

Eigen::VectorXd sample_coeff_values(const EnsembleParams& params, RngStream& rng) {
  params.validate();
  Eigen::VectorXd v(params.l);
  const double s = params.sigma();
  for (int i = 0; i < params.l; ++i) v(i) = s * rng.normal();
  return v;
}

CoeffVector sample_coeffs(std::shared_ptr<const TermTable> table, RngStream& rng) {
  EnsembleParams params{table->l()};
  return CoeffVector{std::move(table), sample_coeff_values(params, rng)};
}

PlaneFrame sample_plane(const CoeffVector& g_worst, RngStream& rng) {
  g_worst.validate();
  const double gnorm = g_worst.values.norm();
  if (gnorm <= 0.0) throw std::invalid_argument("cannot frame a plane on the zero vector");
  const int l = g_worst.l();

  Eigen::VectorXd e_z = g_worst.values / gnorm;
  Eigen::VectorXd e_x(l);
  for (;;) {
    for (int i = 0; i < l; ++i) e_x(i) = rng.normal();
    e_x -= e_x.dot(e_z) * e_z;
    const double nrm = e_x.norm();
    if (nrm > 1e-9) {
      e_x /= nrm;
      break;
    }
  }
  return PlaneFrame{g_worst.table, std::move(e_z), std::move(e_x)};
}

CoeffVector embed(const PlaneFrame& frame, double r, double theta) {
  if (r < 0) throw std::invalid_argument("radius must be >= 0");
  Eigen::VectorXd v = r * std::cos(theta) * frame.e_z + r * std::sin(theta) * frame.e_x;
  return CoeffVector{frame.table, std::move(v)};
}

double sample_radius(const EnsembleParams& params, RngStream& rng) {
  params.validate();
  double sum = 0.0;
  for (int i = 0; i < params.l; ++i) {
    const double z = rng.normal();
    sum += z * z;
  }
  return params.sigma() * std::sqrt(sum);
}

double sample_angle_x(int l, RngStream& rng) {
  if (l < 2) throw std::invalid_argument("angle marginal needs l >= 2");
  double first = rng.normal();
  double sum = first * first;
  for (int i = 1; i < l; ++i) {
    const double z = rng.normal();
    sum += z * z;
  }
  return first / std::sqrt(sum);
}

double angular_density_prefactor(int l) {
  if (l <= 3) throw std::invalid_argument("angular density needs l > 3");
  const double log_c =
      std::lgamma(l / 2.0) - 0.5 * std::log(M_PI) - std::lgamma((l - 1) / 2.0);
  return std::exp(log_c);
}

double angular_density(double x, int l) {
  if (std::abs(x) > 1.0) throw std::domain_error("angular variable outside [-1, 1]");
  const double c = angular_density_prefactor(l);
  if (std::abs(x) == 1.0) return 0.0;
  const double log_val = std::log(c) + 0.5 * (l - 3) * std::log1p(-x * x);
  return std::exp(log_val);
}

double radial_density(double r, const EnsembleParams& params) {
  params.validate();
  if (r < 0) throw std::domain_error("radius must be >= 0");
  if (r == 0.0) return params.l == 1 ? radial_density(1e-300, params) : 0.0;
  const int l = params.l;
  const double s2 = params.sigma2();
  const double log_norm =
      -((l / 2.0) - 1.0) * std::log(2.0) - std::lgamma(l / 2.0) - 0.5 * l * std::log(s2);
  const double log_val = log_norm + (l - 1) * std::log(r) - r * r / (2.0 * s2);
  return std::exp(log_val);
}

double radial_mean(const EnsembleParams& params) {
  params.validate();
  const int l = params.l;
  return params.sigma() * std::sqrt(2.0) *
         std::exp(std::lgamma((l + 1) / 2.0) - std::lgamma(l / 2.0));
}

CoeffVector conjugate_coeffs(const CoeffVector& coeffs, const std::vector<int>& mask) {
  coeffs.validate();
  if (static_cast<int>(mask.size()) != coeffs.table->n()) {
    throw std::invalid_argument("mask length != qubit count");
  }
  CoeffVector out = coeffs;
  const auto& terms = coeffs.table->terms();
  for (int i = 0; i < coeffs.l(); ++i) {
    out.values(i) *= z_conjugation_sign(terms[i], mask);
  }
  return out;
}

namespace {

// Regularized lower incomplete gamma P(a, x): series for x < a + 1, the
// Lentz continued fraction for the complement otherwise.
double gamma_p(double a, double x) {
  if (x < 0 || a <= 0) throw std::domain_error("gamma_p needs a > 0, x >= 0");
  if (x == 0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace

double chi_square_sf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("need dof >= 1");
  if (x <= 0) return 1.0;
  return 1.0 - gamma_p(dof / 2.0, x / 2.0);
}

}  // namespace quench
