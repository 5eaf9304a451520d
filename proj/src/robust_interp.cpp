#include "quench/robust_interp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <tuple>

#include "quench/gaussian_geometry.hpp"

namespace quench {

namespace {

constexpr double kLpTol = 1e-9;  // additive feasibility slack on every right-hand side

template <typename F>
double simpson(double a, double b, int panels, F f) {
  const double h = (b - a) / (2 * panels);
  double sum = f(a) + f(b);
  for (int i = 1; i < 2 * panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

double binom(int n, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v = v * (n - i) / (i + 1);
  return v;
}

enum class Basis { Monomial, Chebyshev };

Eigen::VectorXd basis_row(Basis basis, double u, int deg) {
  Eigen::VectorXd row(deg + 1);
  row(0) = 1.0;
  if (deg == 0) return row;
  row(1) = u;
  for (int j = 2; j <= deg; ++j) {
    row(j) = basis == Basis::Monomial ? row(j - 1) * u : 2.0 * u * row(j - 1) - row(j - 2);
  }
  return row;
}

double eval_monic(const Eigen::VectorXd& s_low, double u) {
  const int k = static_cast<int>(s_low.size());
  double v = 1.0;  // leading monic term, filled in by Horner below
  for (int j = k - 1; j >= 0; --j) v = v * u + s_low(j);
  return v;
}

void check_separation(const std::vector<double>& xs, double delta) {
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] < delta * (1.0 - 1e-9)) {
      throw std::invalid_argument("nodes are not delta-separated");
    }
  }
}

Eigen::VectorXd least_squares_fit(Basis basis, const std::vector<double>& u,
                                  const std::vector<double>& y, const std::vector<int>& idx,
                                  int deg) {
  Eigen::MatrixXd a(idx.size(), deg + 1);
  Eigen::VectorXd b(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    a.row(r) = basis_row(basis, u[idx[r]], deg);
    b(r) = y[idx[r]];
  }
  return a.colPivHouseholderQr().solve(b);
}

struct CoreResult {
  Eigen::VectorXd q;  // coefficients in the working basis
  Eigen::VectorXd s;  // locator: s_0..s_{k-1}, monic degree k implied
  std::vector<int> kept;
  bool lp2_solved = false;
};

// The two feasibility programs of the robust decoder, followed by a
// least-squares refit on the nodes where the locator is bounded away from
// zero. Operates on nodes already mapped into [-1, 1].
CoreResult rbw_core(Basis basis, const std::vector<double>& u, const std::vector<double>& y,
                    int k, double delta, double eps, int deg_q) {
  const int n = static_cast<int>(u.size());
  if (n == 0) throw std::invalid_argument("no samples");
  if (k < 0 || (k > 0 && k >= n)) throw std::invalid_argument("need 0 <= k < n");
  if (deg_q < 0 || deg_q > n - 2 * k - 1) {
    throw std::invalid_argument("degree bound must satisfy deg <= n - 2k - 1");
  }
  if (eps < 0 || !(delta > 0)) throw std::invalid_argument("need eps >= 0, delta > 0");
  for (double ui : u) {
    if (std::abs(ui) > 1.0 + 1e-12) throw std::invalid_argument("nodes must lie in [-1, 1]");
  }
  check_separation(u, delta);

  CoreResult res;
  if (k == 0) {
    res.kept.resize(n);
    for (int i = 0; i < n; ++i) res.kept[i] = i;
    res.q = least_squares_fit(basis, u, y, res.kept, deg_q);
    res.s = Eigen::VectorXd::Zero(0);
    return res;
  }

  // Program 1: r of degree <= deg_q + k and monic s of degree k with
  // |s_j| <= C(k, j), such that |r(u_i) - y_i s(u_i)| <= 2^k eps everywhere.
  const int nr = deg_q + k + 1;
  const int nvars = nr + k;
  const double rhs1 = std::ldexp(eps, k) + kLpTol;
  std::vector<LinearConstraint> lp1;
  lp1.reserve(2 * n + 2 * k);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(nvars);
    a.head(nr) = basis_row(basis, u[i], deg_q + k);
    double uj = 1.0;
    for (int j = 0; j < k; ++j) {
      a(nr + j) = -y[i] * uj;
      uj *= u[i];
    }
    const double lead = y[i] * uj;  // y_i u_i^k, the fixed monic part
    lp1.push_back({a, rhs1 + lead});
    lp1.push_back({-a, rhs1 - lead});
  }
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(nvars);
    a(nr + j) = 1.0;
    const double c = binom(k, j);
    lp1.push_back({a, c});
    lp1.push_back({-a, c});
  }
  LpResult sol1 = solve_linear_feasibility(lp1, nvars, kLpTol);
  if (sol1.status == LpStatus::NumericalFailure) {
    sol1 = solve_linear_feasibility(lp1, nvars, 100.0 * kLpTol);
  }
  if (sol1.status == LpStatus::Infeasible) {
    throw AssumptionViolated("locator program infeasible: epsilon or k understated");
  }
  if (sol1.status != LpStatus::Feasible) {
    throw std::runtime_error("solver failed on the locator program: " + sol1.detail);
  }
  res.s = sol1.point.tail(k);

  // Nodes the locator nearly kills are the suspects; fit on the rest. A monic
  // degree-k polynomial cannot stay below delta^k/(k+1) on k+1 separated
  // nodes, so enough survive. Top up by |s| if the threshold over-prunes.
  const double floor_val = leading_coeff_floor(delta, k);
  std::vector<double> s_abs(n);
  for (int i = 0; i < n; ++i) s_abs[i] = std::abs(eval_monic(res.s, u[i]));
  for (int i = 0; i < n; ++i) {
    if (s_abs[i] > floor_val) res.kept.push_back(i);
  }
  if (static_cast<int>(res.kept.size()) < deg_q + 1) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return s_abs[a] > s_abs[b]; });
    res.kept.assign(order.begin(), order.begin() + deg_q + 1);
    std::sort(res.kept.begin(), res.kept.end());
  }
  res.q = least_squares_fit(basis, u, y, res.kept, deg_q);

  // Trimmed refinement: with many suspects allowed (large k, small delta)
  // the locator floor is tiny and corrupted nodes can slip past it, and a
  // contaminated least-squares fit inflates every residual, so outliers
  // cannot be judged against that first fit. Concentrate instead: refit on
  // the min_keep best-fitting nodes until the subset stabilizes (the model
  // promises n - 2k clean nodes, so min_keep of them exist), then re-admit
  // every candidate consistent with the concentrated fit.
  if (static_cast<int>(res.kept.size()) > deg_q + 1) {
    const int min_keep = std::max(deg_q + 1, n - 2 * k);
    const std::vector<int> pool = res.kept;
    auto resid_of = [&](int i) {
      return std::abs(basis_row(basis, u[i], deg_q).dot(res.q) - y[i]);
    };
    auto concentrate = [&](std::vector<int> start) {
      Eigen::VectorXd q = least_squares_fit(basis, u, y, start, deg_q);
      std::vector<int> subset = std::move(start);
      for (int iter = 0; iter < 20 && static_cast<int>(pool.size()) > min_keep; ++iter) {
        std::vector<int> order = pool;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
          return std::abs(basis_row(basis, u[a], deg_q).dot(q) - y[a]) <
                 std::abs(basis_row(basis, u[b], deg_q).dot(q) - y[b]);
        });
        std::vector<int> next(order.begin(), order.begin() + min_keep);
        std::sort(next.begin(), next.end());
        if (next == subset) break;
        subset = std::move(next);
        q = least_squares_fit(basis, u, y, subset, deg_q);
      }
      // Judge a candidate by how many pool nodes it explains, not by its
      // subset residual: a high-degree fit can near-interpolate a small
      // contaminated subset, but only the clean model fits the clean bulk.
      const double band = 10.0 * (eps + kLpTol);
      int inliers = 0;
      double obj = 0.0;
      for (int i : pool) {
        const double r = basis_row(basis, u[i], deg_q).dot(q) - y[i];
        if (std::abs(r) <= band) {
          ++inliers;
          obj += r * r;
        }
      }
      return std::make_tuple(inliers, obj, std::move(subset), std::move(q));
    };

    // A single concentration run can stall on a fixed point that still
    // tracks an outlier, so race it against random elemental starts. The
    // engine is seeded from the data, keeping the whole decode a pure
    // function of its inputs.
    std::uint64_t mix = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(n);
    for (double yi : y) {
      std::uint64_t bits;
      std::memcpy(&bits, &yi, sizeof bits);
      mix = (mix ^ bits) * 0x100000001b3ull;
    }
    std::mt19937_64 gen(mix);
    auto [best_in, best_obj, subset, best_q] = concentrate(pool);
    res.q = best_q;
    // With at most k corrupted nodes a clean fit explains all but k of the
    // pool, so stop as soon as a start reaches that; the cap only matters
    // when corruption is heavy.
    const int good_in = std::max(min_keep, static_cast<int>(pool.size()) - k);
    const int starts = static_cast<int>(pool.size()) > min_keep ? 200 : 0;
    for (int s = 0; s < starts && best_in < good_in; ++s) {
      std::vector<int> start = pool;
      std::shuffle(start.begin(), start.end(), gen);
      start.resize(deg_q + 1);
      std::sort(start.begin(), start.end());
      auto [in, obj, sub, q] = concentrate(std::move(start));
      if (in > best_in || (in == best_in && obj < best_obj)) {
        best_in = in;
        best_obj = obj;
        subset = std::move(sub);
        res.q = std::move(q);
      }
    }
    std::vector<double> in_resid;
    in_resid.reserve(subset.size());
    for (int i : subset) in_resid.push_back(resid_of(i));
    std::nth_element(in_resid.begin(), in_resid.begin() + in_resid.size() / 2, in_resid.end());
    const double median = in_resid[in_resid.size() / 2];
    const double cutoff = 25.0 * median + 10.0 * (eps + kLpTol);
    res.kept.clear();
    for (int i : pool) {
      if (resid_of(i) <= cutoff) res.kept.push_back(i);
    }
    if (static_cast<int>(res.kept.size()) < deg_q + 1) res.kept = subset;
    if (res.kept != subset) res.q = least_squares_fit(basis, u, y, res.kept, deg_q);
  }

  // Program 2: q with |(q(u_i) - y_i) s(u_i)| <= (10/delta)^n (eps + tol).
  // The refit is usually already feasible for it; solve only when not.
  const double log10_rhs =
      n * std::log10(10.0 / delta) + std::log10(eps + kLpTol);
  const double rhs2 = kLpTol + (log10_rhs > 300.0 ? 1e300 : std::pow(10.0, log10_rhs));
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double si = eval_monic(res.s, u[i]);
    const double qi = basis_row(basis, u[i], deg_q).dot(res.q);
    worst = std::max(worst, std::abs((qi - y[i]) * si));
  }
  if (worst <= rhs2) return res;

  std::vector<LinearConstraint> lp2;
  lp2.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    const double si = eval_monic(res.s, u[i]);
    Eigen::VectorXd a = si * basis_row(basis, u[i], deg_q);
    lp2.push_back({a, rhs2 + si * y[i]});
    lp2.push_back({-a, rhs2 - si * y[i]});
  }
  LpResult sol2 = solve_linear_feasibility(lp2, deg_q + 1, kLpTol);
  if (sol2.status == LpStatus::NumericalFailure) {
    sol2 = solve_linear_feasibility(lp2, deg_q + 1, 100.0 * kLpTol);
  }
  if (sol2.status == LpStatus::Infeasible) {
    throw AssumptionViolated("evaluation program infeasible: epsilon or k understated");
  }
  if (sol2.status != LpStatus::Feasible) {
    throw std::runtime_error("solver failed on the evaluation program: " + sol2.detail);
  }
  res.q = sol2.point;
  res.lp2_solved = true;
  return res;
}

}  // namespace

double Polynomial::eval(double x) const {
  double v = 0.0;
  for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j) v = v * x + coeffs(j);
  return v;
}

void Polynomial::trim() {
  int sz = static_cast<int>(coeffs.size());
  while (sz > 1 && coeffs(sz - 1) == 0.0) --sz;
  coeffs.conservativeResize(std::max(sz, 1));
}

int BinFamily::find_bin(double x) const {
  auto it = std::upper_bound(intervals.begin(), intervals.end(), x,
                             [](double v, const Interval& iv) { return v < iv.a; });
  if (it == intervals.begin()) return -1;
  --it;
  if (x > it->b) return -1;
  return static_cast<int>(it - intervals.begin());
}

std::vector<std::pair<int, double>> delta_separated_subset(const std::vector<double>& samples,
                                                           const BinFamily& bins) {
  std::vector<std::pair<int, double>> out;
  std::vector<char> occupied(bins.intervals.size(), 0);
  for (double s : samples) {
    const int b = bins.find_bin(s);
    if (b >= 0 && !occupied[b]) {
      occupied[b] = 1;
      out.emplace_back(b, s);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

BinFamily make_bins_circumference(int l, int B, double radius_factor) {
  if (l <= 3) throw std::invalid_argument("bin family needs l > 3");
  if (B < 1) throw std::invalid_argument("need at least one bin");
  if (!(radius_factor > 0)) throw std::invalid_argument("radius factor must be positive");
  const double r = radius_factor / std::sqrt(static_cast<double>(l));
  if (r >= 1.0) throw std::invalid_argument("bin interval [-r, r] must stay inside (-1, 1)");
  BinFamily fam;
  fam.delta = r / B;
  fam.intervals.reserve(B);
  for (int k = 0; k < B; ++k) {
    fam.intervals.push_back({-r + 2 * k * fam.delta, -r + (2 * k + 1) * fam.delta});
  }
  // The density decreases in |x|, so the leftmost bin is the lightest.
  fam.p_min = simpson(fam.intervals.front().a, fam.intervals.front().b, 64,
                      [l](double x) { return angular_density(x, l); });
  return fam;
}

BinFamily make_bins_radial(int l, int B) {
  if (l <= 3) throw std::invalid_argument("bin family needs l > 3");
  if (B < 1) throw std::invalid_argument("need at least one bin");
  const double lo = 1.0 - 1.0 / std::sqrt(static_cast<double>(l));
  BinFamily fam;
  fam.delta = (1.0 / std::sqrt(static_cast<double>(l))) / (2.0 * B);
  fam.intervals.reserve(B);
  for (int k = 0; k < B; ++k) {
    fam.intervals.push_back({lo + 2 * k * fam.delta, lo + (2 * k + 1) * fam.delta});
  }
  const EnsembleParams params{l};
  auto mass = [&](const Interval& iv) {
    return simpson(iv.a, iv.b, 64, [&](double r) { return radial_density(r, params); });
  };
  fam.p_min = std::min(mass(fam.intervals.front()), mass(fam.intervals.back()));
  return fam;
}

double radial_p_min_formula(int B) {
  return 1.0 / (2.0 * B * std::exp(1.0) * std::sqrt(M_PI));
}

double lagrange_eval(const std::vector<double>& nodes, const std::vector<double>& values,
                     double x) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0 || values.size() != nodes.size()) {
    throw std::invalid_argument("need matching, nonempty nodes and values");
  }
  // Capacity scaling keeps the barycentric weights in range for many nodes.
  const auto [mn, mx] = std::minmax_element(nodes.begin(), nodes.end());
  const double cap = *mx > *mn ? 4.0 / (*mx - *mn) : 1.0;
  std::vector<double> w(n, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = nodes[i] - nodes[j];
      if (d == 0.0) throw std::invalid_argument("duplicate interpolation nodes");
      w[i] /= cap * d;
    }
  }
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    if (x == nodes[i]) return values[i];
    const double c = w[i] / (x - nodes[i]);
    num += c * values[i];
    den += c;
  }
  return num / den;
}

double remez_extrapolation_bound(double delta, int d, double L) {
  return std::pow(10.0, log10_remez_extrapolation_bound(delta, d, L));
}

double log10_remez_extrapolation_bound(double delta, int d, double L) {
  if (!(delta > 0) || !(L > 0) || d < 1) throw std::invalid_argument("need delta, L > 0, d >= 1");
  return d * std::log10(std::exp(2.0) * L / (delta * d));
}

double remez_interior_bound(double delta, int d) {
  return std::pow(10.0, log10_remez_interior_bound(delta, d));
}

double log10_remez_interior_bound(double delta, int d) {
  if (!(delta > 0) || d < 0) throw std::invalid_argument("need delta > 0, d >= 0");
  return (d * (std::log(2.0) - std::log(delta)) - std::lgamma(d + 1.0)) / std::log(10.0);
}

double leading_coeff_floor(double delta, int d) {
  if (!(delta > 0) || d < 0) throw std::invalid_argument("need delta > 0, d >= 0");
  return std::pow(delta, d) / (d + 1);
}

Polynomial classic_berlekamp_welch(const std::vector<double>& xs, const std::vector<double>& ys,
                                   int k, int deg_bound) {
  const int n = static_cast<int>(xs.size());
  if (ys.size() != xs.size()) throw std::invalid_argument("mismatched sample arrays");
  if (k < 0 || deg_bound < 0 || deg_bound > n - 2 * k - 1) {
    throw std::invalid_argument("need 0 <= deg_bound <= n - 2k - 1");
  }
  double ymax = 1.0;
  for (double y : ys) ymax = std::max(ymax, std::abs(y));

  // Q(x_i) = y_i E(x_i) with E monic of degree k and deg Q <= deg_bound + k.
  const int nq = deg_bound + k + 1;
  Eigen::MatrixXd a(n, nq + k);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    a.row(i).head(nq) = basis_row(Basis::Monomial, xs[i], nq - 1);
    double xj = 1.0;
    for (int j = 0; j < k; ++j) {
      a(i, nq + j) = -ys[i] * xj;
      xj *= xs[i];
    }
    b(i) = ys[i] * xj;
  }
  Eigen::VectorXd z = a.colPivHouseholderQr().solve(b);
  if ((a * z - b).lpNorm<Eigen::Infinity>() > 1e-6 * ymax) {
    throw UnrecoverableError("locator system inconsistent: too many corruptions");
  }

  // Synthetic division Q / E; a nonzero remainder means decoding failed.
  Eigen::VectorXd q = z.head(nq);
  Eigen::VectorXd e(k + 1);
  e.head(k) = z.tail(k);
  e(k) = 1.0;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(deg_bound + 1);
  Eigen::VectorXd rem = q;
  for (int d = deg_bound; d >= 0; --d) {
    const double c = rem(d + k);
    p(d) = c;
    for (int j = 0; j <= k; ++j) rem(d + j) -= c * e(j);
  }
  if (rem.lpNorm<Eigen::Infinity>() > 1e-6 * std::max(1.0, q.lpNorm<Eigen::Infinity>())) {
    throw UnrecoverableError("locator does not divide the numerator");
  }
  Polynomial out{p};
  out.trim();
  return out;
}

Polynomial robust_berlekamp_welch(const std::vector<double>& xs, const std::vector<double>& ys,
                                  int k, double delta, double epsilon, RbwDiagnostics* diag) {
  if (ys.size() != xs.size()) throw std::invalid_argument("mismatched sample arrays");
  const int n = static_cast<int>(xs.size());
  const int deg_q = n - 2 * k - 1;
  CoreResult res = rbw_core(Basis::Monomial, xs, ys, k, delta, epsilon, deg_q);
  if (diag) {
    diag->locator = res.s;
    diag->kept_nodes = res.kept;
    diag->lp2_solved = res.lp2_solved;
  }
  Polynomial out{res.q};
  out.trim();
  return out;
}

double ChebyshevFit::eval(double x) const {
  const double u = (2.0 * x - lo - hi) / (hi - lo);
  double b1 = 0.0, b2 = 0.0;
  for (int j = static_cast<int>(coeffs.size()) - 1; j >= 1; --j) {
    const double b0 = 2.0 * u * b1 - b2 + coeffs(j);
    b2 = b1;
    b1 = b0;
  }
  return u * b1 - b2 + coeffs(0);
}

ChebyshevFit robust_chebyshev_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                                  int k, double delta, double epsilon, int deg_bound, double lo,
                                  double hi, RbwDiagnostics* diag) {
  if (ys.size() != xs.size()) throw std::invalid_argument("mismatched sample arrays");
  if (!(hi > lo)) throw std::invalid_argument("need hi > lo");
  const double scale = 2.0 / (hi - lo);
  std::vector<double> u(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) u[i] = (2.0 * xs[i] - lo - hi) / (hi - lo);
  CoreResult res = rbw_core(Basis::Chebyshev, u, ys, k, delta * scale, epsilon, deg_bound);
  if (diag) {
    diag->locator = res.s;
    diag->kept_nodes = res.kept;
    diag->lp2_solved = res.lp2_solved;
  }
  return ChebyshevFit{lo, hi, res.q};
}

std::string noisy_samples_to_csv(const std::vector<NoisySample>& samples) {
  std::ostringstream os;
  os.precision(17);
  os << "x,y,provenance\n";
  for (const auto& s : samples) {
    const char* tag = s.provenance == Provenance::Clean
                          ? "clean"
                          : s.provenance == Provenance::Corrupted ? "corrupted" : "unknown";
    os << s.x << "," << s.y << "," << tag << "\n";
  }
  return os.str();
}

std::vector<NoisySample> noisy_samples_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<NoisySample> out;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("x,", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string fx, fy, fp;
    if (!std::getline(ls, fx, ',') || !std::getline(ls, fy, ',')) {
      throw std::invalid_argument("malformed sample row: " + line);
    }
    std::getline(ls, fp, ',');
    NoisySample s;
    s.x = std::stod(fx);
    s.y = std::stod(fy);
    s.provenance = fp == "clean" ? Provenance::Clean
                                 : fp == "corrupted" ? Provenance::Corrupted : Provenance::Unknown;
    out.push_back(s);
  }
  return out;
}

}  // namespace quench
