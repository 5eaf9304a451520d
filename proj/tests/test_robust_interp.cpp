#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "quench/gaussian_geometry.hpp"
#include "quench/robust_interp.hpp"
#include "quench/rng.hpp"

using namespace quench;

namespace {

std::vector<double> separated_nodes(int n, double delta, RngStream& rng, double lo = -1.0,
                                    double hi = 1.0) {
  const double slack = (hi - lo) - (n - 1) * delta;
  REQUIRE(slack > 0);
  std::vector<double> cuts(n + 1);
  double sum = 0.0;
  for (auto& c : cuts) {
    c = rng.uniform() + 1e-9;
    sum += c;
  }
  std::vector<double> nodes(n);
  double pos = lo;
  for (int i = 0; i < n; ++i) {
    pos += cuts[i] / sum * slack;
    nodes[i] = pos;
    pos += delta;
  }
  return nodes;
}

Polynomial random_poly(int deg, RngStream& rng) {
  Eigen::VectorXd c(deg + 1);
  for (int i = 0; i <= deg; ++i) c(i) = 2.0 * rng.uniform() - 1.0;
  return {c};
}

double max_coeff_diff(const Polynomial& a, const Polynomial& b) {
  double err = 0.0;
  const int sz = static_cast<int>(std::max(a.coeffs.size(), b.coeffs.size()));
  for (int j = 0; j < sz; ++j) {
    const double x = j < a.coeffs.size() ? a.coeffs(j) : 0.0;
    const double y = j < b.coeffs.size() ? b.coeffs(j) : 0.0;
    err = std::max(err, std::abs(x - y));
  }
  return err;
}

}  // namespace

TEST_CASE("polynomial eval and trim") {
  Polynomial p{Eigen::Vector4d(1.0, 0.0, -2.0, 0.0)};
  CHECK(p.eval(2.0) == doctest::Approx(1.0 - 8.0));
  p.trim();
  CHECK(p.degree() == 2);
  Polynomial zero{Eigen::Vector3d(0.0, 0.0, 0.0)};
  zero.trim();
  CHECK(zero.degree() == 0);
}

TEST_CASE("circumference bins at l=100, B=100") {
  BinFamily fam = make_bins_circumference(100, 100);
  CHECK(fam.delta == doctest::Approx(1e-3));
  CHECK(fam.intervals.size() == 100);
  CHECK(fam.intervals.front().a == doctest::Approx(-0.1));
  CHECK(fam.intervals.back().b == doctest::Approx(0.1 - 1e-3));
  for (const auto& iv : fam.intervals) {
    CHECK(iv.a > -1.0);
    CHECK(iv.b < 1.0);
    CHECK(iv.b - iv.a == doctest::Approx(fam.delta));
  }
  // p_min is Theta(1/l)
  CHECK(fam.p_min > 0.1 / 100);
  CHECK(fam.p_min < 10.0 / 100);
  // the extreme bin really is the lightest: compare with a central bin mass
  const double central = angular_density(0.0, 100) * fam.delta;
  CHECK(fam.p_min < central);
}

TEST_CASE("circumference bins reject bad parameters") {
  CHECK_THROWS_AS(make_bins_circumference(3, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_bins_circumference(100, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_bins_circumference(16, 10, 5.0), std::invalid_argument);  // r >= 1
}

TEST_CASE("radial bins at l=100, B=100") {
  BinFamily fam = make_bins_radial(100, 100);
  CHECK(fam.delta == doctest::Approx(5e-4));
  CHECK(fam.intervals.size() == 100);
  CHECK(fam.intervals.front().a == doctest::Approx(0.9));
  CHECK(fam.intervals.back().b <= 1.0 + 1e-12);
  CHECK(fam.p_min ==
        doctest::Approx(radial_p_min_formula(100)).epsilon(0.10));
}

TEST_CASE("bin lookup is exact on boundaries and gaps") {
  BinFamily fam = make_bins_radial(100, 10);
  CHECK(fam.find_bin(fam.intervals[3].a) == 3);
  CHECK(fam.find_bin(fam.intervals[3].b) == 3);
  const double gap = 0.5 * (fam.intervals[3].b + fam.intervals[4].a);
  CHECK(fam.find_bin(gap) == -1);
  CHECK(fam.find_bin(0.0) == -1);
  CHECK(fam.find_bin(2.0) == -1);
}

TEST_CASE("midpoint samples occupy every bin") {
  BinFamily fam = make_bins_circumference(50, 20);
  std::vector<double> mids;
  for (const auto& iv : fam.intervals) mids.push_back(0.5 * (iv.a + iv.b));
  auto out = delta_separated_subset(mids, fam);
  CHECK(out.size() == fam.intervals.size());
  for (std::size_t i = 1; i < out.size(); ++i) {
    CHECK(out[i].second - out[i - 1].second >= fam.delta - 1e-12);
  }
  CHECK(delta_separated_subset({}, fam).empty());
}

TEST_CASE("the first sample in a bin is kept") {
  BinFamily fam = make_bins_radial(100, 10);
  const double a = fam.intervals[0].a + 0.2 * fam.delta;
  const double b = fam.intervals[0].a + 0.8 * fam.delta;
  auto out = delta_separated_subset({a, b}, fam);
  REQUIRE(out.size() == 1);
  CHECK(out[0].second == a);
}

TEST_CASE("occupancy concentrates with enough draws") {
  // Monte-Carlo sanity pass of the coupon-collector style guarantee; the
  // full-strength statistics run in the acceptance suite.
  const int l = 30;
  BinFamily fam = make_bins_circumference(l, l);
  const int m = static_cast<int>(fam.intervals.size());
  const int draws = static_cast<int>(std::ceil(1.0 / fam.p_min * std::log(1.0 / 0.01)));
  RngStream root = RngStream::root(23);
  int good = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    RngStream rng = root.derive("occ", t);
    std::vector<double> xs(draws);
    for (auto& x : xs) x = sample_angle_x(l, rng);
    if (delta_separated_subset(xs, fam).size() >= static_cast<std::size_t>(0.9 * m)) ++good;
  }
  CHECK(good >= static_cast<int>(0.85 * trials));
}

TEST_CASE("barycentric interpolation is exact for polynomials") {
  std::vector<double> nodes{-0.5, 0.1, 0.9};
  std::vector<double> vals;
  for (double x : nodes) vals.push_back(x * x);
  for (double x : {-1.0, 0.0, 0.35, 2.0}) {
    CHECK(lagrange_eval(nodes, vals, x) == doctest::Approx(x * x).epsilon(1e-12));
  }
  CHECK(lagrange_eval(nodes, vals, 0.1) == vals[1]);  // node hit returns stored value
  CHECK(lagrange_eval({0.3}, {7.0}, 12.0) == 7.0);
  CHECK_THROWS_AS(lagrange_eval({0.1, 0.1}, {0.0, 0.0}, 0.5), std::invalid_argument);
}

TEST_CASE("extrapolation bound formula values") {
  CHECK(remez_extrapolation_bound(0.1, 10, 1.0) ==
        doctest::Approx(std::pow(std::exp(2.0), 10)).epsilon(1e-10));
  // monotone in L past delta*d/e^2
  double prev = 0.0;
  for (double L = 0.5; L < 5.0; L += 0.25) {
    const double b = remez_extrapolation_bound(0.05, 6, L);
    CHECK(b > prev);
    prev = b;
  }
  CHECK_THROWS_AS(remez_extrapolation_bound(0.0, 3, 1.0), std::invalid_argument);
}

TEST_CASE("interior bound formula values") {
  CHECK(remez_interior_bound(0.7, 0) == doctest::Approx(1.0));
  CHECK(remez_interior_bound(0.5, 4) == doctest::Approx(16.0 / (0.0625 * 24.0)).epsilon(1e-12));
  CHECK(log10_remez_interior_bound(0.5, 4) == doctest::Approx(std::log10(16.0 / 1.5)));
}

TEST_CASE("leading coefficient floor formula values") {
  CHECK(leading_coeff_floor(0.3, 0) == doctest::Approx(1.0));
  CHECK(leading_coeff_floor(0.1, 2) == doctest::Approx(0.01 / 3.0).epsilon(1e-12));
}

TEST_CASE("extrapolation bound holds on random polynomials") {
  RngStream root = RngStream::root(24);
  const int d = 6;
  const double delta = 0.05;
  for (int t = 0; t < 200; ++t) {
    RngStream rng = root.derive("remez", t);
    std::vector<double> nodes = separated_nodes(d + 1, delta, rng, 0.0, 1.0);
    Polynomial p = random_poly(d, rng);
    double node_max = 0.0;
    for (double x : nodes) node_max = std::max(node_max, std::abs(p.eval(x)));
    const double L = 1.0 + 2.0 * rng.uniform();
    CHECK(std::abs(p.eval(L)) <= remez_extrapolation_bound(delta, d, L) * node_max * (1 + 1e-9));
  }
}

TEST_CASE("interior bound holds on random polynomials") {
  RngStream root = RngStream::root(25);
  const int d = 5;
  const double delta = 0.15;
  for (int t = 0; t < 200; ++t) {
    RngStream rng = root.derive("interior", t);
    std::vector<double> nodes = separated_nodes(d + 1, delta, rng);
    Polynomial p = random_poly(d, rng);
    double node_max = 0.0;
    for (double x : nodes) node_max = std::max(node_max, std::abs(p.eval(x)));
    const double L = 2.0 * rng.uniform() - 1.0;
    CHECK(std::abs(p.eval(L)) <= remez_interior_bound(delta, d) * node_max * (1 + 1e-9));
  }
}

TEST_CASE("monic polynomials attain the floor somewhere") {
  RngStream root = RngStream::root(26);
  const int d = 4;
  const double delta = 0.2;
  for (int t = 0; t < 200; ++t) {
    RngStream rng = root.derive("floor", t);
    std::vector<double> nodes = separated_nodes(d + 1, delta, rng);
    Polynomial p = random_poly(d - 1, rng);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d + 1);
    c.head(d) = p.coeffs;
    c(d) = 1.0;
    Polynomial monic{c};
    double node_max = 0.0;
    for (double x : nodes) node_max = std::max(node_max, std::abs(monic.eval(x)));
    CHECK(node_max >= leading_coeff_floor(delta, d) * (1 - 1e-9));
  }
}

TEST_CASE("exact decoder recovers a cubic with no corruption") {
  std::vector<double> xs{-1.0, -0.7, -0.4, -0.1, 0.2, 0.5, 0.8, 1.0};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(x * x * x);
  Polynomial p = classic_berlekamp_welch(xs, ys, 2, 3);
  CHECK(p.degree() == 3);
  CHECK(p.coeffs(3) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(p.coeffs(0)) < 1e-10);
}

TEST_CASE("exact decoder corrects up to k adversarial errors") {
  RngStream root = RngStream::root(27);
  for (int t = 0; t < 50; ++t) {
    RngStream rng = root.derive("bw", t);
    std::vector<double> xs = separated_nodes(8, 0.15, rng);
    Polynomial truth = random_poly(3, rng);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(truth.eval(x));
    ys[1] += 5.0;
    ys[6] -= 3.0;
    Polynomial p = classic_berlekamp_welch(xs, ys, 2, 3);
    CHECK(max_coeff_diff(p, truth) < 1e-8);
  }
}

TEST_CASE("beyond the decoding radius the failure is detected") {
  RngStream rng = RngStream::root(28);
  std::vector<double> xs = separated_nodes(8, 0.15, rng);
  Polynomial truth = random_poly(3, rng);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(truth.eval(x));
  ys[0] += 1.0;
  ys[3] += 2.0;
  ys[5] += 3.0;  // k+1 corruptions for k=2
  bool caught = false;
  try {
    Polynomial p = classic_berlekamp_welch(xs, ys, 2, 3);
    caught = max_coeff_diff(p, truth) > 1e-6;  // or it decodes to the wrong thing
  } catch (const UnrecoverableError&) {
    caught = true;
  }
  CHECK(caught);
}

TEST_CASE("the proof's witness satisfies the locator program") {
  // Uncorrupted degree-2 data, eps = 1e-6: s = (x - x_1)(x - x_2) and
  // r = s * p satisfy every constraint of the first program.
  RngStream rng = RngStream::root(29);
  const int n = 10, k = 2;
  const double eps = 1e-6;
  std::vector<double> xs = separated_nodes(n, 0.15, rng);
  Polynomial p = random_poly(2, rng);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(p.eval(x));

  auto s_eval = [&](double x) { return (x - xs[1]) * (x - xs[2]); };
  for (int i = 0; i < n; ++i) {
    const double r_val = s_eval(xs[i]) * p.eval(xs[i]);
    CHECK(std::abs(r_val - ys[i] * s_eval(xs[i])) <= std::ldexp(eps, k));
  }
  // and the solver agrees: the locator it returns is bounded by 2^k on nodes
  RbwDiagnostics diag;
  Polynomial q = robust_berlekamp_welch(xs, ys, k, 0.15, eps, &diag);
  REQUIRE(diag.locator.size() == k);
  for (double x : xs) {
    double s = 1.0;
    for (int j = k - 1; j >= 0; --j) s = s * x + diag.locator(j);
    CHECK(std::abs(s) <= std::ldexp(1.0, k) + 1e-6);
  }
  CHECK(max_coeff_diff(q, p) < 1e-4);  // clean data, tiny eps
}

TEST_CASE("robust decoder: exact mode recovers through corruption") {
  RngStream root = RngStream::root(30);
  Eigen::VectorXd c(4);
  c << 1.0, 1.0, 0.0, -1.0;  // 1 + x - x^3
  Polynomial truth{c};
  for (int t = 0; t < 30; ++t) {
    RngStream rng = root.derive("exact", t);
    std::vector<double> xs = separated_nodes(10, 0.15, rng);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(truth.eval(x));
    const int c1 = static_cast<int>(rng.next_u64() % 10);
    int c2 = static_cast<int>(rng.next_u64() % 10);
    if (c2 == c1) c2 = (c2 + 1) % 10;
    ys[c1] += 1.0;
    ys[c2] -= 2.0;
    Polynomial q = robust_berlekamp_welch(xs, ys, 2, 0.15, 0.0);
    CHECK(max_coeff_diff(q, truth) < 1e-8);
  }
}

TEST_CASE("robust decoder: noisy mode meets the stated bound") {
  RngStream root = RngStream::root(31);
  const int n = 12, k = 2;
  const double delta = 0.15, eps = 1e-9;
  for (int t = 0; t < 30; ++t) {
    RngStream rng = root.derive("noisy", t);
    std::vector<double> xs = separated_nodes(n, delta, rng);
    Polynomial truth = random_poly(7, rng);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(truth.eval(x) + eps * (2.0 * rng.uniform() - 1.0));
    ys[0] += 1.0;
    ys[7] += 1.0;
    Polynomial q = robust_berlekamp_welch(xs, ys, k, delta, eps);
    CHECK(q.degree() <= n - 2 * k - 1);
    std::vector<double> res;
    for (int i = 0; i < n; ++i) res.push_back(std::abs(q.eval(xs[i]) - truth.eval(xs[i])));
    std::sort(res.begin(), res.end());
    // agreement at >= n - 2k nodes; the theoretical envelope is loose, the
    // observed residual should be tiny
    CHECK(res[n - 2 * k - 1] < 1e-5);
  }
}

TEST_CASE("k = 0 reduces to plain interpolation") {
  RngStream rng = RngStream::root(32);
  std::vector<double> xs = separated_nodes(6, 0.2, rng);
  Polynomial truth = random_poly(5, rng);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(truth.eval(x));
  Polynomial q = robust_berlekamp_welch(xs, ys, 0, 0.2, 0.0);
  for (double x : {-0.9, 0.0, 0.4, 1.0}) {
    CHECK(q.eval(x) == doctest::Approx(lagrange_eval(xs, ys, x)).epsilon(1e-9));
  }
}

TEST_CASE("classic and robust decoders agree on exact instances") {
  RngStream root = RngStream::root(33);
  for (int t = 0; t < 25; ++t) {
    RngStream rng = root.derive("agree", t);
    std::vector<double> xs = separated_nodes(12, 0.12, rng);
    Polynomial truth = random_poly(7, rng);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(truth.eval(x));
    ys[2] += 1.0;
    ys[9] += 1.0;
    Polynomial a = classic_berlekamp_welch(xs, ys, 2, 7);
    Polynomial b = robust_berlekamp_welch(xs, ys, 2, 0.12, 0.0);
    CHECK(max_coeff_diff(a, b) < 1e-8);
  }
}

TEST_CASE("precondition violations are rejected") {
  std::vector<double> xs{-0.5, 0.0, 0.5, 1.5};  // node outside [-1, 1]
  std::vector<double> ys{0, 0, 0, 0};
  CHECK_THROWS_AS(robust_berlekamp_welch(xs, ys, 1, 0.2, 0.0), std::invalid_argument);
  std::vector<double> close{-0.5, -0.45, 0.5, 0.9};  // not delta-separated
  CHECK_THROWS_AS(robust_berlekamp_welch(close, ys, 1, 0.2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(robust_berlekamp_welch({0.0}, {1.0}, 1, 0.2, 0.0), std::invalid_argument);
}

TEST_CASE("understated corruption count is detectable") {
  RngStream rng = RngStream::root(34);
  std::vector<double> xs = separated_nodes(9, 0.15, rng);
  std::vector<double> ys(9, 0.0);
  // wild values at 4 nodes with k = 1: no locator of degree 1 can explain it
  ys[0] = 10.0;
  ys[3] = -20.0;
  ys[5] = 15.0;
  ys[7] = -11.0;

  // With the degree capped below n - 2k - 1 the programs are overdetermined
  // and infeasibility surfaces as the contract error.
  CHECK_THROWS_AS(robust_chebyshev_fit(xs, ys, 1, 0.15, 1e-12, 2, -1.0, 1.0),
                  AssumptionViolated);

  // At full degree the programs always have enough freedom; the output is
  // then simply a bad fit, which the caller can detect against the data.
  bool detected = false;
  try {
    Polynomial q = robust_berlekamp_welch(xs, ys, 1, 0.15, 1e-12);
    int misses = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (std::abs(q.eval(xs[i]) - ys[i]) > 1e-3) ++misses;
    }
    detected = misses > 1;  // more than k nodes unexplained
  } catch (const AssumptionViolated&) {
    detected = true;
  }
  CHECK(detected);
}

TEST_CASE("chebyshev fit survives corruption and extrapolates") {
  RngStream root = RngStream::root(35);
  for (int t = 0; t < 20; ++t) {
    RngStream rng = root.derive("cheb", t);
    std::vector<double> xs = separated_nodes(12, 0.03, rng, 0.3, 0.8);
    auto f = [](double x) { return 1.0 + 2.0 * x - 0.5 * x * x * x; };
    std::vector<double> ys;
    for (double x : xs) ys.push_back(f(x));
    ys[4] += 1.0;
    ChebyshevFit fit = robust_chebyshev_fit(xs, ys, 1, 0.03, 1e-12, 5, 0.3, 0.8);
    CHECK(fit.eval(0.55) == doctest::Approx(f(0.55)).epsilon(1e-7));
    CHECK(fit.eval(1.0) == doctest::Approx(f(1.0)).epsilon(1e-5));  // outside the window
  }
}

TEST_CASE("sample sets round-trip through CSV") {
  std::vector<NoisySample> in{{0.25, 1.5, Provenance::Clean},
                              {-0.75, 2.5, Provenance::Corrupted},
                              {0.5, -0.125, Provenance::Unknown}};
  auto out = noisy_samples_from_csv(noisy_samples_to_csv(in));
  REQUIRE(out.size() == in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    CHECK(out[i].x == in[i].x);
    CHECK(out[i].y == in[i].y);
    CHECK(out[i].provenance == in[i].provenance);
  }
}
