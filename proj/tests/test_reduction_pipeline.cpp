#include <cmath>
#include <memory>
#include <set>
#include <vector>

#include "doctest.h"
#include "quench/reduction_pipeline.hpp"

using namespace quench;

namespace {

std::shared_ptr<const TermTable> small_table() {
  static auto table = std::make_shared<const TermTable>(Lattice{1, 2, false});
  return table;
}

CoeffVector unit_worst() {
  WorstCaseSpec spec;
  spec.subset = {1, 0};
  spec.couplings = {1.0};
  spec.fields = {1.0, 1.0};
  spec.tau = 1.0;
  CoeffVector g = worst_case_coeffs(spec, small_table());
  g.values /= g.values.norm();
  return g;
}

CoeffVector random_point(RngStream& rng) {
  return sample_coeffs(small_table(), rng);
}

}  // namespace

TEST_CASE("oracle config rejects bad parameters") {
  OracleConfig c;
  c.epsilon_a = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.epsilon_a = 0.0;
  c.delta_corrupt = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.delta_corrupt = 0.5;
  c.model = CorruptionModel::Callback;  // no callback attached
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("exact oracle returns the simulator value") {
  OracleConfig c;
  c.seed = 7;
  Oracle oracle(c);
  RngStream rng = RngStream::root(3);
  for (int i = 0; i < 20; ++i) {
    CoeffVector g = random_point(rng);
    const double expected = output_probability({g, 1.0, {}});
    CHECK(oracle(g) == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(oracle.call_count() == 20);
}

TEST_CASE("oracle is deterministic in (seed, point)") {
  OracleConfig c;
  c.epsilon_a = 1e-3;
  c.delta_corrupt = 0.3;
  c.seed = 11;
  Oracle a(c), b(c);
  RngStream rng = RngStream::root(4);
  for (int i = 0; i < 50; ++i) {
    CoeffVector g = random_point(rng);
    CHECK(a(g) == b(g));
  }
  const auto ta = a.trace(), tb = b.trace();
  REQUIRE(ta.size() == tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    CHECK(ta[i].corrupted == tb[i].corrupted);
    CHECK(ta[i].point_key == tb[i].point_key);
  }

  // A different seed decorrelates the noise stream.
  OracleConfig c2 = c;
  c2.seed = 12;
  Oracle other(c2);
  RngStream rng2 = RngStream::root(4);
  int agree = 0;
  for (int i = 0; i < 50; ++i) {
    CoeffVector g = random_point(rng2);
    if (other(g) == a.trace()[i].value) ++agree;
  }
  CHECK(agree < 50);
}

TEST_CASE("clean calls stay within epsilon_a of the truth") {
  OracleConfig c;
  c.epsilon_a = 1e-4;
  c.seed = 5;
  Oracle oracle(c);
  RngStream rng = RngStream::root(6);
  for (int i = 0; i < 100; ++i) {
    CoeffVector g = random_point(rng);
    const double truth = output_probability({g, 1.0, {}});
    CHECK(std::abs(oracle(g) - truth) <= c.epsilon_a);
  }
}

TEST_CASE("corruption frequency matches delta within 3 sigma") {
  OracleConfig c;
  c.delta_corrupt = 0.1;
  c.seed = 9;
  Oracle oracle(c);
  RngStream rng = RngStream::root(8);
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) oracle(random_point(rng));
  int corrupted = 0;
  for (const auto& rec : oracle.trace()) corrupted += rec.corrupted ? 1 : 0;
  const double rate = static_cast<double>(corrupted) / trials;
  const double sigma = std::sqrt(0.1 * 0.9 / trials);
  CHECK(std::abs(rate - 0.1) <= 3.0 * sigma);
}

TEST_CASE("corruption models produce the advertised values") {
  RngStream rng = RngStream::root(10);
  std::vector<CoeffVector> points;
  for (int i = 0; i < 200; ++i) points.push_back(random_point(rng));

  OracleConfig base;
  base.delta_corrupt = 0.5;
  base.seed = 13;

  OracleConfig off = base;
  off.offset = 2.5;
  Oracle o_off(off);
  for (const auto& g : points) o_off(g);
  const auto trace = o_off.trace();
  int seen = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!trace[i].corrupted) continue;
    ++seen;
    const double truth = output_probability({points[i], 1.0, {}});
    CHECK(trace[i].value == doctest::Approx(truth + 2.5).epsilon(1e-12));
  }
  CHECK(seen > 0);

  OracleConfig uni = base;
  uni.model = CorruptionModel::Uniform;
  Oracle o_uni(uni);
  for (const auto& g : points) o_uni(g);
  for (const auto& rec : o_uni.trace()) {
    if (rec.corrupted) {
      CHECK(rec.value >= 0.0);
      CHECK(rec.value < 1.0);
    }
  }

  OracleConfig cb = base;
  cb.model = CorruptionModel::Callback;
  cb.callback = [](const CoeffVector&, double truth) { return truth - 7.0; };
  Oracle o_cb(cb);
  for (const auto& g : points) o_cb(g);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& rec = o_cb.trace()[i];
    if (rec.corrupted) {
      const double truth = output_probability({points[i], 1.0, {}});
      CHECK(rec.value == doctest::Approx(truth - 7.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetrized sample is even in theta and exact at theta = 0") {
  Oracle oracle(OracleConfig{});
  RngStream rng = RngStream::root(14).derive("plane");
  PlaneFrame frame = sample_plane(unit_worst(), rng);

  auto [x0, y0] = symmetrized_sample(oracle, frame, 0.8, 0.0);
  CHECK(x0 == doctest::Approx(1.0));
  CHECK(y0 == doctest::Approx(output_probability({embed(frame, 0.8, 0.0), 1.0, {}})));

  for (double theta : {0.3, 1.1, 2.0}) {
    auto [xp, yp] = symmetrized_sample(oracle, frame, 0.8, theta);
    auto [xm, ym] = symmetrized_sample(oracle, frame, 0.8, -theta);
    CHECK(xp == doctest::Approx(std::cos(theta)));
    CHECK(xm == doctest::Approx(std::cos(theta)));
    CHECK(yp == doctest::Approx(ym).epsilon(1e-14));
  }
}

TEST_CASE("circumference interpolation recovers the north-pole value") {
  Oracle oracle(OracleConfig{});
  RngStream root = RngStream::root(21);
  RngStream plane_rng = root.derive("plane");
  PlaneFrame frame = sample_plane(unit_worst(), plane_rng);

  ReductionParams params;
  params.seed = 21;
  for (double radius : {0.5, 1.0}) {
    auto res = interpolate_circumference(oracle, frame, radius, params, root.derive("c"));
    REQUIRE(res.stage.ok);
    const double truth = output_probability({embed(frame, radius, 0.0), 1.0, {}});
    CHECK(std::abs(res.estimate - truth) < 1e-4);
    CHECK(res.stage.occupancy == res.stage.nodes_used);
    CHECK(res.record_indices.size() == 2 * static_cast<std::size_t>(res.stage.nodes_used));
  }
}

TEST_CASE("circumference interpolation reports sample starvation") {
  Oracle oracle(OracleConfig{});
  RngStream root = RngStream::root(22);
  RngStream plane_rng = root.derive("plane");
  PlaneFrame frame = sample_plane(unit_worst(), plane_rng);

  ReductionParams params;
  params.m_angles = 1;
  params.max_retries = 0;
  auto res = interpolate_circumference(oracle, frame, 0.9, params, root.derive("c"));
  CHECK_FALSE(res.stage.ok);
  CHECK(res.stage.error == "insufficient nodes after retries");
}

TEST_CASE("full reduction matches the simulator on an exact oracle") {
  Oracle oracle(OracleConfig{});
  ReductionParams params;
  params.seed = 33;
  params.jobs = 2;
  auto report = worst_to_average_reduce(oracle, unit_worst(), params);
  REQUIRE(report.ok);
  const double truth = output_probability({unit_worst(), 1.0, {}});
  CHECK(std::abs(report.estimate - truth) <= 1e-4);
  CHECK(std::isfinite(report.log10_certified_bound));
  CHECK(report.ledger.entries.size() == 8);
  // No corruption, so nothing survives anywhere.
  for (const auto& s : report.stages) CHECK(s.corrupted_surviving == 0);
}

TEST_CASE("reduction rejects the zero worst-case vector") {
  Oracle oracle(OracleConfig{});
  ReductionParams params;
  CoeffVector zero = zero_coeffs(small_table());
  CHECK_THROWS_AS(worst_to_average_reduce(oracle, zero, params), std::invalid_argument);
}

TEST_CASE("reduction report is byte-identical across reruns") {
  auto run = [] {
    OracleConfig c;
    c.epsilon_a = 1e-8;
    c.delta_corrupt = 0.02;
    c.seed = 77;
    Oracle oracle(c);
    ReductionParams params;
    params.seed = 77;
    params.jobs = 3;
    return worst_to_average_reduce(oracle, unit_worst(), params).to_json().dump();
  };
  CHECK(run() == run());
}

TEST_CASE("corrupted reduction stays decodable and within budgets") {
  OracleConfig c;
  c.epsilon_a = 1e-10;
  c.delta_corrupt = 0.05;
  c.seed = 101;
  Oracle oracle(c);
  ReductionParams params;
  params.seed = 101;
  params.jobs = 2;
  auto report = worst_to_average_reduce(oracle, unit_worst(), params);
  REQUIRE(report.ok);
  const double truth = output_probability({unit_worst(), 1.0, {}});
  CHECK(std::abs(report.estimate - truth) < 0.05);

  const int b_circ = static_cast<int>(std::ceil(params.m / 0.4)) + 1;
  const int circ_budget = static_cast<int>(std::floor(0.25 * b_circ));
  const int radial_budget = static_cast<int>(std::floor(0.11 * 2 * params.m));
  for (const auto& s : report.stages) {
    const int budget = s.name == "radial" ? radial_budget : circ_budget;
    CHECK(s.corrupted_surviving <= budget);
  }
}

TEST_CASE("ledger rejects missing stages and bad separations") {
  LedgerInputs in;
  CHECK_THROWS_AS(assemble_bound_ledger(in), std::invalid_argument);
  in.n_circ = 4;
  in.n_radial = 4;
  in.delta_circ = 0.0;
  in.delta_radial = 0.1;
  CHECK_THROWS_AS(assemble_bound_ledger(in), std::invalid_argument);
}

TEST_CASE("ledger with no error sources certifies zero") {
  LedgerInputs in;
  in.n_circ = 4;
  in.n_radial = 4;
  in.delta_circ = 0.1;
  in.delta_radial = 0.1;
  in.circ_extrap_log10 = 1.0;
  in.radial_extrap_log10 = 1.0;
  auto ledger = assemble_bound_ledger(in);
  CHECK(ledger.total == 0.0);
  CHECK(ledger.log10_total == -std::numeric_limits<double>::infinity());
}

TEST_CASE("ledger chain matches direct arithmetic at friendly magnitudes") {
  LedgerInputs in;
  in.taylor_worst = 1e-3;
  in.taylor_node = 1e-4;
  in.eps_oracle = 1e-5;
  in.n_circ = 2;
  in.delta_circ = 0.5;  // (10/0.5)^{2*2} = 160000
  in.circ_extrap_log10 = std::log10(3.0);
  in.n_radial = 2;
  in.delta_radial = 0.5;
  in.radial_extrap_log10 = std::log10(2.0);

  auto ledger = assemble_bound_ledger(in);
  const double circ_bound = 3.0 * 160000.0 * 1e-5 + 1e-4;
  const double expected = 2.0 * 160000.0 * circ_bound + 1e-3;
  CHECK(ledger.total == doctest::Approx(expected).epsilon(1e-9));

  // Doubling the oracle error doubles the dominant chain term.
  in.taylor_worst = 0.0;
  in.taylor_node = 0.0;
  auto base = assemble_bound_ledger(in);
  in.eps_oracle *= 2.0;
  auto doubled = assemble_bound_ledger(in);
  CHECK(doubled.log10_total - base.log10_total == doctest::Approx(std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("ledger saturates instead of overflowing") {
  LedgerInputs in;
  in.taylor_worst = 1e-8;
  in.taylor_node = 1e-8;
  in.eps_oracle = 1e-6;
  in.n_circ = 40;
  in.delta_circ = 1.0 / 41.0;
  in.circ_extrap_log10 = 20.0;
  in.n_radial = 32;
  in.delta_radial = 1e-3;
  in.radial_extrap_log10 = 30.0;
  auto ledger = assemble_bound_ledger(in);
  CHECK(std::isfinite(ledger.log10_total));
  CHECK(ledger.log10_total > 300.0);
  CHECK(std::isinf(ledger.total));
}

TEST_CASE("undersized surrogate order yields an infinite certificate") {
  Oracle oracle(OracleConfig{});
  ReductionParams params;
  params.seed = 55;
  params.m = 2;  // below e * ||H|| * tau for radii near 1, so no Taylor bound
  params.m_radii = 4000;
  auto report = worst_to_average_reduce(oracle, unit_worst(), params);
  if (report.ok) {
    CHECK(std::isinf(report.log10_certified_bound));
  }
}
