#include "quench/reduction_pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

namespace quench {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log10_safe(double v) {
  if (v < 0) throw std::invalid_argument("error magnitudes must be >= 0");
  return v == 0.0 ? kNegInf : std::log10(v);
}

// log10(10^a + 10^b)
double log10_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (std::isinf(a) || std::isinf(b)) return std::numeric_limits<double>::infinity();
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log10(1.0 + std::pow(10.0, lo - hi));
}

double pow10_saturating(double log10_v) {
  if (log10_v == kNegInf) return 0.0;
  if (log10_v > 308.0) return std::numeric_limits<double>::infinity();
  return std::pow(10.0, log10_v);
}

}  // namespace

void OracleConfig::validate() const {
  if (epsilon_a < 0) throw std::invalid_argument("epsilon_a must be >= 0");
  if (delta_corrupt < 0 || delta_corrupt >= 1) {
    throw std::invalid_argument("delta_corrupt must be in [0, 1)");
  }
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  if (model == CorruptionModel::Callback && !callback) {
    throw std::invalid_argument("callback model without a callback");
  }
}

Oracle::Oracle(OracleConfig config) : config_(std::move(config)) { config_.validate(); }

std::pair<double, std::size_t> Oracle::eval(const CoeffVector& g) const {
  g.validate();
  const double truth = output_probability({g, config_.tau, {}});

  // Key the noise off the raw coefficient bytes so repeated queries of the
  // same point (e.g. the theta = 0 pair) agree exactly.
  const std::uint64_t point_key =
      fnv1a(g.values.data(), sizeof(double) * g.values.size(), 0xcbf29ce484222325ull);
  std::uint64_t mix = point_key ^ (config_.seed * 0x9e3779b97f4a7c15ull);
  RngStream rng(splitmix64(mix));

  EvalRecord rec;
  rec.point_key = point_key;
  rec.corrupted = rng.uniform() < config_.delta_corrupt;
  if (rec.corrupted) {
    switch (config_.model) {
      case CorruptionModel::Offset: rec.value = truth + config_.offset; break;
      case CorruptionModel::Uniform: rec.value = rng.uniform(); break;
      case CorruptionModel::Callback: rec.value = config_.callback(g, truth); break;
    }
  } else {
    rec.value = truth + config_.epsilon_a * (2.0 * rng.uniform() - 1.0);
  }

  std::lock_guard<std::mutex> lock(mu_);
  trace_.push_back(rec);
  return {rec.value, trace_.size() - 1};
}

std::vector<EvalRecord> Oracle::trace() const {
  std::lock_guard<std::mutex> lock(mu_);
  return trace_;
}

std::size_t Oracle::call_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return trace_.size();
}

void ReductionParams::validate() const {
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  if (m < 1) throw std::invalid_argument("surrogate order must be >= 1");
  if (m_radii < 1 || m_angles < 1) throw std::invalid_argument("sample counts must be >= 1");
  if (radius_factor <= 0) throw std::invalid_argument("radius factor must be positive");
  if (epsilon_fit < 0 || radial_epsilon_fit < 0)
    throw std::invalid_argument("fit slack must be >= 0");
  if (max_retries < 0 || jobs < 1) throw std::invalid_argument("bad retry/jobs setting");
}

BoundLedger assemble_bound_ledger(const LedgerInputs& in) {
  if (in.n_circ <= 0 || in.n_radial <= 0) {
    throw std::invalid_argument("ledger is missing a stage");
  }
  if (!(in.delta_circ > 0) || !(in.delta_radial > 0)) {
    throw std::invalid_argument("ledger needs positive node separations");
  }

  BoundLedger out;
  const double log_taylor_worst = log10_safe(in.taylor_worst);
  const double log_taylor_node = log10_safe(in.taylor_node);
  const double log_eps = log10_safe(in.eps_oracle);
  const double log_circ_dec = 2.0 * in.n_circ * std::log10(10.0 / in.delta_circ);
  const double log_radial_dec = 2.0 * in.n_radial * std::log10(10.0 / in.delta_radial);

  const double log_circ_err = in.circ_extrap_log10 + log_circ_dec + log_eps;
  const double log_circ_bound = log10_add(log_circ_err, log_taylor_node);
  const double log_chain = in.radial_extrap_log10 + log_radial_dec + log_circ_bound;
  out.log10_total = log10_add(log_chain, log_taylor_worst);
  out.total = pow10_saturating(out.log10_total);

  out.entries = {
      {"taylor_worst", "2 e^{ht} (e h t / m)^{m+1} at the target", log_taylor_worst},
      {"taylor_node", "2 e^{ht} (e h t / m)^{m+1} on the node ball", log_taylor_node},
      {"oracle_eps", "epsilon_a + fit slack", log_eps},
      {"circ_decoder", "(10/delta)^{2n}, circumference stage", log_circ_dec},
      {"circ_extrapolation", "(e^2 L / (delta d))^d to cos(theta) = 1", in.circ_extrap_log10},
      {"radial_decoder", "(10/delta)^{2n}, radial stage", log_radial_dec},
      {"radial_extrapolation", "(e^2 L / (delta d))^d to ||g_worst||",
       in.radial_extrap_log10},
      {"total", "taylor_worst + extrap * decoder * (circ bound)", out.log10_total},
  };
  return out;
}

std::pair<double, double> symmetrized_sample(const Oracle& oracle, const PlaneFrame& frame,
                                             double radius, double theta) {
  const double v_plus = oracle(embed(frame, radius, theta));
  const double v_minus = oracle(embed(frame, radius, -theta));
  return {std::cos(theta), 0.5 * (v_plus + v_minus)};
}

CircumferenceResult interpolate_circumference(const Oracle& oracle, const PlaneFrame& frame,
                                              double radius, const ReductionParams& params,
                                              RngStream rng) {
  params.validate();
  frame.validate();
  if (!(radius > 0)) throw std::invalid_argument("radius must be positive");

  const int l = frame.table->l();
  const int bin_count = params.b_circ > 0 ? params.b_circ
                                          : static_cast<int>(std::ceil(params.m / 0.4)) + 1;
  const BinFamily bins = make_bins_circumference(l, bin_count, params.radius_factor);
  const int k = params.k_circ >= 0
                    ? params.k_circ
                    : (oracle.config().delta_corrupt > 0
                           ? static_cast<int>(std::floor(0.25 * bin_count))
                           : 0);
  const int min_occ = params.m + 2 * k + 1;

  CircumferenceResult res;
  res.stage.name = "circumference";

  std::vector<double> xs;
  std::vector<std::pair<int, double>> kept;
  int target = params.m_angles;
  for (int attempt = 0;; ++attempt) {
    while (static_cast<int>(xs.size()) < target) xs.push_back(sample_angle_x(l, rng));
    kept = delta_separated_subset(xs, bins);
    if (static_cast<int>(kept.size()) >= min_occ) break;
    if (attempt >= params.max_retries) {
      res.stage.samples_drawn = static_cast<int>(xs.size());
      res.stage.occupancy = static_cast<int>(kept.size());
      res.stage.error = "insufficient nodes after retries";
      return res;
    }
    target *= 2;
  }
  res.stage.samples_drawn = static_cast<int>(xs.size());
  res.stage.occupancy = static_cast<int>(kept.size());

  // With a corruption budget, query up to three candidates per bin and keep
  // the one with the median value: a corrupted call only survives if it
  // out-votes two clean ones, which drops per-node corruption by an order of
  // magnitude. Any candidate preserves the cross-bin separation.
  std::map<int, std::vector<double>> extra;
  if (k > 0) {
    for (double x : xs) {
      const int b = bins.find_bin(x);
      if (b < 0) continue;
      auto& v = extra[b];
      if (v.size() < 3) v.push_back(x);
    }
  }

  struct Candidate {
    double x = 0.0, y = 0.0;
    std::size_t i_plus = 0, i_minus = 0;
  };
  auto query = [&](double x) {
    const double theta = std::acos(std::clamp(x, -1.0, 1.0));
    auto [v_plus, i_plus] = oracle.eval(embed(frame, radius, theta));
    auto [v_minus, i_minus] = oracle.eval(embed(frame, radius, -theta));
    return Candidate{x, 0.5 * (v_plus + v_minus), i_plus, i_minus};
  };

  std::vector<double> node_x, node_y;
  node_x.reserve(kept.size());
  node_y.reserve(kept.size());
  for (const auto& [bin, x] : kept) {
    std::vector<Candidate> cands;
    if (k > 0) {
      for (double cx : extra[bin]) cands.push_back(query(cx));
      std::sort(cands.begin(), cands.end(),
                [](const Candidate& a, const Candidate& b) { return a.y < b.y; });
    } else {
      cands.push_back(query(x));
    }
    const Candidate& pick = cands[(cands.size() - 1) / 2];
    node_x.push_back(pick.x);
    node_y.push_back(pick.y);
    res.record_indices.push_back(pick.i_plus);
    res.record_indices.push_back(pick.i_minus);
  }

  const int occ = static_cast<int>(node_x.size());
  int deg = occ - 2 * k - 1;
  // Default degree trades surrogate truncation against extrapolation noise;
  // 3m/4 sits at the empirical optimum for desk-scale runs.
  deg = std::min(deg, params.circ_degree > 0 ? params.circ_degree
                                             : std::max(4, 3 * params.m / 4));
  const double eps = oracle.config().epsilon_a + params.epsilon_fit;
  const double r = params.radius_factor / std::sqrt(static_cast<double>(l));
  res.fit = robust_chebyshev_fit(node_x, node_y, k, bins.delta, eps, deg, -r, r);
  res.estimate = res.fit.eval(1.0);
  res.stage.nodes_used = occ;
  res.stage.ok = true;
  return res;
}

nlohmann::json ReductionReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["ok"] = ok;
  j["failure"] = failure;
  j["estimate"] = estimate;
  if (truth) {
    j["truth"] = *truth;
    j["abs_error"] = std::abs(estimate - *truth);
  }
  j["certified_bound"] = std::isfinite(certified_bound) ? nlohmann::json(certified_bound)
                                                        : nlohmann::json("inf");
  j["log10_certified_bound"] = log10_certified_bound;
  j["ledger"] = nlohmann::json::array();
  for (const auto& e : ledger.entries) {
    j["ledger"].push_back({{"name", e.name},
                           {"formula", e.formula},
                           {"log10_value", e.log10_value == kNegInf ? nlohmann::json("-inf")
                                                                    : nlohmann::json(e.log10_value)}});
  }
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages) {
    j["stages"].push_back({{"name", s.name},
                           {"samples_drawn", s.samples_drawn},
                           {"occupancy", s.occupancy},
                           {"nodes_used", s.nodes_used},
                           {"corrupted_surviving", s.corrupted_surviving},
                           {"ok", s.ok},
                           {"error", s.error}});
  }
  return j;
}

ReductionReport worst_to_average_reduce(const Oracle& oracle, const CoeffVector& g_worst,
                                        const ReductionParams& params) {
  params.validate();
  g_worst.validate();
  const double gnorm = g_worst.values.norm();
  if (!(gnorm > 0)) throw std::invalid_argument("g_worst must be nonzero");

  const int l = g_worst.table->l();
  const int b_radial = params.b_radial > 0 ? params.b_radial : 2 * params.m;
  const BinFamily bins = make_bins_radial(l, b_radial);
  const int k_r = params.k_radial >= 0
                      ? params.k_radial
                      : (oracle.config().delta_corrupt > 0
                             ? static_cast<int>(std::floor(0.11 * b_radial))
                             : 0);
  const int min_occ = params.m + 2 * k_r + 1;

  ReductionReport report;
  RngStream root = RngStream::root(params.seed);
  PlaneFrame frame = [&] {
    RngStream plane_rng = root.derive("plane");
    return sample_plane(g_worst, plane_rng);
  }();

  StageReport radial_stage;
  radial_stage.name = "radial";
  std::vector<double> radii;
  std::vector<std::pair<int, double>> kept;
  {
    RngStream radius_rng = root.derive("radii");
    const EnsembleParams ens{l};
    int target = params.m_radii;
    for (int attempt = 0;; ++attempt) {
      while (static_cast<int>(radii.size()) < target) {
        radii.push_back(sample_radius(ens, radius_rng));
      }
      kept = delta_separated_subset(radii, bins);
      if (static_cast<int>(kept.size()) >= min_occ) break;
      if (attempt >= params.max_retries) {
        radial_stage.samples_drawn = static_cast<int>(radii.size());
        radial_stage.occupancy = static_cast<int>(kept.size());
        radial_stage.error = "insufficient radial nodes after retries";
        report.stages.push_back(radial_stage);
        report.failure = "radial stage: " + radial_stage.error;
        return report;
      }
      target *= 2;
    }
    radial_stage.samples_drawn = static_cast<int>(radii.size());
    radial_stage.occupancy = static_cast<int>(kept.size());
  }

  // One circumference interpolation per surviving radius. Independent
  // sub-streams keep the result identical whatever the worker count.
  std::vector<CircumferenceResult> circ(kept.size());
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= kept.size()) return;
        circ[i] = interpolate_circumference(oracle, frame, kept[i].second, params,
                                            root.derive("circ", i));
      }
    };
    if (params.jobs <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < params.jobs; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
  }

  const auto trace = oracle.trace();
  const int k_c_budget = [&] {
    const int bc = params.b_circ > 0 ? params.b_circ
                                     : static_cast<int>(std::ceil(params.m / 0.4)) + 1;
    return params.k_circ >= 0 ? params.k_circ : static_cast<int>(std::floor(0.25 * bc));
  }();

  std::vector<double> node_r, node_y;
  int failed_circ = 0;
  double max_node_r = 0.0;
  int max_circ_nodes = 0;
  double circ_delta_mapped = 0.0, circ_extrap_log10 = 0.0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    StageReport s = circ[i].stage;
    s.name = "circumference " + std::to_string(i);
    // Post-hoc provenance: a node is bad when either of its symmetrized
    // oracle calls was corrupted. The solvers above never saw these flags.
    int bad = 0;
    for (std::size_t j = 0; j + 1 < circ[i].record_indices.size(); j += 2) {
      if (trace[circ[i].record_indices[j]].corrupted ||
          trace[circ[i].record_indices[j + 1]].corrupted) {
        ++bad;
      }
    }
    s.corrupted_surviving = bad;
    report.stages.push_back(s);
    if (!s.ok) {
      ++failed_circ;
      continue;
    }
    node_r.push_back(kept[i].second);
    node_y.push_back(circ[i].estimate);
    max_node_r = std::max(max_node_r, kept[i].second);
    if (s.nodes_used > max_circ_nodes) {
      max_circ_nodes = s.nodes_used;
      const int deg_c = circ[i].fit.degree();
      const double r_c = params.radius_factor / std::sqrt(static_cast<double>(l));
      circ_delta_mapped = 1.0 / (params.b_circ > 0
                                     ? params.b_circ
                                     : static_cast<int>(std::ceil(params.m / 0.4)) + 1);
      // Nodes mapped to [-1, 1]; shift to [0, 2] and extrapolate to 1/r + 1.
      circ_extrap_log10 =
          log10_remez_extrapolation_bound(circ_delta_mapped, std::max(deg_c, 1), 1.0 / r_c + 1.0);
    }
  }

  const int n_nodes = static_cast<int>(node_r.size());
  radial_stage.nodes_used = n_nodes;
  radial_stage.corrupted_surviving = 0;
  for (const auto& s : report.stages) {
    if (s.ok && s.name != "radial" && s.corrupted_surviving > k_c_budget) {
      ++radial_stage.corrupted_surviving;
    }
  }
  if (n_nodes < min_occ) {
    radial_stage.error = "only " + std::to_string(n_nodes) + " circumference stages succeeded";
    report.stages.insert(report.stages.begin(), radial_stage);
    report.failure = "radial stage: " + radial_stage.error;
    return report;
  }

  int deg_r = n_nodes - 2 * k_r - 1;
  deg_r = std::min(deg_r, params.radial_degree > 0 ? params.radial_degree : params.m);
  const double eps_r = oracle.config().epsilon_a + params.radial_epsilon_fit;
  const double lo_r = 1.0 - 1.0 / std::sqrt(static_cast<double>(l));
  ChebyshevFit fit_z;
  try {
    fit_z = robust_chebyshev_fit(node_r, node_y, k_r, bins.delta, eps_r, deg_r, lo_r, 1.0);
  } catch (const AssumptionViolated& e) {
    radial_stage.error = e.what();
    report.stages.insert(report.stages.begin(), radial_stage);
    report.failure = std::string("radial decode: ") + e.what();
    return report;
  }
  radial_stage.ok = true;
  report.stages.insert(report.stages.begin(), radial_stage);
  report.estimate = fit_z.eval(gnorm);

  LedgerInputs li;
  const double h_worst = spectral_norm_bound(g_worst);
  const double c_worst = std::exp(1.0) * h_worst * params.tau;
  li.taylor_worst = params.m > c_worst
                        ? taylor_error_bound(h_worst, params.tau, params.m)
                        : std::numeric_limits<double>::infinity();
  const double h_node = std::sqrt(static_cast<double>(l)) * std::max(max_node_r, 1.0);
  const double c_node = std::exp(1.0) * h_node * params.tau;
  li.taylor_node = params.m > c_node ? taylor_error_bound(h_node, params.tau, params.m)
                                     : std::numeric_limits<double>::infinity();
  li.eps_oracle = oracle.config().epsilon_a + params.epsilon_fit;
  li.n_circ = std::max(max_circ_nodes, 1);
  li.delta_circ = circ_delta_mapped > 0 ? circ_delta_mapped : 1.0;
  li.circ_extrap_log10 = circ_extrap_log10;
  li.n_radial = n_nodes;
  li.delta_radial = bins.delta;
  li.radial_extrap_log10 =
      log10_remez_extrapolation_bound(bins.delta, params.m, std::max(gnorm, bins.delta));
  report.ledger = assemble_bound_ledger(li);
  report.log10_certified_bound = report.ledger.log10_total;
  report.certified_bound = report.ledger.total;
  report.ok = true;
  return report;
}

}  // namespace quench
