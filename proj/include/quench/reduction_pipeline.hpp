#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "quench/gaussian_geometry.hpp"
#include "quench/hamiltonian_sim.hpp"
#include "quench/robust_interp.hpp"

namespace quench {

enum class CorruptionModel { Offset, Uniform, Callback };

// Simulated average-case solver: exact D(g) plus bounded noise at good
// points, an arbitrary value at corrupted ones. Deterministic in (seed, g).
struct OracleConfig {
  double epsilon_a = 0.0;     // additive accuracy at good points
  double delta_corrupt = 0.0; // per-call corruption probability
  CorruptionModel model = CorruptionModel::Offset;
  double offset = 1.0;        // Offset model: returned value = truth + offset
  std::function<double(const CoeffVector&, double truth)> callback;
  double tau = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// One oracle call. The corrupted flag is written by the oracle and read only
// by tests and post-hoc report assembly, never by the reduction itself.
struct EvalRecord {
  std::uint64_t point_key = 0;
  double value = 0.0;
  bool corrupted = false;
};

class Oracle {
 public:
  explicit Oracle(OracleConfig config);

  // Value plus the index of the trace record it produced. Thread-safe.
  std::pair<double, std::size_t> eval(const CoeffVector& g) const;
  double operator()(const CoeffVector& g) const { return eval(g).first; }

  const OracleConfig& config() const { return config_; }
  std::vector<EvalRecord> trace() const;
  std::size_t call_count() const;

 private:
  OracleConfig config_;
  mutable std::mutex mu_;
  mutable std::vector<EvalRecord> trace_;
};

struct ReductionParams {
  double tau = 1.0;
  int m = 16;          // surrogate truncation order; drives degrees and bins
  int m_radii = 1000;  // radius draws (before retries)
  int m_angles = 400;  // angle draws per circumference (before retries)
  int b_radial = 0;    // 0: use 2m
  int b_circ = 0;      // 0: use ceil(m / 0.4) + 1
  int k_radial = -1;   // -1: 0.11 * B when corruption is on, else 0
  int k_circ = -1;     // -1: 0.25 * B when corruption is on, else 0
  int circ_degree = 0;    // 0: auto (3m/4, capped by occupancy)
  int radial_degree = 0;  // 0: auto (m, capped by occupancy)
  double radius_factor = 2.5;  // widens the circumference node interval
  double epsilon_fit = 1e-6;   // slack over epsilon_a for surrogate mismatch
  // The radial fit consumes circumference estimates, whose error is set by
  // that stage's decode and extrapolation, not by epsilon_a. Its noise band
  // gets a separate, looser slack.
  double radial_epsilon_fit = 1e-3;
  int max_retries = 3;  // sample-count doublings before giving up
  int jobs = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StageReport {
  std::string name;
  int samples_drawn = 0;
  int occupancy = 0;
  int nodes_used = 0;
  int corrupted_surviving = 0;  // filled from the oracle trace after the run
  bool ok = false;
  std::string error;
};

struct LedgerEntry {
  std::string name;
  std::string formula;
  double log10_value = 0.0;  // -inf encodes an exact zero
};

struct BoundLedger {
  std::vector<LedgerEntry> entries;
  double log10_total = 0.0;
  double total = 0.0;  // saturates to inf when the chain overflows
};

// Inputs to the certified bound chain. All error magnitudes are absolute;
// factors are carried in log10 so the chain survives astronomically loose
// regimes without overflow.
struct LedgerInputs {
  double taylor_worst = 0.0;   // surrogate error at the target point
  double taylor_node = 0.0;    // surrogate error at the sampled nodes
  double eps_oracle = 0.0;     // oracle accuracy + fit slack
  int n_circ = 0;              // circumference node count
  double delta_circ = 0.0;     // mapped node separation, circumference stage
  double circ_extrap_log10 = 0.0;  // growth factor from the node interval to x=1
  int n_radial = 0;
  double delta_radial = 0.0;   // mapped node separation, radial stage
  double radial_extrap_log10 = 0.0;  // growth factor out to ||g_worst||
};

BoundLedger assemble_bound_ledger(const LedgerInputs& in);

// X = cos(theta); Y averages the oracle over +-theta on the circle of radius
// R, which cancels the odd part of the target in X.
std::pair<double, double> symmetrized_sample(const Oracle& oracle, const PlaneFrame& frame,
                                             double radius, double theta);

struct CircumferenceResult {
  double estimate = 0.0;
  StageReport stage;
  std::vector<std::size_t> record_indices;
  ChebyshevFit fit;
};

// Algorithm: sample angles, symmetrize oracle pairs, thin to one node per
// bin, robust-fit, read off the fitted value at cos(theta) = 1.
CircumferenceResult interpolate_circumference(const Oracle& oracle, const PlaneFrame& frame,
                                              double radius, const ReductionParams& params,
                                              RngStream rng);

struct ReductionReport {
  double estimate = 0.0;
  std::optional<double> truth;
  double certified_bound = 0.0;
  double log10_certified_bound = 0.0;
  BoundLedger ledger;
  std::vector<StageReport> stages;
  bool ok = false;
  std::string failure;

  nlohmann::json to_json() const;
};

// The full two-level reduction: radial nodes, one circumference interpolation
// per node, a robust radial fit, then evaluation at ||g_worst||.
ReductionReport worst_to_average_reduce(const Oracle& oracle, const CoeffVector& g_worst,
                                        const ReductionParams& params);

}  // namespace quench
