#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qmdp/channel.hpp"
#include "qmdp/conic.hpp"
#include "qmdp/instance.hpp"
#include "qmdp/random.hpp"

namespace qmdp {

// Stationary when pis has one element; otherwise pi_t = pis[min(t, size-1)].
struct OpenLoopPolicy {
  std::vector<DensityOperator> pis;
  static OpenLoopPolicy stationary(DensityOperator pi) { return {{std::move(pi)}}; }
  const DensityOperator& at(int t) const { return pis[std::min<size_t>(t, pis.size() - 1)]; }
};

using Policy = std::variant<OpenLoopPolicy, CspPolicyChannel>;

enum class AssumptionStatus { certified, refuted, unknown };
std::string to_string(AssumptionStatus s);

struct SolveReport {
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;  // |primal - dual| / (1 + |primal|)
  std::variant<std::monostate, OpenLoopPolicy, CspPolicyChannel> extracted_policy;
  std::optional<double> rollout_value;  // (1-beta) * discounted rollout cost
  AssumptionStatus assumption_status = AssumptionStatus::unknown;

  std::string status;      // optimal | max_iter | infeasible | unbounded | stationary
  bool optimal = false;    // certified to tolerance
  HermitianOperator sigma; // primal occupation operator, when available
  HermitianOperator xi;    // dual operator, when available
  int iterations = 0;
  double fw_gap = 0.0;     // final Frank-Wolfe gap for bi-linear solves
};

// ---- conic formulations -------------------------------------------------

SdpProblem build_sdp_open(const QmdpInstance& q);
SdpProblem build_sdp_closed(const QmdpInstance& q);
SolveReport solve_sdp_open(const QmdpInstance& q, const SdpOptions& opts = {});
SolveReport solve_sdp_closed(const QmdpInstance& q, const SdpOptions& opts = {});

struct ActionMin {
  double value = 0.0;
  DensityOperator argmin;
};
ActionMin min_over_actions(const QmdpInstance& q, const HermitianOperator& rho, const HermitianOperator& xi);

// min <G, Z> over {Z >= 0 on H_X (x) H_A, Tr Z_xx = 1}, the Schur-multiplier form of the
// classical-state-preserving Choi spectrahedron.
struct CspLinearMin {
  double value = 0.0;
  CMat z;
  SdpStatus status = SdpStatus::max_iter;
};
CspLinearMin csp_linear_min(int dimX, int dimA, const HermitianOperator& g, const SdpOptions& opts = {});
// Linear functional rho -> <m, gamma(rho)> pulled back to the Schur-multiplier variable.
HermitianOperator csp_pullback(const HermitianOperator& m, const HermitianOperator& rho, int dimX, int dimA);
// Congruence that restores Tr Z_xx = 1 after clipping negative eigenvalues.
CMat normalize_gram(const CMat& z, int dimX, int dimA);
CMat random_csp_gram(int dimX, int dimA, Rng& rng);
// Policy whose stationary occupation is closest (trace norm) to sigma; used to warm-start
// the closed-loop bi-linear search from the relaxation optimum.
std::optional<CMat> extract_csp_gram(const QmdpInstance& q, const HermitianOperator& sigma,
                                     const SdpOptions& opts = {});

// ---- value functions -----------------------------------------------------

struct NetOptions {
  int cap = 20000;
  int threads = 0;  // 0: QMDP_THREADS or hardware concurrency
  SdpOptions sdp;
  std::uint64_t probe_seed = 7;
};

struct ValueNet {
  int resolution = 0;
  std::vector<DensityOperator> points;
  std::vector<HermitianOperator> xis;
  std::vector<double> dual_values;
  // Guaranteed covering radius of the construction when radius_certified; otherwise
  // equal to the empirical value.
  double covering_radius_estimate = 0.0;
  double covering_radius_empirical = 0.0;
  bool radius_certified = false;
  int dropped = 0;

  int nearest(const HermitianOperator& rho) const;
  double evaluate(const HermitianOperator& rho) const;
};

int default_threads();
std::vector<DensityOperator> build_net(int dimX, int n, int cap, bool* certified = nullptr,
                                       double* radius = nullptr);
ValueNet value_net_open(const QmdpInstance& q, int n, const NetOptions& opts = {});
double bellman_step_open(const QmdpInstance& q, const ValueNet& net, const HermitianOperator& rho);

struct ClosedValue {
  RVec diag_xi;
  HermitianOperator xi() const { return HermitianOperator::diagonal(diag_xi); }
  double evaluate(const HermitianOperator& rho) const { return diag_xi.dot(rho.diag()); }
};
ClosedValue value_closed(const QmdpInstance& q, const SdpOptions& opts = {});
double bellman_step_closed(const QmdpInstance& q, const ClosedValue& v, const HermitianOperator& rho,
                           const SdpOptions& opts = {});

// ---- trajectories ----------------------------------------------------------

struct RolloutResult {
  double discounted_cost = 0.0;             // sum_{t<T} beta^t <c, sigma_t>
  std::vector<HermitianOperator> states;    // rho_0 .. rho_T
  HermitianOperator occupation;             // (1-beta) sum_{t<T} beta^t sigma_t
  double cost_tail_bound = 0.0;             // beta^T ||c||_spec / (1-beta), on discounted_cost
  double occupation_tail_bound = 0.0;       // beta^T, trace norm of the missing occupation mass
};

int default_horizon(const QmdpInstance& q);
RolloutResult rollout(const QmdpInstance& q, const Policy& policy, int horizon);
DensityOperator fixed_point_state(const QmdpInstance& q, const DensityOperator& pi);
HermitianOperator fixed_point_sigma(const QmdpInstance& q, const CspPolicyChannel& gamma);

// ---- bi-linear programs ----------------------------------------------------

struct BilOptions {
  int max_outer = 300;
  double tol = 1e-8;
  int restarts = 8;
  std::uint64_t seed = 42;
};

double bil_open_objective(const QmdpInstance& q, const HermitianOperator& pi);
HermitianOperator bil_open_gradient(const QmdpInstance& q, const HermitianOperator& pi);
double bil_closed_objective(const QmdpInstance& q, const CMat& z);
HermitianOperator bil_closed_gradient(const QmdpInstance& q, const CMat& z);

SolveReport solve_bil_open(const QmdpInstance& q, const BilOptions& opts = {});
SolveReport solve_bil_closed(const QmdpInstance& q, const BilOptions& opts = {});

// ---- assumption checks -----------------------------------------------------

struct AssumptionReport {
  AssumptionStatus status = AssumptionStatus::unknown;
  double dual_margin = 0.0;          // lambda_min(c - T^dag(xi))
  double worst_probe_residual = 0.0; // max over probes
  std::vector<double> probe_residuals;
  int schmidt_rank = 0;
  bool kernel_condition = false;
};

AssumptionReport check_assumption1(const QmdpInstance& q, const HermitianOperator& xi,
                                   const std::vector<DensityOperator>& probes, double tol);
AssumptionReport check_assumption2(const QmdpInstance& q, const HermitianOperator& xi,
                                   const std::vector<DensityOperator>& probes, double tol);

}  // namespace qmdp
