#include <cmath>
#include <sstream>

#include "qmdp/log.hpp"
#include "qmdp/qsolve.hpp"

namespace qmdp {

std::string to_string(AssumptionStatus s) {
  switch (s) {
    case AssumptionStatus::certified: return "certified";
    case AssumptionStatus::refuted: return "refuted";
    case AssumptionStatus::unknown: return "unknown";
  }
  return "unknown";
}

namespace {

double rel_gap(double p, double d) { return std::abs(p - d) / (1.0 + std::abs(p)); }

SolveReport report_from(const SdpSolution& sol, HermitianOperator xi) {
  SolveReport r;
  r.primal_value = sol.primal_obj;
  r.dual_value = sol.dual_obj;
  r.gap = rel_gap(sol.primal_obj, sol.dual_obj);
  r.status = to_string(sol.status);
  r.optimal = sol.status == SdpStatus::optimal;
  r.sigma = sol.x;
  r.xi = std::move(xi);
  r.iterations = sol.iterations;
  return r;
}

}  // namespace

SdpProblem build_sdp_open(const QmdpInstance& q) {
  SdpProblem p;
  p.dim = q.dimXA();
  p.objective = q.cost();
  const double scale = 1.0 - q.beta();
  for (const auto& f : hermitian_basis(q.dimX()))
    p.constraints.push_back({op_T_adj(q, f), scale * hs_inner(f, q.rho0().op())});
  return p;
}

SdpProblem build_sdp_closed(const QmdpInstance& q) {
  SdpProblem p;
  p.dim = q.dimXA();
  p.objective = q.cost();
  const double scale = 1.0 - q.beta();
  for (int x = 0; x < q.dimX(); ++x) {
    auto f = HermitianOperator::basis_projector(q.dimX(), x);
    p.constraints.push_back({op_T_adj(q, f), scale * q.rho0().op()(x, x).real()});
  }
  return p;
}

SolveReport solve_sdp_open(const QmdpInstance& q, const SdpOptions& opts) {
  SdpSolution sol = solve(build_sdp_open(q), opts);
  auto basis = hermitian_basis(q.dimX());
  CMat xi = CMat::Zero(q.dimX(), q.dimX());
  for (size_t i = 0; i < basis.size(); ++i) xi += sol.y[i] * basis[i].mat();
  return report_from(sol, trusted_hermitian(std::move(xi)));
}

SolveReport solve_sdp_closed(const QmdpInstance& q, const SdpOptions& opts) {
  SdpSolution sol = solve(build_sdp_closed(q), opts);
  RVec d(q.dimX());
  for (int x = 0; x < q.dimX(); ++x) d(x) = sol.y[x];
  return report_from(sol, HermitianOperator::diagonal(d));
}

ActionMin min_over_actions(const QmdpInstance& q, const HermitianOperator& rho, const HermitianOperator& xi) {
  if (rho.dim() != q.dimX() || xi.dim() != q.dimX()) throw DimensionError("min_over_actions: operands must act on H_X");
  CMat m = q.cost().mat() + q.beta() * kraus_adjoint_apply(q.channel().kraus(), xi.mat());
  auto ed = eig_h(trusted_hermitian(contract_x(m, rho.mat(), q.dimX(), q.dimA())));
  const double lo = ed.values(0);
  const double cut = lo + 1e-10 * (1.0 + std::abs(lo));
  CMat p = CMat::Zero(q.dimA(), q.dimA());
  int k = 0;
  for (int i = 0; i < ed.values.size() && ed.values(i) <= cut; ++i, ++k)
    p += ed.vectors.col(i) * ed.vectors.col(i).adjoint();
  return {lo, DensityOperator(trusted_hermitian(p / static_cast<double>(k)))};
}

ClosedValue value_closed(const QmdpInstance& q, const SdpOptions& opts) {
  ClosedValue v;
  v.diag_xi.resize(q.dimX());
  for (int x = 0; x < q.dimX(); ++x) {
    SolveReport r = solve_sdp_closed(q.with_rho0(DensityOperator::basis_state(q.dimX(), x)), opts);
    if (!r.optimal) {
      std::ostringstream os;
      os << "value_closed: dual solve at basis state |" << x << "> returned " << r.status;
      throw NumericalError(os.str());
    }
    v.diag_xi(x) = r.xi(x, x).real();
  }
  return v;
}

double bellman_step_closed(const QmdpInstance& q, const ClosedValue& v, const HermitianOperator& rho,
                           const SdpOptions& opts) {
  if (rho.dim() != q.dimX()) throw DimensionError("bellman_step_closed: rho must act on H_X");
  HermitianOperator m = trusted_hermitian(q.cost().mat() +
                                          q.beta() * kraus_adjoint_apply(q.channel().kraus(), v.xi().mat()));
  CspLinearMin r = csp_linear_min(q.dimX(), q.dimA(), csp_pullback(m, rho, q.dimX(), q.dimA()), opts);
  if (r.status != SdpStatus::optimal)
    throw NumericalError("bellman_step_closed: policy subproblem returned " + to_string(r.status));
  return r.value;
}

}  // namespace qmdp
