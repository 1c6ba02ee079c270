#include <cmath>

#include "qmdp/qsolve.hpp"

namespace qmdp {

namespace {

// Sufficient condition: if every action-side Schmidt factor of M annihilates a common
// vector v, then pi = |v><v| gives <M, rho (x) pi> = 0 for all rho.
void kernel_test(const HermitianOperator& m, int dx, int da, double tol, AssumptionReport& r) {
  OperatorSchmidt s = operator_schmidt(m, dx, da);
  const double wmax = s.weights.empty() ? 0.0 : s.weights.front();
  const double cut = std::max(1e-10 * wmax, tol);
  std::vector<const HermitianOperator*> keep;
  for (int k = 0; k < s.rank; ++k)
    if (s.weights[k] > cut) keep.push_back(&s.right[k]);
  r.schmidt_rank = static_cast<int>(keep.size());
  if (keep.empty()) {
    r.kernel_condition = true;
    return;
  }
  CMat stacked(static_cast<Eigen::Index>(keep.size()) * da, da);
  for (size_t k = 0; k < keep.size(); ++k) stacked.middleRows(static_cast<Eigen::Index>(k) * da, da) = keep[k]->mat();
  Eigen::JacobiSVD<CMat> svd(stacked);
  const auto& sv = svd.singularValues();
  r.kernel_condition = sv(sv.size() - 1) <= std::max(1e-8, tol);
}

template <class ProbeValue>
AssumptionReport run_check(const HermitianOperator& m, const HermitianOperator& xi,
                           const std::vector<DensityOperator>& probes, double tol, int dx, int da,
                           ProbeValue probe_value) {
  AssumptionReport r;
  r.dual_margin = min_eig(m);
  bool refuted = r.dual_margin < -tol;
  for (const auto& p : probes) {
    if (p.dim() != dx) throw DimensionError("assumption check: probe must act on H_X");
    double res = std::abs(probe_value(p) - hs_inner(xi, p.op()));
    r.probe_residuals.push_back(res);
    r.worst_probe_residual = std::max(r.worst_probe_residual, res);
    if (res > tol) refuted = true;
  }
  kernel_test(m, dx, da, tol, r);
  if (refuted)
    r.status = AssumptionStatus::refuted;
  else
    r.status = r.kernel_condition ? AssumptionStatus::certified : AssumptionStatus::unknown;
  return r;
}

}  // namespace

AssumptionReport check_assumption1(const QmdpInstance& q, const HermitianOperator& xi,
                                   const std::vector<DensityOperator>& probes, double tol) {
  if (xi.dim() != q.dimX()) throw DimensionError("check_assumption1: xi must act on H_X");
  HermitianOperator m = q.cost() - op_T_adj(q, xi);
  return run_check(m, xi, probes, tol, q.dimX(), q.dimA(),
                   [&](const DensityOperator& p) { return min_over_actions(q, p.op(), xi).value; });
}

AssumptionReport check_assumption2(const QmdpInstance& q, const HermitianOperator& xi,
                                   const std::vector<DensityOperator>& probes, double tol) {
  if (xi.dim() != q.dimX()) throw DimensionError("check_assumption2: xi must act on H_X");
  HermitianOperator xw = nqc(xi);
  HermitianOperator m = q.cost() - op_T_adj(q, xw);
  HermitianOperator lin = trusted_hermitian(q.cost().mat() +
                                            q.beta() * kraus_adjoint_apply(q.channel().kraus(), xw.mat()));
  return run_check(m, xw, probes, tol, q.dimX(), q.dimA(), [&](const DensityOperator& p) {
    return csp_linear_min(q.dimX(), q.dimA(), csp_pullback(lin, p.op(), q.dimX(), q.dimA())).value;
  });
}

}  // namespace qmdp
