#include <cmath>

#include "detail.hpp"
#include "qmdp/qsolve.hpp"

namespace qmdp {

int default_horizon(const QmdpInstance& q) {
  const double c = hs_norm(q.cost());
  const double b = q.beta();
  int t = 1;
  double bt = b;
  while (bt * c / (1.0 - b) >= 1e-9) {
    bt *= b;
    ++t;
  }
  return t;
}

RolloutResult rollout(const QmdpInstance& q, const Policy& policy, int horizon) {
  if (horizon < 1) throw InvalidInput("rollout: horizon must be at least 1");
  const int dx = q.dimX(), da = q.dimA();
  if (const auto* ol = std::get_if<OpenLoopPolicy>(&policy)) {
    if (ol->pis.empty()) throw InvalidInput("rollout: empty open-loop policy");
    for (const auto& p : ol->pis)
      if (p.dim() != da) throw DimensionError("rollout: policy state must act on H_A");
  } else {
    const auto& g = std::get<CspPolicyChannel>(policy);
    if (g.dimX() != dx || g.dimA() != da) throw DimensionError("rollout: policy channel dimensions");
  }
  const double b = q.beta();
  RolloutResult r;
  CMat rho = q.rho0().mat();
  CMat occ = CMat::Zero(dx * da, dx * da);
  r.states.push_back(q.rho0().op());
  double bt = 1.0;
  for (int t = 0; t < horizon; ++t) {
    CMat sigma;
    if (const auto* ol = std::get_if<OpenLoopPolicy>(&policy))
      sigma = kron(rho, ol->at(t).mat());
    else
      sigma = schur_apply(std::get<CspPolicyChannel>(policy).gram(), rho, dx, da);
    r.discounted_cost += bt * hs_inner(q.cost().mat(), sigma);
    occ += ((1.0 - b) * bt) * sigma;
    rho = kraus_apply(q.channel().kraus(), sigma);
    rho = 0.5 * (rho + rho.adjoint());
    r.states.push_back(trusted_hermitian(rho));
    bt *= b;
  }
  r.occupation = trusted_hermitian(std::move(occ));
  r.cost_tail_bound = bt * spectral_norm(q.cost()) / (1.0 - b);
  r.occupation_tail_bound = bt;
  return r;
}

DensityOperator fixed_point_state(const QmdpInstance& q, const DensityOperator& pi) {
  if (pi.dim() != q.dimA()) throw DimensionError("fixed_point_state: pi must act on H_A");
  const double b = q.beta();
  const auto& k = q.channel().kraus();
  RMat l = detail::map_matrix(q.dimX(), [&](const CMat& r) { return CMat(b * kraus_apply(k, kron(r, pi.mat()))); });
  RMat a = RMat::Identity(l.rows(), l.cols()) - l;
  RVec x = detail::solve_checked(a, (1.0 - b) * hermitian_coords(q.rho0().mat()), "fixed_point_state");
  Tolerances tol{1e-12, 1e-8, 1e-8, 1e-8};
  return DensityOperator(trusted_hermitian(from_hermitian_coords(x, q.dimX())), tol);
}

HermitianOperator fixed_point_sigma(const QmdpInstance& q, const CspPolicyChannel& gamma) {
  if (gamma.dimX() != q.dimX() || gamma.dimA() != q.dimA())
    throw DimensionError("fixed_point_sigma: policy channel dimensions");
  const double b = q.beta();
  const int dx = q.dimX(), da = q.dimA();
  const auto& k = q.channel().kraus();
  const CMat& z = gamma.gram();
  RMat l = detail::map_matrix(dx, [&](const CMat& r) { return CMat(b * kraus_apply(k, schur_apply(z, r, dx, da))); });
  RMat a = RMat::Identity(l.rows(), l.cols()) - l;
  RVec x = detail::solve_checked(a, (1.0 - b) * hermitian_coords(q.rho0().mat()), "fixed_point_sigma");
  return trusted_hermitian(schur_apply(z, from_hermitian_coords(x, dx), dx, da));
}

}  // namespace qmdp
