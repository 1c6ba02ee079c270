#include <cmath>

#include "qmdp/qsolve.hpp"

namespace qmdp {

HermitianOperator csp_pullback(const HermitianOperator& m, const HermitianOperator& rho, int dimX, int dimA) {
  return trusted_hermitian(schur_apply(m.mat(), rho.mat().transpose(), dimX, dimA));
}

CMat normalize_gram(const CMat& z, int dimX, int dimA) {
  auto ed = eig_h(z);
  CMat c = ed.vectors * ed.values.cwiseMax(0.0).asDiagonal() * ed.vectors.adjoint();
  RVec d(dimX * dimA);
  for (int x = 0; x < dimX; ++x) {
    double t = c.block(x * dimA, x * dimA, dimA, dimA).trace().real();
    if (t <= 1e-14) {
      // degenerate block: decouple it and put the uniform action there
      c.middleRows(x * dimA, dimA).setZero();
      c.middleCols(x * dimA, dimA).setZero();
      c.block(x * dimA, x * dimA, dimA, dimA) = CMat::Identity(dimA, dimA);
      t = dimA;
    }
    d.segment(x * dimA, dimA).setConstant(1.0 / std::sqrt(t));
  }
  CMat out = d.asDiagonal() * c * d.asDiagonal();
  return 0.5 * (out + out.adjoint());
}

CspLinearMin csp_linear_min(int dimX, int dimA, const HermitianOperator& g, const SdpOptions& opts) {
  const int n = dimX * dimA;
  if (g.dim() != n) throw DimensionError("csp_linear_min: objective dimension");
  SdpProblem p;
  p.dim = n;
  p.objective = g;
  for (int x = 0; x < dimX; ++x) {
    RVec d = RVec::Zero(n);
    d.segment(x * dimA, dimA).setOnes();
    p.constraints.push_back({HermitianOperator::diagonal(d), 1.0});
  }
  SdpSolution sol = solve(p, opts);
  CspLinearMin r;
  r.status = sol.status;
  r.z = normalize_gram(sol.x.mat(), dimX, dimA);
  r.value = hs_inner(g.mat(), r.z);
  return r;
}

CMat random_csp_gram(int dimX, int dimA, Rng& rng) {
  const int n = dimX * dimA;
  CMat g = random_ginibre(n, n, rng);
  return normalize_gram(g * g.adjoint(), dimX, dimA);
}

std::optional<CMat> extract_csp_gram(const QmdpInstance& q, const HermitianOperator& sigma,
                                     const SdpOptions& opts) {
  const int n = q.dimXA(), dx = q.dimX(), da = q.dimA();
  if (sigma.dim() != n) throw DimensionError("extract_csp_gram: sigma dimension");
  // state marginal the occupation sigma would have under a stationary closed-loop policy
  HermitianOperator rho_bar = trusted_hermitian((1.0 - q.beta()) * q.rho0().mat() +
                                                q.beta() * kraus_apply(q.channel().kraus(), sigma.mat()));
  auto stack = [n](const CMat& z, const CMat& p, const CMat& m) {
    CMat out = CMat::Zero(3 * n, 3 * n);
    out.block(0, 0, n, n) = z;
    out.block(n, n, n, n) = p;
    out.block(2 * n, 2 * n, n, n) = m;
    return trusted_hermitian(std::move(out));
  };
  SdpProblem p;
  p.dim = 3 * n;
  p.blocks = {n, n, n};
  const CMat zero = CMat::Zero(n, n), id = CMat::Identity(n, n);
  p.objective = stack(zero, id, id);
  for (int x = 0; x < dx; ++x) {
    CMat d = CMat::Zero(n, n);
    d.block(x * da, x * da, da, da).setIdentity();
    p.constraints.push_back({stack(d, zero, zero), 1.0});
  }
  for (const auto& f : hermitian_basis(n)) {
    CMat pb = csp_pullback(f, rho_bar, dx, da).mat();
    p.constraints.push_back({stack(pb, -f.mat(), f.mat()), hs_inner(f, sigma)});
  }
  SdpSolution sol = solve(p, opts);
  if (sol.status != SdpStatus::optimal && sol.status != SdpStatus::max_iter) return std::nullopt;
  return normalize_gram(sol.x.mat().block(0, 0, n, n), dx, da);
}

}  // namespace qmdp
