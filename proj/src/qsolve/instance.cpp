#include "qmdp/instance.hpp"

#include <cmath>
#include <sstream>

namespace qmdp {

QmdpInstance::QmdpInstance(int dimX, int dimA, KrausChannel n, HermitianOperator cost, double beta,
                           DensityOperator rho0)
    : dx_(dimX), da_(dimA), n_(std::move(n)), c_(std::move(cost)), beta_(beta), rho0_(std::move(rho0)) {
  if (dx_ <= 0 || da_ <= 0) throw DimensionError("QmdpInstance: dimensions must be positive");
  if (n_.in_dim() != dx_ * da_ || n_.out_dim() != dx_) {
    std::ostringstream os;
    os << "QmdpInstance: channel maps " << n_.in_dim() << " -> " << n_.out_dim() << ", expected "
       << dx_ * da_ << " -> " << dx_;
    throw DimensionError(os.str());
  }
  if (c_.dim() != dx_ * da_) throw DimensionError("QmdpInstance: cost dimension must be dimX*dimA");
  if (rho0_.dim() != dx_) throw DimensionError("QmdpInstance: rho0 dimension must be dimX");
  if (!(beta_ >= 0.0 && beta_ < 1.0)) throw InvalidInput("QmdpInstance: beta must lie in [0, 1)");
}

QmdpInstance QmdpInstance::with_rho0(DensityOperator rho0) const {
  return QmdpInstance(dx_, da_, n_, c_, beta_, std::move(rho0));
}

HermitianOperator op_T(const QmdpInstance& q, const HermitianOperator& sigma) {
  if (sigma.dim() != q.dimXA()) throw DimensionError("op_T: sigma must act on H_X (x) H_A");
  CMat t = ptrace_a(sigma.mat(), q.dimX(), q.dimA()) - q.beta() * kraus_apply(q.channel().kraus(), sigma.mat());
  return trusted_hermitian(std::move(t));
}

HermitianOperator op_T_adj(const QmdpInstance& q, const HermitianOperator& xi) {
  if (xi.dim() != q.dimX()) throw DimensionError("op_T_adj: xi must act on H_X");
  CMat t = kron(xi.mat(), CMat::Identity(q.dimA(), q.dimA())) -
           q.beta() * kraus_adjoint_apply(q.channel().kraus(), xi.mat());
  return trusted_hermitian(std::move(t));
}

HermitianOperator op_Tw(const QmdpInstance& q, const HermitianOperator& sigma) {
  return nqc(op_T(q, sigma));
}

HermitianOperator op_Tw_adj(const QmdpInstance& q, const HermitianOperator& xi) {
  if (xi.dim() != q.dimX()) throw DimensionError("op_Tw_adj: xi must act on H_X");
  return op_T_adj(q, nqc(xi));
}

}  // namespace qmdp
