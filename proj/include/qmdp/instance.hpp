#pragma once

#include "qmdp/channel.hpp"
#include "qmdp/herm.hpp"

namespace qmdp {

// States live on H_X, actions on H_X (x) H_A, dynamics N: H_X (x) H_A -> H_X.
class QmdpInstance {
 public:
  QmdpInstance() = default;
  // beta = 0 is accepted (one-stage problem); beta must be < 1.
  QmdpInstance(int dimX, int dimA, KrausChannel n, HermitianOperator cost, double beta,
               DensityOperator rho0);

  int dimX() const { return dx_; }
  int dimA() const { return da_; }
  int dimXA() const { return dx_ * da_; }
  const KrausChannel& channel() const { return n_; }
  const HermitianOperator& cost() const { return c_; }
  double beta() const { return beta_; }
  const DensityOperator& rho0() const { return rho0_; }

  QmdpInstance with_rho0(DensityOperator rho0) const;

 private:
  int dx_ = 0, da_ = 0;
  KrausChannel n_;
  HermitianOperator c_;
  double beta_ = 0.0;
  DensityOperator rho0_;
};

// T(s) = Tr_A s - beta N(s);  T^dag(xi) = xi (x) Id - beta N^dag(xi)
HermitianOperator op_T(const QmdpInstance& q, const HermitianOperator& sigma);
HermitianOperator op_T_adj(const QmdpInstance& q, const HermitianOperator& xi);
// T_w = N_qc o T;  T_w^dag(xi) = N_qc(xi) (x) Id - beta N^dag(N_qc(xi))
HermitianOperator op_Tw(const QmdpInstance& q, const HermitianOperator& sigma);
HermitianOperator op_Tw_adj(const QmdpInstance& q, const HermitianOperator& xi);

}  // namespace qmdp
