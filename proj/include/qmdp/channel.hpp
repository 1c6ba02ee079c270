#pragma once

#include <optional>
#include <vector>

#include "qmdp/herm.hpp"

namespace qmdp {

class KrausChannel {
 public:
  KrausChannel() = default;
  // Throws InvalidInput unless sum K^dag K = Id within tol.
  KrausChannel(int in_dim, int out_dim, std::vector<CMat> kraus, double tol = 1e-9);
  static KrausChannel unchecked(int in_dim, int out_dim, std::vector<CMat> kraus);

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  const std::vector<CMat>& kraus() const { return k_; }

 private:
  int in_ = 0, out_ = 0;
  std::vector<CMat> k_;
};

// Ordering in (x) out: block (i,j) is theta(|i><j|).
class ChoiMatrix {
 public:
  ChoiMatrix() = default;
  ChoiMatrix(int in_dim, int out_dim, HermitianOperator m, const Tolerances& tol = {});
  static ChoiMatrix unchecked(int in_dim, int out_dim, HermitianOperator m);

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  const HermitianOperator& matrix() const { return m_; }
  CMat block(int i, int j) const { return m_.mat().block(i * out_, j * out_, out_, out_); }

 private:
  int in_ = 0, out_ = 0;
  HermitianOperator m_;
};

// A classical-state-preserving policy channel H_X -> H_X (x) H_A.  Such a channel
// is supported on span{|x>|x,a>} of the Choi space, so it is equivalently the Schur
// multiplier gamma(rho)[(x,a),(y,b)] = rho[x][y] * Z[(x,a),(y,b)] with Z >= 0 and
// Tr Z_xx = 1; gram() returns that Z.
class CspPolicyChannel {
 public:
  CspPolicyChannel() = default;
  CspPolicyChannel(ChoiMatrix choi, int dimX, int dimA, double tol = 1e-8);
  static CspPolicyChannel from_gram(const CMat& z, int dimX, int dimA, double tol = 1e-8);

  const ChoiMatrix& choi() const { return choi_; }
  int dimX() const { return dx_; }
  int dimA() const { return da_; }
  const CMat& gram() const { return z_; }

 private:
  ChoiMatrix choi_;
  int dx_ = 0, da_ = 0;
  CMat z_;
};

struct CptpReport {
  bool pass = false;
  double psd_margin = 0.0;    // lambda_min of the Choi matrix
  double tp_residual = 0.0;   // ||Tr_out(C) - Id||_HS
};

struct CspReport {
  bool pass = false;
  double residual = 0.0;  // max_x ||Tr_A(Lambda(C,|x><x|)) - |x><x|||_HS
};

CMat kraus_apply(const std::vector<CMat>& kraus, const CMat& rho);
CMat kraus_adjoint_apply(const std::vector<CMat>& kraus, const CMat& xi);
CMat choi_apply(const CMat& choi, int in_dim, int out_dim, const CMat& rho);
// Adjoint of rho -> Lambda(C, rho): K[j][i] = Tr(m * block(i,j)).
CMat choi_adjoint_apply(const CMat& choi, int in_dim, int out_dim, const CMat& m);
CMat schur_apply(const CMat& z, const CMat& rho, int dimX, int dimA);
CMat gram_to_choi(const CMat& z, int dimX, int dimA);

HermitianOperator apply_kraus(const KrausChannel& n, const HermitianOperator& rho);
HermitianOperator adjoint_apply(const KrausChannel& n, const HermitianOperator& xi);
ChoiMatrix kraus_to_choi(const KrausChannel& n);
HermitianOperator apply_choi(const ChoiMatrix& c, const HermitianOperator& rho);
HermitianOperator apply_policy(const CspPolicyChannel& g, const HermitianOperator& rho);
KrausChannel choi_to_kraus(const ChoiMatrix& c, double rel_cutoff = 1e-10);

CptpReport verify_cptp(const ChoiMatrix& c, double tol);
CptpReport verify_cptp(const KrausChannel& n, double tol);

CMat nqc(const CMat& rho);
HermitianOperator nqc(const HermitianOperator& rho);

// w is m x n with columns W(.|i); result maps C^n -> C^m.
KrausChannel classical_channel_embed(const RMat& w);
KrausChannel appending_channel(const DensityOperator& pi, int dimX);
// pi is |X| x |A| with rows pi(.|x).
CspPolicyChannel classical_policy_channel(const RMat& pi);
CspReport csp_membership(const ChoiMatrix& c, double tol);

// If Tr_A o gamma = id on a spanning set, gamma must be rho -> rho (x) xi; returns xi.
std::optional<DensityOperator> appended_state(const ChoiMatrix& c, int dimX, int dimA,
                                              double tol = 1e-8);

}  // namespace qmdp
