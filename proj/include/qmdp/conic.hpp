#pragma once

#include <string>
#include <vector>

#include "qmdp/herm.hpp"

namespace qmdp {

struct SdpConstraint {
  HermitianOperator a;
  double b = 0.0;
};

// minimize <C, X>  s.t.  <A_i, X> = b_i,  X >= 0  (Hermitian X).
// `blocks` optionally partitions dim into diagonal blocks; X is then restricted to
// block-diagonal form and all data must vanish off the blocks.
struct SdpProblem {
  int dim = 0;
  HermitianOperator objective;
  std::vector<SdpConstraint> constraints;
  std::vector<int> blocks;
};

enum class SdpStatus { optimal, infeasible, unbounded, max_iter };
std::string to_string(SdpStatus s);

struct SdpOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::max_iter;
  HermitianOperator x;
  std::vector<double> y;
  HermitianOperator slack;  // C - sum y_i A_i
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_residual = 0.0;  // ||A(X) - b|| / (1 + ||b||)
  double dual_residual = 0.0;    // max(0, -lambda_min(slack)) / (1 + ||C||)
  double gap = 0.0;              // |<C,X> - b.y| / (1 + |<C,X>|)
  int iterations = 0;
};

RMat herm_to_real(const HermitianOperator& h);

SdpSolution solve(const SdpProblem& p, const SdpOptions& opts = {});

}  // namespace qmdp
