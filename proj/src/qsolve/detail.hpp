#pragma once

#include <functional>
#include <string>

#include "qmdp/herm.hpp"

namespace qmdp::detail {

// Matrix of a real-linear Hermitian map in orthonormal Hermitian coordinates.  The basis is
// HS-orthonormal, so the matrix of the adjoint map is the transpose.
inline RMat map_matrix(int in_dim, const std::function<CMat(const CMat&)>& f) {
  auto basis = hermitian_basis(in_dim);
  RMat m;
  for (size_t j = 0; j < basis.size(); ++j) {
    RVec col = hermitian_coords(f(basis[j].mat()));
    if (j == 0) m.resize(col.size(), static_cast<Eigen::Index>(basis.size()));
    m.col(static_cast<Eigen::Index>(j)) = col;
  }
  return m;
}

// Solves a x = b, refusing systems whose condition number exceeds 1e12.
inline RVec solve_checked(const RMat& a, const RVec& b, const std::string& what) {
  Eigen::JacobiSVD<RMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0) || s(0) / smin > 1e12)
    throw NumericalError(what + ": fixed-point system is ill-conditioned (condition number above 1e12)");
  return svd.solve(b);
}

// Clips negative eigenvalues and renormalizes the trace.
inline CMat project_density(const CMat& m) {
  auto ed = eig_h(m);
  RVec v = ed.values.cwiseMax(0.0);
  if (v.sum() <= 0.0) return CMat::Identity(m.rows(), m.cols()) / static_cast<double>(m.rows());
  CMat out = ed.vectors * (v / v.sum()).asDiagonal() * ed.vectors.adjoint();
  return 0.5 * (out + out.adjoint());
}

}  // namespace qmdp::detail
