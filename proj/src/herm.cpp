#include "qmdp/herm.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

namespace qmdp {

namespace {

void require_square(const CMat& m, const char* what) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << ": expected square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

void require_dim(int actual, int expected, const char* what) {
  if (actual != expected) {
    std::ostringstream os;
    os << what << ": dimension " << actual << " does not match " << expected;
    throw DimensionError(os.str());
  }
}

}  // namespace

HermitianOperator::HermitianOperator(const CMat& m, double max_correction) {
  require_square(m, "HermitianOperator");
  if (!m.allFinite()) throw InvalidInput("HermitianOperator: non-finite entry");
  CMat anti = (m - m.adjoint()) * 0.5;
  double corr = anti.size() ? anti.cwiseAbs().maxCoeff() : 0.0;
  if (corr > max_correction) {
    std::ostringstream os;
    os << "HermitianOperator: anti-Hermitian part " << corr << " exceeds " << max_correction;
    throw InvalidInput(os.str());
  }
  m_ = (m + m.adjoint()) * 0.5;
}

HermitianOperator trusted_hermitian(CMat m) {
  CMat h = (m + m.adjoint()) * 0.5;
  return HermitianOperator(std::move(h), HermitianOperator::Trusted{});
}

HermitianOperator HermitianOperator::zero(int dim) { return trusted_hermitian(CMat::Zero(dim, dim)); }

HermitianOperator HermitianOperator::identity(int dim) {
  return trusted_hermitian(CMat::Identity(dim, dim));
}

HermitianOperator HermitianOperator::diagonal(const RVec& d) {
  return trusted_hermitian(d.cast<cd>().asDiagonal().toDenseMatrix());
}

HermitianOperator HermitianOperator::projector(const CVec& v) {
  return trusted_hermitian(v * v.adjoint());
}

HermitianOperator HermitianOperator::basis_projector(int dim, int i) {
  CMat m = CMat::Zero(dim, dim);
  m(i, i) = 1.0;
  return trusted_hermitian(std::move(m));
}

HermitianOperator& HermitianOperator::operator+=(const HermitianOperator& o) {
  require_dim(o.dim(), dim(), "operator+");
  m_ += o.m_;
  return *this;
}

HermitianOperator& HermitianOperator::operator-=(const HermitianOperator& o) {
  require_dim(o.dim(), dim(), "operator-");
  m_ -= o.m_;
  return *this;
}

HermitianOperator& HermitianOperator::operator*=(double s) {
  m_ *= s;
  return *this;
}

HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b) { return a += b; }
HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b) { return a -= b; }
HermitianOperator operator-(HermitianOperator a) { return a *= -1.0; }
HermitianOperator operator*(double s, HermitianOperator a) { return a *= s; }
HermitianOperator operator*(HermitianOperator a, double s) { return a *= s; }

DensityOperator::DensityOperator(HermitianOperator h, const Tolerances& tol) : h_(std::move(h)) {
  if (h_.dim() == 0) throw InvalidInput("DensityOperator: empty");
  double lmin = min_eig(h_);
  if (lmin < -tol.psd) {
    std::ostringstream os;
    os << "DensityOperator: minimum eigenvalue " << lmin << " below -" << tol.psd;
    throw InvalidInput(os.str());
  }
  double tr = h_.trace();
  if (std::abs(tr - 1.0) > tol.trace) {
    std::ostringstream os;
    os << "DensityOperator: trace " << tr << " differs from 1 by more than " << tol.trace;
    throw InvalidInput(os.str());
  }
}

DensityOperator DensityOperator::maximally_mixed(int dim) {
  return DensityOperator(HermitianOperator::identity(dim) * (1.0 / dim));
}

DensityOperator DensityOperator::basis_state(int dim, int i) {
  return DensityOperator(HermitianOperator::basis_projector(dim, i));
}

DensityOperator DensityOperator::pure(const CVec& v) {
  return DensityOperator(HermitianOperator::projector(v / v.norm()));
}

CMat kron(const CMat& a, const CMat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b) {
  return trusted_hermitian(kron(a.mat(), b.mat()));
}

CMat ptrace_a(const CMat& m, int dimX, int dimA) {
  require_square(m, "partial_trace_A");
  require_dim(static_cast<int>(m.rows()), dimX * dimA, "partial_trace_A");
  CMat out = CMat::Zero(dimX, dimX);
  for (int x = 0; x < dimX; ++x)
    for (int y = 0; y < dimX; ++y)
      out(x, y) = m.block(x * dimA, y * dimA, dimA, dimA).trace();
  return out;
}

CMat ptrace_x(const CMat& m, int dimX, int dimA) {
  require_square(m, "partial_trace_X");
  require_dim(static_cast<int>(m.rows()), dimX * dimA, "partial_trace_X");
  CMat out = CMat::Zero(dimA, dimA);
  for (int x = 0; x < dimX; ++x) out += m.block(x * dimA, x * dimA, dimA, dimA);
  return out;
}

HermitianOperator partial_trace_A(const HermitianOperator& m, int dimX, int dimA) {
  return trusted_hermitian(ptrace_a(m.mat(), dimX, dimA));
}

HermitianOperator partial_trace_X(const HermitianOperator& m, int dimX, int dimA) {
  return trusted_hermitian(ptrace_x(m.mat(), dimX, dimA));
}

CMat contract_x(const CMat& m, const CMat& rho, int dimX, int dimA) {
  require_dim(static_cast<int>(m.rows()), dimX * dimA, "contract_x");
  require_dim(static_cast<int>(rho.rows()), dimX, "contract_x");
  CMat g = CMat::Zero(dimA, dimA);
  for (int x = 0; x < dimX; ++x)
    for (int y = 0; y < dimX; ++y)
      if (rho(y, x) != cd(0.0)) g += rho(y, x) * m.block(x * dimA, y * dimA, dimA, dimA);
  return g;
}

CMat contract_a(const CMat& m, const CMat& pi, int dimX, int dimA) {
  require_dim(static_cast<int>(m.rows()), dimX * dimA, "contract_a");
  require_dim(static_cast<int>(pi.rows()), dimA, "contract_a");
  CMat h(dimX, dimX);
  for (int x = 0; x < dimX; ++x)
    for (int y = 0; y < dimX; ++y)
      h(x, y) = m.block(x * dimA, y * dimA, dimA, dimA).cwiseProduct(pi.transpose()).sum();
  return h;
}

double hs_inner(const CMat& a, const CMat& b) {
  require_dim(static_cast<int>(a.rows()), static_cast<int>(b.rows()), "hs_inner");
  // Tr(ab) = sum_ij a_ij b_ji
  cd s = a.cwiseProduct(b.transpose()).sum();
  double scale = 1.0 + a.norm() * b.norm();
  if (std::abs(s.imag()) > 1e-10 * scale) {
    std::ostringstream os;
    os << "hs_inner: imaginary part " << s.imag() << " on Hermitian inputs";
    throw NumericalError(os.str());
  }
  return s.real();
}

double hs_inner(const HermitianOperator& a, const HermitianOperator& b) {
  return hs_inner(a.mat(), b.mat());
}

double hs_norm(const HermitianOperator& a) { return a.mat().norm(); }

EigenDecomposition eig_h(const CMat& h) {
  require_square(h, "eig_h");
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("eig_h: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

EigenDecomposition eig_h(const HermitianOperator& h) { return eig_h(h.mat()); }

double min_eig(const CMat& h) {
  if (h.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("min_eig: eigensolver did not converge");
  return es.eigenvalues()(0);
}

double min_eig(const HermitianOperator& h) { return min_eig(h.mat()); }

double spectral_norm(const HermitianOperator& h) {
  if (h.dim() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(h.mat(), Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(h.dim() - 1)));
}

std::vector<HermitianOperator> hermitian_basis(int dim) {
  std::vector<HermitianOperator> out;
  out.reserve(static_cast<size_t>(dim) * dim);
  const int n = dim * dim;
  for (int k = 0; k < n; ++k) {
    RVec e = RVec::Zero(n);
    e(k) = 1.0;
    out.push_back(trusted_hermitian(from_hermitian_coords(e, dim)));
  }
  return out;
}

RVec hermitian_coords(const CMat& h) {
  const int d = static_cast<int>(h.rows());
  RVec c(d * d);
  int k = 0;
  for (int i = 0; i < d; ++i) c(k++) = h(i, i).real();
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      c(k++) = r2 * h(i, j).real();
      c(k++) = r2 * h(i, j).imag();
    }
  return c;
}

CMat from_hermitian_coords(const RVec& coords, int d) {
  require_dim(static_cast<int>(coords.size()), d * d, "from_hermitian_coords");
  CMat h = CMat::Zero(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i) h(i, i) = coords(k++);
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double re = coords(k++) / r2;
      double im = coords(k++) / r2;
      h(i, j) = cd(re, im);
      h(j, i) = cd(re, -im);
    }
  return h;
}

OperatorSchmidt operator_schmidt(const HermitianOperator& m, int dimX, int dimA, double rel_cutoff) {
  require_dim(m.dim(), dimX * dimA, "operator_schmidt");
  // Coefficients in product Hermitian bases are real; their SVD gives Hermitian factors.
  auto bx = hermitian_basis(dimX);
  auto ba = hermitian_basis(dimA);
  const int nx = dimX * dimX, na = dimA * dimA;
  RMat t(nx, na);
  for (int k = 0; k < nx; ++k) {
    CMat partial = contract_x(m.mat(), bx[k].mat(), dimX, dimA);  // Tr_X(m (F_k (x) Id))
    for (int l = 0; l < na; ++l) t(k, l) = hs_inner(ba[l].mat(), partial);
  }
  Eigen::JacobiSVD<RMat> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  OperatorSchmidt out;
  if (s.size() == 0 || s(0) == 0.0) return out;
  for (int k = 0; k < s.size(); ++k) {
    if (s(k) <= rel_cutoff * s(0)) break;
    out.weights.push_back(s(k));
    out.left.push_back(trusted_hermitian(from_hermitian_coords(svd.matrixU().col(k), dimX)));
    out.right.push_back(trusted_hermitian(from_hermitian_coords(svd.matrixV().col(k), dimA)));
  }
  out.rank = static_cast<int>(out.weights.size());
  return out;
}

}  // namespace qmdp
