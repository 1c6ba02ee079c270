#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qmdp {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Plain complex matrices are Eigen matrices; shape is carried by Eigen.
using ComplexMatrix = CMat;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double herm = 1e-12;
  double psd = 1e-9;
  double trace = 1e-9;
  // largest anti-Hermitian part absorbed by symmetrization
  double symmetrize = 1e-8;
};

class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(const CMat& m, double max_correction = Tolerances{}.symmetrize);

  static HermitianOperator zero(int dim);
  static HermitianOperator identity(int dim);
  static HermitianOperator diagonal(const RVec& d);
  static HermitianOperator projector(const CVec& v);  // |v><v|
  static HermitianOperator basis_projector(int dim, int i);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMat& mat() const { return m_; }
  cd operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.diagonal().real().sum(); }
  RVec diag() const { return m_.diagonal().real(); }

  HermitianOperator& operator+=(const HermitianOperator& o);
  HermitianOperator& operator-=(const HermitianOperator& o);
  HermitianOperator& operator*=(double s);

 private:
  struct Trusted {};
  HermitianOperator(CMat m, Trusted) : m_(std::move(m)) {}
  friend HermitianOperator trusted_hermitian(CMat m);
  CMat m_;
};

// Symmetrizes without the rejection check; for results of exact Hermitian algebra.
HermitianOperator trusted_hermitian(CMat m);

HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b);
HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b);
HermitianOperator operator-(HermitianOperator a);
HermitianOperator operator*(double s, HermitianOperator a);
HermitianOperator operator*(HermitianOperator a, double s);

class DensityOperator {
 public:
  DensityOperator() = default;
  explicit DensityOperator(HermitianOperator h, const Tolerances& tol = {});

  static DensityOperator maximally_mixed(int dim);
  static DensityOperator basis_state(int dim, int i);
  static DensityOperator pure(const CVec& v);

  int dim() const { return h_.dim(); }
  const HermitianOperator& op() const { return h_; }
  const CMat& mat() const { return h_.mat(); }
  operator const HermitianOperator&() const { return h_; }

 private:
  HermitianOperator h_;
};

struct EigenDecomposition {
  RVec values;   // ascending
  CMat vectors;  // columns
};

struct OperatorSchmidt {
  int rank = 0;
  std::vector<double> weights;
  std::vector<HermitianOperator> left;   // on H_X
  std::vector<HermitianOperator> right;  // on H_A
};

// Index convention everywhere: (x, a) -> x * dim(b) + a, left factor first.
CMat kron(const CMat& a, const CMat& b);
HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b);

CMat ptrace_a(const CMat& m, int dimX, int dimA);
CMat ptrace_x(const CMat& m, int dimX, int dimA);
HermitianOperator partial_trace_A(const HermitianOperator& m, int dimX, int dimA);
HermitianOperator partial_trace_X(const HermitianOperator& m, int dimX, int dimA);

// G[a][b] = sum_{x,y} m[(x,a)][(y,b)] * rho[y][x], i.e. Tr_X(m (rho (x) Id)).
CMat contract_x(const CMat& m, const CMat& rho, int dimX, int dimA);
// H[x][y] = sum_{a,b} m[(x,a)][(y,b)] * pi[b][a], i.e. Tr_A(m (Id (x) pi)).
CMat contract_a(const CMat& m, const CMat& pi, int dimX, int dimA);

double hs_inner(const HermitianOperator& a, const HermitianOperator& b);
double hs_inner(const CMat& a, const CMat& b);
double hs_norm(const HermitianOperator& a);

EigenDecomposition eig_h(const HermitianOperator& h);
EigenDecomposition eig_h(const CMat& h);
double min_eig(const HermitianOperator& h);
double min_eig(const CMat& h);
double spectral_norm(const HermitianOperator& h);

// Orthonormal (HS) Hermitian basis: E_ii, (E_ij+E_ji)/sqrt2, i(E_ij-E_ji)/sqrt2 for i<j.
std::vector<HermitianOperator> hermitian_basis(int dim);
RVec hermitian_coords(const CMat& h);
CMat from_hermitian_coords(const RVec& coords, int dim);

OperatorSchmidt operator_schmidt(const HermitianOperator& m, int dimX, int dimA,
                                 double rel_cutoff = 1e-10);

}  // namespace qmdp
