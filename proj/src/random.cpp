#include "qmdp/random.hpp"

#include <cmath>

namespace qmdp {

CMat random_ginibre(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      double re = g(rng);
      double im = g(rng);
      m(i, j) = cd(re, im);
    }
  return m;
}

HermitianOperator random_hermitian(int dim, Rng& rng) {
  return trusted_hermitian(random_ginibre(dim, dim, rng));
}

DensityOperator random_density(int dim, Rng& rng) {
  CMat g = random_ginibre(dim, dim, rng);
  CMat r = g * g.adjoint();
  r /= r.trace().real();
  return DensityOperator(trusted_hermitian(r));
}

DensityOperator random_pure(int dim, Rng& rng) {
  CMat g = random_ginibre(dim, 1, rng);
  return DensityOperator::pure(g.col(0));
}

CMat random_unitary(int dim, Rng& rng) {
  CMat g = random_ginibre(dim, dim, rng);
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ();
  CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    double a = std::abs(r(j, j));
    if (a > 0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

RMat random_stochastic(int rows, int cols, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  RMat w(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) w(i, j) = e(rng);
    w.col(j) /= w.col(j).sum();
  }
  return w;
}

}  // namespace qmdp
