#pragma once

#include <cstdint>
#include <random>

#include "qmdp/herm.hpp"

namespace qmdp {

using Rng = std::mt19937_64;

CMat random_ginibre(int rows, int cols, Rng& rng);
HermitianOperator random_hermitian(int dim, Rng& rng);
// Hilbert-Schmidt ensemble; full rank with probability one.
DensityOperator random_density(int dim, Rng& rng);
DensityOperator random_pure(int dim, Rng& rng);
CMat random_unitary(int dim, Rng& rng);
// Columns are distributions.
RMat random_stochastic(int rows, int cols, Rng& rng);

}  // namespace qmdp
