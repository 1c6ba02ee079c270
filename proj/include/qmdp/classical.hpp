#pragma once

#include <vector>

#include "qmdp/conic.hpp"
#include "qmdp/instance.hpp"

namespace qmdp {

class ClassicalMdp {
 public:
  ClassicalMdp() = default;
  // p is indexed [y][x][a]; c is nx x na.
  ClassicalMdp(int nx, int na, std::vector<double> p, RMat c, double beta);

  int nx() const { return nx_; }
  int na() const { return na_; }
  double beta() const { return beta_; }
  double p(int y, int x, int a) const { return p_[(static_cast<size_t>(y) * nx_ + x) * na_ + a]; }
  double c(int x, int a) const { return c_(x, a); }
  const RMat& cost() const { return c_; }
  // nx x (nx*na) column-stochastic kernel W(y | (x,a)), column index x*na + a.
  RMat kernel() const;

 private:
  int nx_ = 0, na_ = 0;
  std::vector<double> p_;
  RMat c_;
  double beta_ = 0.0;
};

struct OccupancyMeasure {
  RMat nu;  // nx x na
  OccupancyMeasure() = default;
  explicit OccupancyMeasure(RMat nu);
};

struct StationaryKernel {
  RMat pi;  // nx x na, rows pi(.|x)
  StationaryKernel() = default;
  explicit StationaryKernel(RMat pi);
};

struct ValueIterationResult {
  RVec v;
  std::vector<int> policy;
  int iterations = 0;
};

struct OccupancyLpResult {
  OccupancyMeasure nu;
  double value = 0.0;
  SdpSolution solution;
};

struct DualLpResult {
  RVec xi;
  double value = 0.0;
};

ValueIterationResult value_iteration(const ClassicalMdp& mdp, double tol);
RVec dmdp_step(const RMat& nu, const ClassicalMdp& mdp);
OccupancyLpResult occupancy_lp(const ClassicalMdp& mdp, const RVec& mu0, const SdpOptions& opts = {});
DualLpResult lp_dual(const ClassicalMdp& mdp, const RVec& mu0, const SdpOptions& opts = {});
StationaryKernel disintegrate(const OccupancyMeasure& nu);
QmdpInstance embed_to_qmdp(const ClassicalMdp& mdp, const RVec& mu0);

}  // namespace qmdp
