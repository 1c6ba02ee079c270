#include "qmdp/classical.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qmdp {

namespace {

void require_distribution(const RVec& mu, int n, const char* what) {
  if (mu.size() != n) throw DimensionError(std::string(what) + ": distribution has wrong length");
  if (mu.minCoeff() < 0.0 || std::abs(mu.sum() - 1.0) > 1e-9)
    throw InvalidInput(std::string(what) + ": mu0 is not a distribution");
}

SdpProblem lp_problem(const ClassicalMdp& mdp, const RVec& mu0) {
  const int nx = mdp.nx(), na = mdp.na(), n = nx * na;
  SdpProblem sp;
  sp.dim = n;
  sp.blocks.assign(n, 1);
  RVec cost(n);
  for (int x = 0; x < nx; ++x)
    for (int a = 0; a < na; ++a) cost(x * na + a) = mdp.c(x, a);
  sp.objective = HermitianOperator::diagonal(cost);
  for (int y = 0; y < nx; ++y) {
    RVec row(n);
    for (int x = 0; x < nx; ++x)
      for (int a = 0; a < na; ++a)
        row(x * na + a) = (x == y ? 1.0 : 0.0) - mdp.beta() * mdp.p(y, x, a);
    sp.constraints.push_back({HermitianOperator::diagonal(row), (1.0 - mdp.beta()) * mu0(y)});
  }
  return sp;
}

}  // namespace

ClassicalMdp::ClassicalMdp(int nx, int na, std::vector<double> p, RMat c, double beta)
    : nx_(nx), na_(na), p_(std::move(p)), c_(std::move(c)), beta_(beta) {
  if (nx_ <= 0 || na_ <= 0) throw DimensionError("ClassicalMdp: sizes must be positive");
  if (p_.size() != static_cast<size_t>(nx_) * nx_ * na_)
    throw DimensionError("ClassicalMdp: transition tensor has wrong size");
  if (c_.rows() != nx_ || c_.cols() != na_) throw DimensionError("ClassicalMdp: cost table has wrong shape");
  if (!c_.allFinite()) throw InvalidInput("ClassicalMdp: non-finite cost");
  if (!(beta_ > 0.0 && beta_ < 1.0)) throw InvalidInput("ClassicalMdp: beta must lie in (0, 1)");
  for (int x = 0; x < nx_; ++x)
    for (int a = 0; a < na_; ++a) {
      double s = 0.0;
      for (int y = 0; y < nx_; ++y) {
        double v = this->p(y, x, a);
        if (!(v >= 0.0)) throw InvalidInput("ClassicalMdp: negative or non-finite transition probability");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "ClassicalMdp: p(.|" << x << "," << a << ") sums to " << s;
        throw InvalidInput(os.str());
      }
    }
}

RMat ClassicalMdp::kernel() const {
  RMat w(nx_, nx_ * na_);
  for (int y = 0; y < nx_; ++y)
    for (int x = 0; x < nx_; ++x)
      for (int a = 0; a < na_; ++a) w(y, x * na_ + a) = p(y, x, a);
  return w;
}

OccupancyMeasure::OccupancyMeasure(RMat n) : nu(std::move(n)) {
  if (nu.size() == 0) throw InvalidInput("OccupancyMeasure: empty");
  if (nu.minCoeff() < -1e-9) throw InvalidInput("OccupancyMeasure: negative entry");
  if (std::abs(nu.sum() - 1.0) > 1e-8) throw InvalidInput("OccupancyMeasure: entries do not sum to 1");
}

StationaryKernel::StationaryKernel(RMat p) : pi(std::move(p)) {
  for (int x = 0; x < pi.rows(); ++x) {
    if (pi.row(x).minCoeff() < 0.0) throw InvalidInput("StationaryKernel: negative entry");
    if (std::abs(pi.row(x).sum() - 1.0) > 1e-12) throw InvalidInput("StationaryKernel: row does not sum to 1");
  }
}

ValueIterationResult value_iteration(const ClassicalMdp& mdp, double tol) {
  const int nx = mdp.nx(), na = mdp.na();
  const double beta = mdp.beta();
  auto q_values = [&](const RVec& v) {
    RMat q(nx, na);
    for (int x = 0; x < nx; ++x)
      for (int a = 0; a < na; ++a) {
        double s = 0.0;
        for (int y = 0; y < nx; ++y) s += mdp.p(y, x, a) * v(y);
        q(x, a) = mdp.c(x, a) + beta * s;
      }
    return q;
  };
  const double stop = tol * (1.0 - beta) / (2.0 * beta);
  ValueIterationResult r;
  RVec v = RVec::Zero(nx);
  for (;;) {
    RVec lv = q_values(v).rowwise().minCoeff();
    ++r.iterations;
    double res = (lv - v).cwiseAbs().maxCoeff();
    v = lv;
    if (res <= stop) break;
  }
  RMat q = q_values(v);
  r.policy.resize(nx);
  for (int x = 0; x < nx; ++x) {
    int best = 0;
    for (int a = 1; a < na; ++a)
      if (q(x, a) < q(x, best)) best = a;
    r.policy[x] = best;
  }
  r.v = v;
  return r;
}

RVec dmdp_step(const RMat& nu, const ClassicalMdp& mdp) {
  if (nu.rows() != mdp.nx() || nu.cols() != mdp.na()) throw DimensionError("dmdp_step: table shape");
  RVec out = RVec::Zero(mdp.nx());
  for (int y = 0; y < mdp.nx(); ++y)
    for (int x = 0; x < mdp.nx(); ++x)
      for (int a = 0; a < mdp.na(); ++a) out(y) += mdp.p(y, x, a) * nu(x, a);
  return out;
}

OccupancyLpResult occupancy_lp(const ClassicalMdp& mdp, const RVec& mu0, const SdpOptions& opts) {
  require_distribution(mu0, mdp.nx(), "occupancy_lp");
  SdpProblem sp = lp_problem(mdp, mu0);
  SdpSolution sol = solve(sp, opts);
  if (sol.status != SdpStatus::optimal)
    throw NumericalError("occupancy_lp: solver returned " + to_string(sol.status));
  RMat nu(mdp.nx(), mdp.na());
  for (int x = 0; x < mdp.nx(); ++x)
    for (int a = 0; a < mdp.na(); ++a) nu(x, a) = std::max(0.0, sol.x(x * mdp.na() + a, x * mdp.na() + a).real());
  nu /= nu.sum();
  OccupancyLpResult r;
  r.nu = OccupancyMeasure(std::move(nu));
  r.value = sol.primal_obj;
  r.solution = std::move(sol);
  return r;
}

DualLpResult lp_dual(const ClassicalMdp& mdp, const RVec& mu0, const SdpOptions& opts) {
  require_distribution(mu0, mdp.nx(), "lp_dual");
  SdpSolution sol = solve(lp_problem(mdp, mu0), opts);
  if (sol.status != SdpStatus::optimal)
    throw NumericalError("lp_dual: solver returned " + to_string(sol.status));
  DualLpResult r;
  r.xi = Eigen::Map<const RVec>(sol.y.data(), static_cast<Eigen::Index>(sol.y.size()));
  r.value = sol.dual_obj;
  return r;
}

StationaryKernel disintegrate(const OccupancyMeasure& nu) {
  const int nx = static_cast<int>(nu.nu.rows()), na = static_cast<int>(nu.nu.cols());
  RMat pi(nx, na);
  for (int x = 0; x < nx; ++x) {
    double m = nu.nu.row(x).sum();
    if (m > 1e-12) {
      pi.row(x) = nu.nu.row(x).cwiseMax(0.0) / nu.nu.row(x).cwiseMax(0.0).sum();
    } else {
      pi.row(x).setConstant(1.0 / na);
    }
  }
  return StationaryKernel(std::move(pi));
}

QmdpInstance embed_to_qmdp(const ClassicalMdp& mdp, const RVec& mu0) {
  require_distribution(mu0, mdp.nx(), "embed_to_qmdp");
  const int nx = mdp.nx(), na = mdp.na();
  RVec cost(nx * na);
  for (int x = 0; x < nx; ++x)
    for (int a = 0; a < na; ++a) cost(x * na + a) = mdp.c(x, a);
  return QmdpInstance(nx, na, classical_channel_embed(mdp.kernel()), HermitianOperator::diagonal(cost),
                      mdp.beta(), DensityOperator(HermitianOperator::diagonal(mu0)));
}

}  // namespace qmdp
