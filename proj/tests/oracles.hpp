#pragma once

// Reference implementations for tests.  Deliberately written with plain loops and no
// calls into the library's algebra, so agreement is meaningful.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qmdp/channel.hpp"
#include "qmdp/classical.hpp"
#include "qmdp/instance.hpp"

namespace oracle {

using qmdp::cd;
using qmdp::CMat;
using qmdp::RMat;
using qmdp::RVec;
using Rng = std::mt19937_64;

inline CMat gaussian(int r, int c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cd(n(rng), n(rng));
  return m;
}

inline CMat herm(int d, Rng& rng) {
  CMat g = gaussian(d, d, rng);
  return 0.5 * (g + g.adjoint());
}

inline CMat density(int d, Rng& rng) {
  CMat g = gaussian(d, d, rng);
  CMat r = g * g.adjoint();
  return r / r.trace().real();
}

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline CMat ptrace_second(const CMat& m, int d1, int d2) {
  CMat out = CMat::Zero(d1, d1);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j)
      for (int k = 0; k < d2; ++k) out(i, j) += m(i * d2 + k, j * d2 + k);
  return out;
}

inline CMat ptrace_first(const CMat& m, int d1, int d2) {
  CMat out = CMat::Zero(d2, d2);
  for (int i = 0; i < d2; ++i)
    for (int j = 0; j < d2; ++j)
      for (int k = 0; k < d1; ++k) out(i, j) += m(k * d2 + i, k * d2 + j);
  return out;
}

inline double tr_inner(const CMat& a, const CMat& b) {
  cd s = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) s += std::conj(a(i, j)) * b(i, j);
  return s.real();
}

inline CMat apply_kraus_naive(const std::vector<CMat>& ks, const CMat& r) {
  CMat out = CMat::Zero(ks[0].rows(), ks[0].rows());
  for (const auto& k : ks) out += k * r * k.adjoint();
  return out;
}

inline CMat apply_adj(const std::vector<CMat>& ks, const CMat& x) {
  CMat out = CMat::Zero(ks[0].cols(), ks[0].cols());
  for (const auto& k : ks) out += k.adjoint() * x * k;
  return out;
}

// Stinespring construction: a random isometry C^in -> C^out (x) C^env sliced into Kraus operators.
inline std::vector<CMat> random_kraus(int in, int out, int env, Rng& rng) {
  CMat g = gaussian(out * env, in, rng);
  Eigen::HouseholderQR<CMat> qr(g);
  CMat v = qr.householderQ() * CMat::Identity(out * env, in);
  std::vector<CMat> ks;
  for (int e = 0; e < env; ++e) {
    CMat k(out, in);
    for (int o = 0; o < out; ++o) k.row(o) = v.row(o * env + e);
    ks.push_back(k);
  }
  return ks;
}

// Choi matrix straight from the definition sum |i><j| (x) N(|i><j|).
inline CMat choi_of(const std::vector<CMat>& ks, int in, int out) {
  CMat c = CMat::Zero(in * out, in * out);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < in; ++j) {
      CMat e = CMat::Zero(in, in);
      e(i, j) = 1.0;
      c.block(i * out, j * out, out, out) = apply_kraus_naive(ks, e);
    }
  return c;
}

inline double min_eig(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Bottom of the spectrum by shifted power iteration on (s I - H).
inline double min_eig_power(const CMat& h, Rng& rng, int iters = 20000) {
  const int d = static_cast<int>(h.rows());
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += h.row(i).cwiseAbs().sum();
  CMat m = s * CMat::Identity(d, d) - h;
  Eigen::VectorXcd v = gaussian(d, 1, rng).col(0);
  v.normalize();
  for (int i = 0; i < iters; ++i) {
    v = m * v;
    v.normalize();
  }
  return (v.adjoint() * h * v)(0, 0).real();
}

struct RandomMdp {
  int nx, na;
  std::vector<double> p;  // [y][x][a]
  RMat c;
  double beta;
  qmdp::ClassicalMdp mdp() const { return qmdp::ClassicalMdp(nx, na, p, c, beta); }
};

inline RandomMdp random_mdp(int nx, int na, double beta, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  RandomMdp m{nx, na, std::vector<double>(static_cast<size_t>(nx) * nx * na), RMat(nx, na), beta};
  for (int x = 0; x < nx; ++x)
    for (int a = 0; a < na; ++a) {
      std::vector<double> col(nx);
      double s = 0;
      for (auto& v : col) s += (v = e(rng));
      // make the last entry absorb rounding so each column sums to 1 exactly enough
      double acc = 0;
      for (int y = 0; y < nx; ++y) {
        double v = y + 1 < nx ? col[y] / s : 1.0 - acc;
        acc += v;
        m.p[(static_cast<size_t>(y) * nx + x) * na + a] = v;
      }
      m.c(x, a) = u(rng);
    }
  return m;
}

// Optimal values by exhaustive policy enumeration: v* is the componentwise minimum of the
// values of all deterministic stationary policies, each found by a linear solve.
inline RVec optimal_values(const RandomMdp& m) {
  const int nx = m.nx, na = m.na;
  int total = 1;
  for (int x = 0; x < nx; ++x) total *= na;
  RVec best = RVec::Constant(nx, std::numeric_limits<double>::infinity());
  for (int code = 0; code < total; ++code) {
    RMat a = RMat::Identity(nx, nx);
    RVec c(nx);
    int rest = code;
    for (int x = 0; x < nx; ++x) {
      int act = rest % na;
      rest /= na;
      c(x) = m.c(x, act);
      for (int y = 0; y < nx; ++y) a(x, y) -= m.beta * m.p[(static_cast<size_t>(y) * nx + x) * na + act];
    }
    RVec v = a.fullPivLu().solve(c);
    best = best.cwiseMin(v);
  }
  return best;
}

// Value of a stochastic policy pi (rows pi(.|x)) by direct linear solve.
inline RVec policy_values(const RandomMdp& m, const RMat& pi) {
  const int nx = m.nx, na = m.na;
  RMat a = RMat::Identity(nx, nx);
  RVec c = RVec::Zero(nx);
  for (int x = 0; x < nx; ++x)
    for (int act = 0; act < na; ++act) {
      c(x) += pi(x, act) * m.c(x, act);
      for (int y = 0; y < nx; ++y)
        a(x, y) -= m.beta * pi(x, act) * m.p[(static_cast<size_t>(y) * nx + x) * na + act];
    }
  return a.fullPivLu().solve(c);
}

// Random q-MDP with Stinespring dynamics and a random Hermitian cost in [0, 1]-ish scale.
inline qmdp::QmdpInstance random_instance(int dx, int da, double beta, Rng& rng, int env = 2) {
  auto ks = random_kraus(dx * da, dx, std::max(env, da), rng);
  CMat c = herm(dx * da, rng);
  c /= std::max(1.0, c.norm());
  return qmdp::QmdpInstance(dx, da, qmdp::KrausChannel(dx * da, dx, ks), qmdp::HermitianOperator(c), beta,
                            qmdp::DensityOperator(qmdp::HermitianOperator(density(dx, rng))));
}

// Truncated rollout written out longhand.
inline double rollout_cost(const qmdp::QmdpInstance& q, const std::function<CMat(const CMat&)>& policy, int horizon,
                           CMat* occupation = nullptr) {
  CMat rho = q.rho0().mat();
  const auto& ks = q.channel().kraus();
  double total = 0, bt = 1;
  CMat occ = CMat::Zero(q.dimXA(), q.dimXA());
  for (int t = 0; t < horizon; ++t) {
    CMat s = policy(rho);
    total += bt * tr_inner(q.cost().mat(), s);
    occ += (1 - q.beta()) * bt * s;
    rho = apply_kraus_naive(ks, s);
    bt *= q.beta();
  }
  if (occupation) *occupation = occ;
  return total;
}

}  // namespace oracle

namespace oracle {

// Random Schur multiplier of a classical-state-preserving policy: Gram matrix of random
// vectors phi_{x,a}, rescaled so that sum_a |phi_{x,a}|^2 = 1 for every x.
inline CMat random_gram(int dx, int da, Rng& rng) {
  CMat g = gaussian(dx * da, dx * da, rng);
  for (int x = 0; x < dx; ++x) g.middleRows(x * da, da) /= g.middleRows(x * da, da).norm();
  return g * g.adjoint();
}

// c = Y (x) R with Y >= 0, R > 0 and dynamics rho (x) pi -> Phi(rho), Phi a random channel on H_X.
struct ProductFamily {
  qmdp::QmdpInstance q;
  CMat y, r;
  std::vector<CMat> phi;
};

inline ProductFamily product_family(int dx, int da, double beta, Rng& rng) {
  ProductFamily f;
  CMat gy = gaussian(dx, dx, rng), gr = gaussian(da, da, rng);
  f.y = gy * gy.adjoint();
  f.y /= f.y.norm();
  f.r = gr * gr.adjoint() + 0.2 * CMat::Identity(da, da);
  f.r /= f.r.norm();
  f.phi = random_kraus(dx, dx, 2, rng);
  std::vector<CMat> ks;
  for (const auto& k : f.phi)
    for (int a = 0; a < da; ++a) {
      CMat e = CMat::Zero(1, da);
      e(0, a) = 1.0;
      ks.push_back(kron(k, e));
    }
  f.q = qmdp::QmdpInstance(dx, da, qmdp::KrausChannel(dx * da, dx, ks), qmdp::HermitianOperator(kron(f.y, f.r)), beta,
                           qmdp::DensityOperator(qmdp::HermitianOperator(density(dx, rng))));
  return f;
}

// xi* = (I - beta Phi^dag)^{-1}(lambda_min(R) Y) via the Neumann series.
inline CMat product_family_xi(const ProductFamily& f) {
  CMat target = min_eig(f.r) * f.y, xi = target, term = target;
  for (int k = 0; k < 2000; ++k) {
    term = f.q.beta() * apply_adj(f.phi, term);
    xi += term;
    if (term.norm() < 1e-17) break;
  }
  return xi;
}

}  // namespace oracle
