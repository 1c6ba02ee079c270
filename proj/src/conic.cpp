#include "qmdp/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qmdp/log.hpp"

namespace qmdp {

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::unbounded: return "unbounded";
    case SdpStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

RMat herm_to_real(const HermitianOperator& h) {
  const int n = h.dim();
  RMat r(2 * n, 2 * n);
  RMat re = h.mat().real(), im = h.mat().imag();
  r << re, -im, im, re;
  return r;
}

namespace {

using Blocks = std::vector<RMat>;

struct BlockMap {
  int offset = 0;
  int size = 0;      // Hermitian size
  bool complex = false;
  int n = 0;         // real size
};

struct RealProblem {
  std::vector<BlockMap> map;
  Blocks c;
  std::vector<Blocks> a;
  std::vector<std::vector<char>> active;
  RVec b;
  int nu = 0;  // total real dimension
};

double inner(const Blocks& x, const Blocks& y) {
  double s = 0.0;
  for (size_t k = 0; k < x.size(); ++k) s += x[k].cwiseProduct(y[k]).sum();
  return s;
}

double fro(const Blocks& x) { return std::sqrt(inner(x, x)); }

Blocks scaled(const Blocks& x, double s) {
  Blocks r = x;
  for (auto& m : r) m *= s;
  return r;
}

void axpy(Blocks& y, double a, const Blocks& x) {
  for (size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
}

RMat real_block(const CMat& h, const BlockMap& bm) {
  CMat blk = h.block(bm.offset, bm.offset, bm.size, bm.size);
  if (!bm.complex) return blk.real();
  RMat r(bm.n, bm.n);
  RMat re = blk.real(), im = blk.imag();
  r << re, -im, im, re;
  return 0.5 * r;
}

CMat herm_block(const RMat& z, const BlockMap& bm) {
  if (!bm.complex) return z.cast<cd>();
  const int s = bm.size;
  RMat re = 0.5 * (z.topLeftCorner(s, s) + z.bottomRightCorner(s, s));
  RMat im = 0.5 * (z.bottomLeftCorner(s, s) - z.topRightCorner(s, s));
  CMat h(s, s);
  h.real() = re;
  h.imag() = im;
  return h;
}

bool off_block_zero(const CMat& m, const std::vector<BlockMap>& map) {
  const double scale = 1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
  CMat t = m;
  for (const auto& bm : map) t.block(bm.offset, bm.offset, bm.size, bm.size).setZero();
  return t.size() == 0 || t.cwiseAbs().maxCoeff() <= scale;
}

struct Nt {
  RMat g, ginv, w;
  RVec lambda;
};

// Any factor with X = L L^T works; Cholesky first, eigen fallback near the boundary.
RMat factor(const RMat& x) {
  Eigen::LLT<RMat> llt(x);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<RMat> es(x);
  RVec d = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal();
}

Nt nt_scaling(const RMat& x, const RMat& s) {
  RMat l = factor(x), r = factor(s);
  Eigen::JacobiSVD<RMat> svd(r.transpose() * l, Eigen::ComputeFullU | Eigen::ComputeFullV);
  RVec sig = svd.singularValues().cwiseMax(1e-300);
  Nt nt;
  RVec isq = sig.cwiseSqrt().cwiseInverse();
  nt.g = l * svd.matrixV() * isq.asDiagonal();
  nt.ginv = isq.asDiagonal() * svd.matrixU().transpose() * r.transpose();
  nt.w = nt.g * nt.g.transpose();
  nt.lambda = sig;
  return nt;
}

// Largest alpha with Lambda + alpha*d >= 0 (d in the scaled space).
double max_step(const RVec& lambda, const RMat& d) {
  if (d.rows() == 0) return std::numeric_limits<double>::infinity();
  RVec is = lambda.cwiseSqrt().cwiseInverse();
  RMat t = is.asDiagonal() * d * is.asDiagonal();
  t = 0.5 * (t + t.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<RMat> es(t, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

class Solver {
 public:
  Solver(const SdpProblem& p, const SdpOptions& o) : p_(p), opts_(o) {}
  SdpSolution run();

 private:
  struct Iterate {
    Blocks x, s;
    RVec y;
    double tau = 1.0, kappa = 1.0;
  };

  struct Direction {
    Blocks dx, ds;
    RVec dy;
    double dtau = 0.0, dkappa = 0.0;
  };

  void build();
  bool prune(SdpSolution& out);
  RVec a_op(const Blocks& x) const;
  Blocks a_adj(const RVec& y) const;
  SdpSolution evaluate(const Iterate& it) const;
  Direction newton(const Iterate& it, const std::vector<Nt>& nt, const Eigen::LDLT<RMat>& schur,
                   const RVec& q, const RVec& h, const Blocks& wcw, const RVec& r1, const Blocks& r2,
                   double r3, const Blocks& dscaled, double r5) const;
  double step_to_boundary(const Iterate& it, const std::vector<Nt>& nt, const Direction& d) const;

  const SdpProblem& p_;
  SdpOptions opts_;
  RealProblem rp_;        // row-normalized and scaled
  std::vector<int> kept_; // original indices of retained constraints
  RVec rownorm_;          // per retained constraint
  double bscale_ = 1.0, cscale_ = 1.0;
  double cnorm_ = 0.0, bnorm_ = 0.0;
};

void Solver::build() {
  std::vector<int> sizes = p_.blocks.empty() ? std::vector<int>{p_.dim} : p_.blocks;
  int off = 0;
  for (int s : sizes) {
    if (s <= 0) throw InvalidInput("SdpProblem: block sizes must be positive");
    rp_.map.push_back({off, s, false, s});
    off += s;
  }
  if (off != p_.dim) throw DimensionError("SdpProblem: block sizes do not sum to dim");
  if (p_.objective.dim() != p_.dim) throw DimensionError("SdpProblem: objective dimension");
  for (const auto& con : p_.constraints) {
    if (con.a.dim() != p_.dim) throw DimensionError("SdpProblem: constraint dimension");
    if (!std::isfinite(con.b)) throw InvalidInput("SdpProblem: non-finite right-hand side");
  }
  if (!p_.blocks.empty()) {
    if (!off_block_zero(p_.objective.mat(), rp_.map))
      throw InvalidInput("SdpProblem: objective has entries outside the declared blocks");
    for (const auto& con : p_.constraints)
      if (!off_block_zero(con.a.mat(), rp_.map))
        throw InvalidInput("SdpProblem: constraint has entries outside the declared blocks");
  }
  // A block stays real when no data touches its imaginary part.
  for (auto& bm : rp_.map) {
    auto has_imag = [&](const CMat& m) {
      return m.block(bm.offset, bm.offset, bm.size, bm.size).imag().cwiseAbs().maxCoeff() > 0.0;
    };
    bm.complex = has_imag(p_.objective.mat());
    for (size_t i = 0; i < p_.constraints.size() && !bm.complex; ++i)
      bm.complex = has_imag(p_.constraints[i].a.mat());
    bm.n = bm.complex ? 2 * bm.size : bm.size;
    rp_.nu += bm.n;
  }
  for (const auto& bm : rp_.map) rp_.c.push_back(real_block(p_.objective.mat(), bm));
  cnorm_ = p_.objective.mat().norm();
  RVec borig(p_.constraints.size());
  for (size_t i = 0; i < p_.constraints.size(); ++i) borig(i) = p_.constraints[i].b;
  bnorm_ = borig.norm();
}

bool Solver::prune(SdpSolution& out) {
  const int m = static_cast<int>(p_.constraints.size());
  std::vector<Blocks> a(m);
  RVec rn(m), bn(m);
  int nvec = 0;
  for (const auto& bm : rp_.map) nvec += bm.n * (bm.n + 1) / 2;
  RMat avec = RMat::Zero(m, nvec);
  for (int i = 0; i < m; ++i) {
    for (const auto& bm : rp_.map) a[i].push_back(real_block(p_.constraints[i].a.mat(), bm));
    rn(i) = fro(a[i]);
    if (rn(i) == 0.0) {
      if (std::abs(p_.constraints[i].b) > opts_.tol) {
        out.status = SdpStatus::infeasible;
        return false;
      }
      continue;
    }
    for (auto& blk : a[i]) blk /= rn(i);
    bn(i) = p_.constraints[i].b / rn(i);
    int col = 0;
    for (const auto& blk : a[i])
      for (int c = 0; c < blk.cols(); ++c)
        for (int r = 0; r <= c; ++r) avec(i, col++) = (r == c ? 1.0 : std::sqrt(2.0)) * blk(r, c);
  }
  std::vector<int> nonzero;
  for (int i = 0; i < m; ++i)
    if (rn(i) > 0.0) nonzero.push_back(i);
  if (!nonzero.empty()) {
    RMat an(nonzero.size(), nvec);
    RVec bz(nonzero.size());
    for (size_t k = 0; k < nonzero.size(); ++k) {
      an.row(k) = avec.row(nonzero[k]);
      bz(k) = bn(nonzero[k]);
    }
    Eigen::ColPivHouseholderQR<RMat> qr(an.transpose());
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    for (int k = 0; k < rank; ++k) kept_.push_back(nonzero[qr.colsPermutation().indices()(k)]);
    std::sort(kept_.begin(), kept_.end());
    if (rank < static_cast<int>(nonzero.size())) {
      Eigen::CompleteOrthogonalDecomposition<RMat> cod(an);
      cod.setThreshold(1e-10);
      RVec xs = cod.solve(bz);
      double res = (an * xs - bz).norm();
      if (res > 1e-8 * (1.0 + bz.norm())) {
        log_message(1, "sdp: inconsistent linearly dependent equality constraints");
        out.status = SdpStatus::infeasible;
        return false;
      }
    }
  }
  rp_.b.resize(kept_.size());
  rownorm_.resize(kept_.size());
  for (size_t k = 0; k < kept_.size(); ++k) {
    rp_.a.push_back(std::move(a[kept_[k]]));
    rp_.b(k) = bn(kept_[k]);
    rownorm_(k) = rn(kept_[k]);
  }
  bscale_ = std::max(1.0, rp_.b.size() ? rp_.b.cwiseAbs().maxCoeff() : 0.0);
  double cmax = 0.0;
  for (const auto& blk : rp_.c) cmax = std::max(cmax, blk.size() ? blk.cwiseAbs().maxCoeff() : 0.0);
  cscale_ = std::max(1.0, cmax);
  rp_.b /= bscale_;
  for (auto& blk : rp_.c) blk /= cscale_;
  for (const auto& ai : rp_.a) {
    std::vector<char> act;
    for (const auto& blk : ai) act.push_back(blk.cwiseAbs().maxCoeff() > 0.0);
    rp_.active.push_back(std::move(act));
  }
  return true;
}

RVec Solver::a_op(const Blocks& x) const {
  RVec r(rp_.a.size());
  for (size_t i = 0; i < rp_.a.size(); ++i) {
    double s = 0.0;
    for (size_t k = 0; k < x.size(); ++k)
      if (rp_.active[i][k]) s += rp_.a[i][k].cwiseProduct(x[k]).sum();
    r(i) = s;
  }
  return r;
}

Blocks Solver::a_adj(const RVec& y) const {
  Blocks r;
  for (const auto& bm : rp_.map) r.push_back(RMat::Zero(bm.n, bm.n));
  for (size_t i = 0; i < rp_.a.size(); ++i)
    for (size_t k = 0; k < r.size(); ++k)
      if (rp_.active[i][k]) r[k] += y(i) * rp_.a[i][k];
  return r;
}

SdpSolution Solver::evaluate(const Iterate& it) const {
  SdpSolution sol;
  CMat x = CMat::Zero(p_.dim, p_.dim);
  for (size_t k = 0; k < rp_.map.size(); ++k) {
    const auto& bm = rp_.map[k];
    x.block(bm.offset, bm.offset, bm.size, bm.size) = herm_block(it.x[k] * (bscale_ / it.tau), bm);
  }
  sol.x = trusted_hermitian(std::move(x));
  sol.y.assign(p_.constraints.size(), 0.0);
  for (size_t k = 0; k < kept_.size(); ++k)
    sol.y[kept_[k]] = it.y(k) / it.tau * cscale_ / rownorm_(k);
  CMat s = p_.objective.mat();
  RVec res(p_.constraints.size());
  sol.dual_obj = 0.0;
  for (size_t i = 0; i < p_.constraints.size(); ++i) {
    const auto& con = p_.constraints[i];
    if (sol.y[i] != 0.0) s -= sol.y[i] * con.a.mat();
    res(i) = hs_inner(con.a, sol.x) - con.b;
    sol.dual_obj += sol.y[i] * con.b;
  }
  sol.slack = trusted_hermitian(std::move(s));
  sol.primal_obj = hs_inner(p_.objective, sol.x);
  sol.primal_residual = res.size() ? res.norm() / (1.0 + bnorm_) : 0.0;
  double lmin = 0.0;
  for (const auto& bm : rp_.map)
    lmin = std::min(lmin, min_eig(CMat(sol.slack.mat().block(bm.offset, bm.offset, bm.size, bm.size))));
  sol.dual_residual = std::max(0.0, -lmin) / (1.0 + cnorm_);
  sol.gap = std::abs(sol.primal_obj - sol.dual_obj) / (1.0 + std::abs(sol.primal_obj));
  return sol;
}

Solver::Direction Solver::newton(const Iterate& it, const std::vector<Nt>& nt,
                                 const Eigen::LDLT<RMat>& schur, const RVec& q, const RVec& h,
                                 const Blocks& wcw, const RVec& r1, const Blocks& r2, double r3,
                                 const Blocks& dscaled, double r5) const {
  const size_t nb = rp_.map.size();
  Blocks rc(nb), u(nb);
  for (size_t k = 0; k < nb; ++k) {
    rc[k] = nt[k].g * dscaled[k] * nt[k].g.transpose();
    u[k] = rc[k] + nt[k].w * r2[k] * nt[k].w;
  }
  RVec p = rp_.b.size() ? RVec(schur.solve(r1 - a_op(u))) : RVec();
  const double cw = inner(rp_.c, wcw);
  const double num = r3 - rp_.b.dot(p) + h.dot(p) + inner(rp_.c, u) + r5 / it.tau;
  const double den = rp_.b.dot(q) - h.dot(q) + cw + it.kappa / it.tau;
  Direction d;
  d.dtau = num / den;
  d.dy = p + d.dtau * q;
  d.ds = a_adj(d.dy);
  for (size_t k = 0; k < nb; ++k) {
    d.ds[k] = d.dtau * rp_.c[k] - d.ds[k] - r2[k];
    d.ds[k] = 0.5 * (d.ds[k] + d.ds[k].transpose()).eval();
  }
  d.dx.resize(nb);
  for (size_t k = 0; k < nb; ++k) {
    d.dx[k] = rc[k] - nt[k].w * d.ds[k] * nt[k].w;
    d.dx[k] = 0.5 * (d.dx[k] + d.dx[k].transpose()).eval();
  }
  d.dkappa = (r5 - it.kappa * d.dtau) / it.tau;
  return d;
}

double Solver::step_to_boundary(const Iterate& it, const std::vector<Nt>& nt, const Direction& d) const {
  double a = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < nt.size(); ++k) {
    a = std::min(a, max_step(nt[k].lambda, nt[k].ginv * d.dx[k] * nt[k].ginv.transpose()));
    a = std::min(a, max_step(nt[k].lambda, nt[k].g.transpose() * d.ds[k] * nt[k].g));
  }
  if (d.dtau < 0) a = std::min(a, -it.tau / d.dtau);
  if (d.dkappa < 0) a = std::min(a, -it.kappa / d.dkappa);
  return a;
}

SdpSolution Solver::run() {
  build();
  SdpSolution early;
  if (!prune(early)) {
    early.x = HermitianOperator::zero(p_.dim);
    early.slack = p_.objective;
    early.y.assign(p_.constraints.size(), 0.0);
    return early;
  }
  const size_t nb = rp_.map.size();
  const int m = static_cast<int>(rp_.b.size());
  const double tol = opts_.tol;

  Iterate it;
  const double t0 = std::max(1.0, m ? rp_.b.cwiseAbs().maxCoeff() : 0.0);
  for (const auto& bm : rp_.map) {
    it.x.push_back(t0 * RMat::Identity(bm.n, bm.n));
    it.s.push_back(t0 * RMat::Identity(bm.n, bm.n));
  }
  it.y = RVec::Zero(m);

  SdpSolution best;
  double best_merit = std::numeric_limits<double>::infinity();
  int stalls = 0;

  for (int iter = 0;; ++iter) {
    SdpSolution cur = evaluate(it);
    cur.iterations = iter;
    const double merit = std::max({cur.primal_residual, cur.dual_residual, cur.gap});
    if (merit < best_merit) {
      best_merit = merit;
      best = cur;
    }
    if (verbosity() >= 2) {
      std::ostringstream os;
      os << "sdp it " << iter << " pobj " << cur.primal_obj << " dobj " << cur.dual_obj << " pres "
         << cur.primal_residual << " dres " << cur.dual_residual << " gap " << cur.gap << " tau "
         << it.tau << " kappa " << it.kappa;
      log_message(2, os.str());
    }
    if (merit <= tol) {
      cur.status = SdpStatus::optimal;
      return cur;
    }

    const RVec ax = a_op(it.x);
    const Blocks aty = a_adj(it.y);
    const double by = rp_.b.dot(it.y);
    const double cx = inner(rp_.c, it.x);
    if (it.tau < it.kappa) {
      Blocks ps = aty;
      axpy(ps, 1.0, it.s);
      if (by > 0 && fro(ps) <= tol * by) {
        best.status = SdpStatus::infeasible;
        best.iterations = iter;
        return best;
      }
      if (cx < 0 && ax.norm() <= tol * (-cx)) {
        best.status = SdpStatus::unbounded;
        best.iterations = iter;
        return best;
      }
    }
    if (iter >= opts_.max_iter || stalls >= 5) {
      best.status = SdpStatus::max_iter;
      best.iterations = iter;
      return best;
    }

    const RVec f1 = ax - rp_.b * it.tau;
    Blocks f2(nb);
    for (size_t k = 0; k < nb; ++k) f2[k] = rp_.c[k] * it.tau - aty[k] - it.s[k];
    const double f3 = by - cx - it.kappa;
    const double mu = (inner(it.x, it.s) + it.tau * it.kappa) / (rp_.nu + 1);

    std::vector<Nt> nt;
    for (size_t k = 0; k < nb; ++k) nt.push_back(nt_scaling(it.x[k], it.s[k]));

    // Schur complement M_ij = <A_i, W A_j W>
    RMat schur_m(m, m);
    std::vector<Blocks> waw(m);
    for (int j = 0; j < m; ++j) {
      waw[j].resize(nb);
      for (size_t k = 0; k < nb; ++k)
        waw[j][k] = rp_.active[j][k] ? RMat(nt[k].w * rp_.a[j][k] * nt[k].w)
                                     : RMat::Zero(rp_.map[k].n, rp_.map[k].n);
    }
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        double s = 0.0;
        for (size_t k = 0; k < nb; ++k)
          if (rp_.active[i][k] && rp_.active[j][k]) s += rp_.a[i][k].cwiseProduct(waw[j][k]).sum();
        schur_m(i, j) = schur_m(j, i) = s;
      }
    Eigen::LDLT<RMat> schur;
    if (m) {
      schur.compute(schur_m);
      if (schur.info() != Eigen::Success) {
        schur_m.diagonal().array() += 1e-14 * (1.0 + schur_m.diagonal().maxCoeff());
        schur.compute(schur_m);
      }
    }
    Blocks wcw(nb);
    for (size_t k = 0; k < nb; ++k) wcw[k] = nt[k].w * rp_.c[k] * nt[k].w;
    const RVec h = a_op(wcw);
    const RVec q = m ? RVec(schur.solve(h + rp_.b)) : RVec();

    // predictor
    Blocks dpred(nb);
    for (size_t k = 0; k < nb; ++k) dpred[k] = -RMat(nt[k].lambda.asDiagonal());
    Blocks mf2 = scaled(f2, -1.0);
    Direction aff = newton(it, nt, schur, q, h, wcw, -f1, mf2, -f3, dpred, -it.tau * it.kappa);
    const double aa = std::min(1.0, step_to_boundary(it, nt, aff));
    double xs_aff = 0.0;
    for (size_t k = 0; k < nb; ++k)
      xs_aff += (it.x[k] + aa * aff.dx[k]).cwiseProduct(it.s[k] + aa * aff.ds[k]).sum();
    const double mu_aff =
        (xs_aff + (it.tau + aa * aff.dtau) * (it.kappa + aa * aff.dkappa)) / (rp_.nu + 1);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // corrector
    Blocks dcorr(nb);
    for (size_t k = 0; k < nb; ++k) {
      const RVec& lam = nt[k].lambda;
      RMat dxs = nt[k].ginv * aff.dx[k] * nt[k].ginv.transpose();
      RMat dss = nt[k].g.transpose() * aff.ds[k] * nt[k].g;
      RMat rhs = -(dxs * dss + dss * dxs);
      rhs.diagonal() += (2.0 * sigma * mu) * RVec::Ones(lam.size()) - 2.0 * lam.cwiseAbs2();
      RMat d(lam.size(), lam.size());
      for (int i = 0; i < lam.size(); ++i)
        for (int j = 0; j < lam.size(); ++j) d(i, j) = rhs(i, j) / (lam(i) + lam(j));
      dcorr[k] = d;
    }
    const double eta = 1.0 - sigma;
    Blocks cf2 = scaled(f2, -eta);
    Direction dir = newton(it, nt, schur, q, h, wcw, -eta * f1, cf2, -eta * f3, dcorr,
                           sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa);
    const double amax = step_to_boundary(it, nt, dir);
    const double alpha = std::min(1.0, 0.98 * amax);
    if (alpha < 1e-10) {
      ++stalls;
    } else {
      stalls = 0;
    }

    for (size_t k = 0; k < nb; ++k) {
      it.x[k] += alpha * dir.dx[k];
      it.s[k] += alpha * dir.ds[k];
    }
    it.y += alpha * dir.dy;
    it.tau += alpha * dir.dtau;
    it.kappa += alpha * dir.dkappa;
  }
}

}  // namespace

SdpSolution solve(const SdpProblem& p, const SdpOptions& opts) {
  Solver s(p, opts);
  return s.run();
}

}  // namespace qmdp
