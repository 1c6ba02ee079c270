#include "qmdp/channel.hpp"

#include <cmath>
#include <sstream>

namespace qmdp {

namespace {

CMat kraus_completeness(const std::vector<CMat>& k, int in_dim) {
  CMat s = CMat::Zero(in_dim, in_dim);
  for (const auto& op : k) s += op.adjoint() * op;
  return s;
}

void check_shapes(int in_dim, int out_dim, const std::vector<CMat>& k) {
  if (in_dim <= 0 || out_dim <= 0) throw DimensionError("KrausChannel: dimensions must be positive");
  if (k.empty()) throw InvalidInput("KrausChannel: empty Kraus set");
  for (const auto& op : k) {
    if (op.rows() != out_dim || op.cols() != in_dim) {
      std::ostringstream os;
      os << "KrausChannel: operator is " << op.rows() << "x" << op.cols() << ", expected " << out_dim
         << "x" << in_dim;
      throw DimensionError(os.str());
    }
    if (!op.allFinite()) throw InvalidInput("KrausChannel: non-finite entry");
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

KrausChannel::KrausChannel(int in_dim, int out_dim, std::vector<CMat> kraus, double tol)
    : in_(in_dim), out_(out_dim), k_(std::move(kraus)) {
  check_shapes(in_, out_, k_);
  double res = (kraus_completeness(k_, in_) - CMat::Identity(in_, in_)).norm();
  if (res > tol) {
    std::ostringstream os;
    os << "KrausChannel: trace preservation residual " << res << " exceeds " << tol;
    throw InvalidInput(os.str());
  }
}

KrausChannel KrausChannel::unchecked(int in_dim, int out_dim, std::vector<CMat> kraus) {
  KrausChannel n;
  n.in_ = in_dim;
  n.out_ = out_dim;
  n.k_ = std::move(kraus);
  return n;
}

ChoiMatrix::ChoiMatrix(int in_dim, int out_dim, HermitianOperator m, const Tolerances& tol)
    : in_(in_dim), out_(out_dim), m_(std::move(m)) {
  require_dim(m_.dim(), in_ * out_, "ChoiMatrix");
  double lmin = min_eig(m_);
  if (lmin < -tol.psd) {
    std::ostringstream os;
    os << "ChoiMatrix: minimum eigenvalue " << lmin << " below -" << tol.psd;
    throw InvalidInput(os.str());
  }
  CMat marg(in_, in_);
  for (int i = 0; i < in_; ++i)
    for (int j = 0; j < in_; ++j) marg(i, j) = m_.mat().block(i * out_, j * out_, out_, out_).trace();
  double res = (marg - CMat::Identity(in_, in_)).norm();
  if (res > 1e-8) {
    std::ostringstream os;
    os << "ChoiMatrix: output partial trace differs from identity by " << res;
    throw InvalidInput(os.str());
  }
}

ChoiMatrix ChoiMatrix::unchecked(int in_dim, int out_dim, HermitianOperator m) {
  ChoiMatrix c;
  c.in_ = in_dim;
  c.out_ = out_dim;
  c.m_ = std::move(m);
  require_dim(c.m_.dim(), in_dim * out_dim, "ChoiMatrix");
  return c;
}

CMat gram_to_choi(const CMat& z, int dimX, int dimA) {
  const int out = dimX * dimA;
  require_dim(static_cast<int>(z.rows()), out, "gram_to_choi");
  CMat c = CMat::Zero(dimX * out, dimX * out);
  for (int x = 0; x < dimX; ++x)
    for (int y = 0; y < dimX; ++y)
      c.block(x * out + x * dimA, y * out + y * dimA, dimA, dimA) =
          z.block(x * dimA, y * dimA, dimA, dimA);
  return c;
}

namespace {

CMat choi_to_gram(const CMat& c, int dimX, int dimA) {
  const int out = dimX * dimA;
  CMat z(out, out);
  for (int x = 0; x < dimX; ++x)
    for (int y = 0; y < dimX; ++y)
      z.block(x * dimA, y * dimA, dimA, dimA) =
          c.block(x * out + x * dimA, y * out + y * dimA, dimA, dimA);
  return z;
}

}  // namespace

CspPolicyChannel::CspPolicyChannel(ChoiMatrix choi, int dimX, int dimA, double tol)
    : choi_(std::move(choi)), dx_(dimX), da_(dimA) {
  if (choi_.in_dim() != dimX || choi_.out_dim() != dimX * dimA)
    throw DimensionError("CspPolicyChannel: Choi dimensions do not match (|X|, |X||A|)");
  auto rep = csp_membership(choi_, tol);
  if (!rep.pass) {
    std::ostringstream os;
    os << "CspPolicyChannel: classical-state preservation residual " << rep.residual << " exceeds "
       << tol;
    throw InvalidInput(os.str());
  }
  z_ = choi_to_gram(choi_.matrix().mat(), dimX, dimA);
}

CspPolicyChannel CspPolicyChannel::from_gram(const CMat& z, int dimX, int dimA, double tol) {
  Tolerances t;
  ChoiMatrix c(dimX, dimX * dimA, trusted_hermitian(gram_to_choi(z, dimX, dimA)), t);
  return CspPolicyChannel(std::move(c), dimX, dimA, tol);
}

CMat kraus_apply(const std::vector<CMat>& kraus, const CMat& rho) {
  CMat out = CMat::Zero(kraus.front().rows(), kraus.front().rows());
  for (const auto& k : kraus) out.noalias() += k * rho * k.adjoint();
  return out;
}

CMat kraus_adjoint_apply(const std::vector<CMat>& kraus, const CMat& xi) {
  CMat out = CMat::Zero(kraus.front().cols(), kraus.front().cols());
  for (const auto& k : kraus) out.noalias() += k.adjoint() * xi * k;
  return out;
}

CMat choi_apply(const CMat& choi, int in_dim, int out_dim, const CMat& rho) {
  require_dim(static_cast<int>(rho.rows()), in_dim, "apply_choi");
  CMat out = CMat::Zero(out_dim, out_dim);
  for (int i = 0; i < in_dim; ++i)
    for (int j = 0; j < in_dim; ++j)
      if (rho(i, j) != cd(0.0)) out += rho(i, j) * choi.block(i * out_dim, j * out_dim, out_dim, out_dim);
  return out;
}

CMat choi_adjoint_apply(const CMat& choi, int in_dim, int out_dim, const CMat& m) {
  CMat k(in_dim, in_dim);
  for (int i = 0; i < in_dim; ++i)
    for (int j = 0; j < in_dim; ++j)
      k(j, i) = (m * choi.block(i * out_dim, j * out_dim, out_dim, out_dim)).trace();
  return k;
}

CMat schur_apply(const CMat& z, const CMat& rho, int dimX, int dimA) {
  CMat out = z;
  for (int x = 0; x < dimX; ++x)
    for (int y = 0; y < dimX; ++y) out.block(x * dimA, y * dimA, dimA, dimA) *= rho(x, y);
  return out;
}

HermitianOperator apply_kraus(const KrausChannel& n, const HermitianOperator& rho) {
  require_dim(rho.dim(), n.in_dim(), "apply_kraus");
  return trusted_hermitian(kraus_apply(n.kraus(), rho.mat()));
}

HermitianOperator adjoint_apply(const KrausChannel& n, const HermitianOperator& xi) {
  require_dim(xi.dim(), n.out_dim(), "adjoint_apply");
  return trusted_hermitian(kraus_adjoint_apply(n.kraus(), xi.mat()));
}

ChoiMatrix kraus_to_choi(const KrausChannel& n) {
  const int in = n.in_dim(), out = n.out_dim();
  CMat c = CMat::Zero(in * out, in * out);
  for (const auto& k : n.kraus()) {
    // vec of K in (i, o) order: v[(i,o)] = K[o][i]
    CVec v(in * out);
    for (int i = 0; i < in; ++i)
      for (int o = 0; o < out; ++o) v(i * out + o) = k(o, i);
    c.noalias() += v * v.adjoint();
  }
  return ChoiMatrix::unchecked(in, out, trusted_hermitian(std::move(c)));
}

HermitianOperator apply_choi(const ChoiMatrix& c, const HermitianOperator& rho) {
  return trusted_hermitian(choi_apply(c.matrix().mat(), c.in_dim(), c.out_dim(), rho.mat()));
}

HermitianOperator apply_policy(const CspPolicyChannel& g, const HermitianOperator& rho) {
  require_dim(rho.dim(), g.dimX(), "apply_policy");
  return trusted_hermitian(schur_apply(g.gram(), rho.mat(), g.dimX(), g.dimA()));
}

KrausChannel choi_to_kraus(const ChoiMatrix& c, double rel_cutoff) {
  const int in = c.in_dim(), out = c.out_dim();
  auto ed = eig_h(c.matrix());
  const double lmax = ed.values(ed.values.size() - 1);
  if (ed.values(0) < -Tolerances{}.psd * std::max(1.0, lmax)) {
    std::ostringstream os;
    os << "choi_to_kraus: Choi matrix has eigenvalue " << ed.values(0);
    throw InvalidInput(os.str());
  }
  std::vector<CMat> ks;
  for (int k = static_cast<int>(ed.values.size()) - 1; k >= 0; --k) {
    double l = ed.values(k);
    if (l <= rel_cutoff * lmax) break;
    CMat op(out, in);
    for (int i = 0; i < in; ++i)
      for (int o = 0; o < out; ++o) op(o, i) = std::sqrt(l) * ed.vectors(i * out + o, k);
    ks.push_back(std::move(op));
  }
  if (ks.empty()) throw InvalidInput("choi_to_kraus: zero Choi matrix");
  return KrausChannel::unchecked(in, out, std::move(ks));
}

CptpReport verify_cptp(const ChoiMatrix& c, double tol) {
  CptpReport r;
  r.psd_margin = min_eig(c.matrix());
  const int in = c.in_dim(), out = c.out_dim();
  CMat marg(in, in);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < in; ++j) marg(i, j) = c.matrix().mat().block(i * out, j * out, out, out).trace();
  r.tp_residual = (marg - CMat::Identity(in, in)).norm();
  r.pass = r.psd_margin >= -tol && r.tp_residual <= tol;
  return r;
}

CptpReport verify_cptp(const KrausChannel& n, double tol) {
  CptpReport r;
  r.psd_margin = min_eig(kraus_to_choi(n).matrix());
  r.tp_residual = (kraus_completeness(n.kraus(), n.in_dim()) -
                   CMat::Identity(n.in_dim(), n.in_dim())).norm();
  r.pass = r.psd_margin >= -tol && r.tp_residual <= tol;
  return r;
}

CMat nqc(const CMat& rho) { return rho.diagonal().asDiagonal().toDenseMatrix(); }

HermitianOperator nqc(const HermitianOperator& rho) { return HermitianOperator::diagonal(rho.diag()); }

KrausChannel classical_channel_embed(const RMat& w) {
  const int m = static_cast<int>(w.rows()), n = static_cast<int>(w.cols());
  for (int i = 0; i < n; ++i) {
    if (w.col(i).minCoeff() < 0.0) throw InvalidInput("classical_channel_embed: negative entry");
    double s = w.col(i).sum();
    if (std::abs(s - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "classical_channel_embed: column " << i << " sums to " << s;
      throw InvalidInput(os.str());
    }
  }
  std::vector<CMat> ks;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      if (w(j, i) == 0.0) continue;
      CMat k = CMat::Zero(m, n);
      k(j, i) = std::sqrt(w(j, i));
      ks.push_back(std::move(k));
    }
  return KrausChannel(n, m, std::move(ks));
}

KrausChannel appending_channel(const DensityOperator& pi, int dimX) {
  const int da = pi.dim();
  auto ed = eig_h(pi.op());
  std::vector<CMat> ks;
  CMat id = CMat::Identity(dimX, dimX);
  for (int k = da - 1; k >= 0; --k) {
    double l = ed.values(k);
    if (l <= 1e-15) continue;
    ks.push_back(kron(id, std::sqrt(l) * ed.vectors.col(k)));
  }
  // Trace-one input guarantees at least one positive eigenvalue.
  return KrausChannel(dimX, dimX * da, std::move(ks), 1e-8);
}

CspPolicyChannel classical_policy_channel(const RMat& pi) {
  const int nx = static_cast<int>(pi.rows()), na = static_cast<int>(pi.cols());
  for (int x = 0; x < nx; ++x) {
    if (pi.row(x).minCoeff() < 0.0) throw InvalidInput("classical_policy_channel: negative entry");
    double s = pi.row(x).sum();
    if (std::abs(s - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "classical_policy_channel: row " << x << " sums to " << s;
      throw InvalidInput(os.str());
    }
  }
  CMat z = CMat::Zero(nx * na, nx * na);
  for (int x = 0; x < nx; ++x)
    for (int a = 0; a < na; ++a) z(x * na + a, x * na + a) = pi(x, a);
  return CspPolicyChannel::from_gram(z, nx, na);
}

CspReport csp_membership(const ChoiMatrix& c, double tol) {
  const int dx = c.in_dim();
  if (c.out_dim() % dx != 0) throw DimensionError("csp_membership: out_dim not a multiple of in_dim");
  const int da = c.out_dim() / dx;
  CspReport r;
  for (int x = 0; x < dx; ++x) {
    CMat marg = ptrace_a(c.block(x, x), dx, da);
    marg(x, x) -= 1.0;
    r.residual = std::max(r.residual, marg.norm());
  }
  r.pass = r.residual <= tol;
  return r;
}

std::optional<DensityOperator> appended_state(const ChoiMatrix& c, int dimX, int dimA, double tol) {
  if (c.in_dim() != dimX || c.out_dim() != dimX * dimA)
    throw DimensionError("appended_state: Choi dimensions do not match");
  for (const auto& f : hermitian_basis(dimX)) {
    CMat back = ptrace_a(choi_apply(c.matrix().mat(), dimX, dimX * dimA, f.mat()), dimX, dimA);
    if ((back - f.mat()).norm() > tol) return std::nullopt;
  }
  CMat mixed = CMat::Identity(dimX, dimX) / double(dimX);
  CMat xi = ptrace_x(choi_apply(c.matrix().mat(), dimX, dimX * dimA, mixed), dimX, dimA);
  return DensityOperator(trusted_hermitian(xi), Tolerances{1e-12, 1e-8, 1e-8});
}

}  // namespace qmdp
