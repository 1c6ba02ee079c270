#include <doctest.h>

#include "oracles.hpp"
#include "qmdp/channel.hpp"
#include "qmdp/random.hpp"

using namespace qmdp;

namespace {

KrausChannel random_channel(int in, int out, oracle::Rng& rng, int env = 3) {
  return KrausChannel(in, out, oracle::random_kraus(in, out, env, rng));
}

CMat bit_flip() { return (CMat(2, 2) << 0, 1, 1, 0).finished(); }

}  // namespace

TEST_CASE("kraus channel construction validates completeness") {
  CHECK_NOTHROW(KrausChannel(2, 2, {CMat::Identity(2, 2)}));
  CHECK_THROWS_AS(KrausChannel(2, 2, {1.01 * CMat::Identity(2, 2)}), InvalidInput);
  CHECK_THROWS_AS(KrausChannel(2, 3, {CMat::Identity(2, 2)}), DimensionError);
}

TEST_CASE("apply kraus basics") {
  KrausChannel flip(2, 2, {bit_flip()});
  auto out = apply_kraus(flip, DensityOperator::basis_state(2, 0));
  CHECK((out.mat() - DensityOperator::basis_state(2, 1).mat()).norm() < 1e-15);
  oracle::Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    auto n = random_channel(4, 2, rng);
    CMat r = oracle::density(4, rng);
    auto o = apply_kraus(n, HermitianOperator(r));
    CHECK(std::abs(o.trace() - 1.0) < 1e-10);
    CHECK((o.mat() - oracle::apply_kraus_naive(n.kraus(), r)).norm() < 1e-12);
  }
}

TEST_CASE("kraus to choi follows the in (x) out definition") {
  KrausChannel id(2, 2, {CMat::Identity(2, 2)});
  CMat c = kraus_to_choi(id).matrix().mat();
  CMat expect = CMat::Zero(4, 4);
  expect(0, 0) = expect(0, 3) = expect(3, 0) = expect(3, 3) = 1.0;
  CHECK((c - expect).norm() < 1e-15);

  oracle::Rng rng(12);
  for (int i = 0; i < 10; ++i) {
    auto n = random_channel(3, 2, rng);
    CHECK((kraus_to_choi(n).matrix().mat() - oracle::choi_of(n.kraus(), 3, 2)).norm() < 1e-12);
  }
}

TEST_CASE("trace-out-and-prepare has separable choi") {
  oracle::Rng rng(13);
  CMat xi = oracle::density(2, rng);
  Eigen::SelfAdjointEigenSolver<CMat> es(xi);
  std::vector<CMat> ks;
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 3; ++i) {
      CMat m = CMat::Zero(2, 3);
      m.col(i) = std::sqrt(es.eigenvalues()(k)) * es.eigenvectors().col(k);
      ks.push_back(m);
    }
  KrausChannel n(3, 2, ks);
  CMat c = kraus_to_choi(n).matrix().mat();
  CHECK((c - oracle::kron(CMat::Identity(3, 3), xi)).norm() < 1e-12);
  auto back = choi_to_kraus(kraus_to_choi(n));
  for (int i = 0; i < 3; ++i) {
    auto o = apply_kraus(back, DensityOperator::basis_state(3, i));
    CHECK((o.mat() - xi).norm() < 1e-10);
  }
}

TEST_CASE("choi application and round trips") {
  oracle::Rng rng(14);
  for (int i = 0; i < 20; ++i) {
    auto n = random_channel(4, 2, rng);
    ChoiMatrix c = kraus_to_choi(n);
    HermitianOperator r(oracle::density(4, rng));
    CHECK((apply_choi(c, r).mat() - apply_kraus(n, r).mat()).norm() < 1e-10);
    KrausChannel back = choi_to_kraus(c);
    CHECK((apply_kraus(back, r).mat() - apply_kraus(n, r).mat()).norm() < 1e-8);
    auto e = DensityOperator::basis_state(4, 1);
    CHECK((apply_choi(c, e).mat() - c.block(1, 1)).norm() < 1e-14);
  }
  ChoiMatrix idc = kraus_to_choi(KrausChannel(2, 2, {CMat::Identity(2, 2)}));
  auto ks = choi_to_kraus(idc).kraus();
  REQUIRE(ks.size() == 1);
  cd phase = ks[0](0, 0);
  CHECK((ks[0] - phase * CMat::Identity(2, 2)).norm() < 1e-12);
  CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
}

TEST_CASE("choi matrix validation") {
  CMat bad = CMat::Identity(4, 4);
  CHECK_THROWS_AS(ChoiMatrix(2, 2, HermitianOperator(bad * 0.9)), InvalidInput);
  CHECK_NOTHROW(ChoiMatrix(2, 2, HermitianOperator(bad * 0.5)));
}

TEST_CASE("verify cptp reports residuals") {
  oracle::Rng rng(15);
  CMat u = random_unitary(3, rng);
  auto rep = verify_cptp(KrausChannel(3, 3, {u}), 1e-9);
  CHECK(rep.pass);
  CHECK(rep.tp_residual < 1e-12);
  auto scaled = KrausChannel::unchecked(3, 3, {1.01 * u});
  auto bad = verify_cptp(scaled, 1e-9);
  CHECK_FALSE(bad.pass);
  CHECK(bad.tp_residual == doctest::Approx(0.0201 * std::sqrt(3.0)).epsilon(1e-9));

  ChoiMatrix c = kraus_to_choi(random_channel(2, 2, rng));
  CMat m = c.matrix().mat();
  auto ed = eig_h(c.matrix());
  // push the bottom eigenvalue to -1e-3 without touching the rest
  m += (-1e-3 - ed.values(0)) * ed.vectors.col(0) * ed.vectors.col(0).adjoint();
  auto r2 = verify_cptp(ChoiMatrix::unchecked(2, 2, HermitianOperator(m)), 1e-9);
  CHECK_FALSE(r2.pass);
  CHECK(r2.psd_margin == doctest::Approx(-1e-3));
}

TEST_CASE("adjoint identities") {
  oracle::Rng rng(16);
  auto n = random_channel(6, 2, rng);
  CHECK((adjoint_apply(n, HermitianOperator::identity(2)).mat() - CMat::Identity(6, 6)).norm() < 1e-12);
  for (int i = 0; i < 20; ++i) {
    HermitianOperator xi(oracle::herm(2, rng)), s(oracle::herm(6, rng));
    CHECK(std::abs(hs_inner(xi, apply_kraus(n, s)) - hs_inner(adjoint_apply(n, xi), s)) < 1e-10);
    ChoiMatrix c = kraus_to_choi(n);
    CMat k = choi_adjoint_apply(c.matrix().mat(), 6, 2, xi.mat());
    CHECK(std::abs(oracle::tr_inner(k, s.mat()) - hs_inner(xi, apply_kraus(n, s))) < 1e-10);
  }
}

TEST_CASE("dephasing") {
  CVec plus(2);
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  CHECK((nqc(HermitianOperator::projector(plus)).mat() - 0.5 * CMat::Identity(2, 2)).norm() < 1e-15);
  oracle::Rng rng(17);
  HermitianOperator r(oracle::density(3, rng));
  auto d = nqc(r);
  CHECK((d.diag() - r.diag()).norm() == 0.0);
  CHECK((nqc(d).mat() - d.mat()).norm() == 0.0);
  CHECK((d.mat() - CMat(d.mat().diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("classical channel embedding") {
  auto id = classical_channel_embed(RMat::Identity(3, 3));
  oracle::Rng rng(18);
  HermitianOperator r(oracle::density(3, rng));
  CHECK((apply_kraus(id, nqc(r)).mat() - nqc(r).mat()).norm() < 1e-14);
  RMat swap(2, 2);
  swap << 0, 1, 1, 0;
  auto flip = classical_channel_embed(swap);
  auto o = apply_kraus(flip, DensityOperator::basis_state(2, 0));
  CHECK((o.mat() - DensityOperator::basis_state(2, 1).mat()).norm() < 1e-15);
  Rng r2(19);
  for (int i = 0; i < 10; ++i) {
    RMat w = random_stochastic(3, 4, r2);
    RVec mu = random_stochastic(4, 1, r2).col(0);
    auto out = apply_kraus(classical_channel_embed(w), HermitianOperator::diagonal(mu));
    CHECK((out.mat() - CMat(HermitianOperator::diagonal(w * mu).mat())).norm() < 1e-12);
  }
  RMat bad = RMat::Constant(2, 2, 0.6);
  CHECK_THROWS_AS(classical_channel_embed(bad), InvalidInput);
}

TEST_CASE("appending channel") {
  oracle::Rng rng(20);
  DensityOperator pi(HermitianOperator(oracle::density(3, rng)));
  auto n = appending_channel(pi, 2);
  CHECK(verify_cptp(n, 1e-10).pass);
  for (int i = 0; i < 10; ++i) {
    HermitianOperator r(oracle::density(2, rng));
    auto o = apply_kraus(n, r);
    CHECK((o.mat() - oracle::kron(r.mat(), pi.mat())).norm() < 1e-12);
    CHECK((ptrace_a(o.mat(), 2, 3) - r.mat()).norm() < 1e-12);
  }
  auto pure = appending_channel(DensityOperator::basis_state(3, 0), 2);
  CHECK(pure.kraus().size() == 1);
  CHECK(csp_membership(kraus_to_choi(n), 1e-8).pass);
  auto xi = appended_state(kraus_to_choi(n), 2, 3);
  REQUIRE(xi.has_value());
  CHECK((xi->mat() - pi.mat()).norm() < 1e-10);
}

TEST_CASE("classical policy channel") {
  RMat pi(2, 3);
  pi << 0.2, 0.3, 0.5, 1.0, 0.0, 0.0;
  auto g = classical_policy_channel(pi);
  CHECK(csp_membership(g.choi(), 1e-10).pass);
  RVec mu(2);
  mu << 0.4, 0.6;
  auto out = apply_policy(g, HermitianOperator::diagonal(mu));
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 3; ++a) CHECK(std::abs(out(x * 3 + a, x * 3 + a).real() - mu(x) * pi(x, a)) < 1e-14);
  CHECK((out.mat() - CMat(out.mat().diagonal().asDiagonal())).norm() < 1e-15);
  // the Choi form and the Schur-multiplier form agree on arbitrary inputs
  oracle::Rng rng(21);
  HermitianOperator r(oracle::density(2, rng));
  CHECK((apply_choi(g.choi(), r).mat() - apply_policy(g, r).mat()).norm() < 1e-12);
  CHECK_THROWS_AS(classical_policy_channel(RMat::Constant(2, 2, 0.7)), InvalidInput);
}

TEST_CASE("csp membership rejects inconsistent prepare channels") {
  // rho -> Tr(rho) |0><0| (x) |0><0| keeps x = 0 only
  std::vector<CMat> ks;
  for (int i = 0; i < 2; ++i) {
    CMat k = CMat::Zero(4, 2);
    k(0, i) = 1.0;
    ks.push_back(k);
  }
  ChoiMatrix c = kraus_to_choi(KrausChannel(2, 4, ks));
  auto rep = csp_membership(c, 1e-8);
  CHECK_FALSE(rep.pass);
  CHECK(rep.residual == doctest::Approx(std::sqrt(2.0)));
  CHECK_FALSE(appended_state(c, 2, 2).has_value());
}

TEST_CASE("csp channels preserve the classical marginal") {
  oracle::Rng rng(22);
  Rng r2(23);
  for (int i = 0; i < 10; ++i) {
    CMat g = oracle::gaussian(6, 6, rng);
    CMat z = g * g.adjoint();
    for (int x = 0; x < 2; ++x) {
      double t = z.block(x * 3, x * 3, 3, 3).trace().real();
      z.middleRows(x * 3, 3) /= std::sqrt(t);
      z.middleCols(x * 3, 3) /= std::sqrt(t);
    }
    auto gamma = CspPolicyChannel::from_gram(z, 2, 3);
    CHECK(verify_cptp(gamma.choi(), 1e-9).pass);
    HermitianOperator r(oracle::density(2, rng));
    auto out = apply_policy(gamma, r);
    CHECK((nqc(HermitianOperator(ptrace_a(out.mat(), 2, 3))).mat() - nqc(r).mat()).norm() < 1e-8);
    CHECK((apply_choi(gamma.choi(), r).mat() - out.mat()).norm() < 1e-12);
  }
}
