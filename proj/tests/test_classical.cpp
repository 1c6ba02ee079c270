#include <doctest.h>

#include "oracles.hpp"
#include "qmdp/classical.hpp"

using namespace qmdp;

TEST_CASE("value iteration closed forms") {
  ClassicalMdp one(1, 1, {1.0}, RMat::Constant(1, 1, 1.0), 0.9);
  CHECK(value_iteration(one, 1e-10).v(0) == doctest::Approx(10.0).epsilon(1e-9));
  oracle::Rng rng(41);
  auto m = oracle::random_mdp(3, 2, 0.7, rng);
  m.c.setZero();
  CHECK(value_iteration(m.mdp(), 1e-10).v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("value iteration matches policy enumeration") {
  oracle::Rng rng(42);
  for (int i = 0; i < 20; ++i) {
    auto m = oracle::random_mdp(2 + i % 2, 2 + (i / 2) % 2, i % 2 ? 0.9 : 0.5, rng);
    auto vi = value_iteration(m.mdp(), 1e-10);
    CHECK((vi.v - oracle::optimal_values(m)).cwiseAbs().maxCoeff() < 1e-9);
    // the greedy policy is optimal
    RMat pi = RMat::Zero(m.nx, m.na);
    for (int x = 0; x < m.nx; ++x) pi(x, vi.policy[x]) = 1.0;
    CHECK((oracle::policy_values(m, pi) - oracle::optimal_values(m)).cwiseAbs().maxCoeff() < 1e-8);
  }
  // deterministic transitions
  std::vector<double> p = {1, 0, 0, 1, 0, 1, 1, 0};  // [y][x][a]
  RMat c(2, 2);
  c << 1, 0.5, 0.2, 2;
  oracle::RandomMdp d{2, 2, p, c, 0.8};
  CHECK((value_iteration(d.mdp(), 1e-12).v - oracle::optimal_values(d)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("value iteration residuals contract") {
  oracle::Rng rng(43);
  auto m = oracle::random_mdp(3, 3, 0.9, rng);
  RVec v = RVec::Zero(3);
  double prev = -1;
  for (int k = 0; k < 50; ++k) {
    RVec lv(3);
    for (int x = 0; x < 3; ++x) {
      double best = 1e300;
      for (int a = 0; a < 3; ++a) {
        double s = m.c(x, a);
        for (int y = 0; y < 3; ++y) s += m.beta * m.p[(y * 3 + x) * 3 + a] * v(y);
        best = std::min(best, s);
      }
      lv(x) = best;
    }
    double res = (lv - v).cwiseAbs().maxCoeff();
    if (prev > 0) CHECK(res <= (m.beta + 1e-9) * prev);
    prev = res;
    v = lv;
  }
}

TEST_CASE("dmdp step") {
  oracle::Rng rng(44);
  auto m = oracle::random_mdp(3, 2, 0.5, rng);
  auto mdp = m.mdp();
  RMat nu = RMat::Zero(3, 2);
  nu(1, 0) = 1;
  RVec out = dmdp_step(nu, mdp);
  for (int y = 0; y < 3; ++y) CHECK(out(y) == doctest::Approx(mdp.p(y, 1, 0)));
  std::vector<double> id(3 * 3 * 2, 0.0);
  for (int x = 0; x < 3; ++x)
    for (int a = 0; a < 2; ++a) id[(x * 3 + x) * 2 + a] = 1.0;
  ClassicalMdp ident(3, 2, id, m.c, 0.5);
  RMat r = RMat::Random(3, 2).cwiseAbs();
  r /= r.sum();
  CHECK((dmdp_step(r, ident) - r.rowwise().sum()).norm() < 1e-15);
}

TEST_CASE("occupancy lp matches value iteration and its dual") {
  oracle::Rng rng(45);
  for (int i = 0; i < 10; ++i) {
    auto m = oracle::random_mdp(2 + i % 2, 2 + (i / 2) % 2, i % 2 ? 0.9 : 0.5, rng);
    auto mdp = m.mdp();
    RVec mu0 = RVec::Constant(m.nx, 1.0 / m.nx);
    auto lp = occupancy_lp(mdp, mu0);
    RVec vstar = oracle::optimal_values(m);
    CHECK(std::abs(lp.value / (1 - m.beta) - vstar.dot(mu0)) < 1e-6);
    // flow constraint
    RVec flow = lp.nu.nu.rowwise().sum() - m.beta * dmdp_step(lp.nu.nu, mdp) - (1 - m.beta) * mu0;
    CHECK(flow.cwiseAbs().maxCoeff() < 1e-7);
    auto dual = lp_dual(mdp, mu0);
    CHECK(std::abs(dual.value - lp.value) < 1e-6);
    // weak duality at sampled feasible points: scaled-down v* is feasible
    for (double s : {0.0, 0.5, 0.9}) CHECK(s * vstar.dot((1 - m.beta) * mu0) <= lp.value + 1e-9);
    // disintegrated policy reproduces the value
    auto k = disintegrate(lp.nu);
    RVec vpi = oracle::policy_values(m, k.pi);
    CHECK(std::abs(vpi.dot(mu0) - lp.value / (1 - m.beta)) < 1e-6);
  }
  oracle::Rng r2(46);
  auto m = oracle::random_mdp(3, 2, 0.5, r2);
  m.c.setOnes();
  CHECK(occupancy_lp(m.mdp(), RVec::Constant(3, 1.0 / 3)).value == doctest::Approx(1.0).epsilon(1e-8));
  m.c.setZero();
  CHECK(lp_dual(m.mdp(), RVec::Constant(3, 1.0 / 3)).xi.cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("single action occupancy equals the rollout") {
  oracle::Rng rng(47);
  auto m = oracle::random_mdp(3, 1, 0.5, rng);
  auto mdp = m.mdp();
  RVec mu0(3);
  mu0 << 0.2, 0.3, 0.5;
  auto lp = occupancy_lp(mdp, mu0);
  RVec mu = mu0, occ = RVec::Zero(3);
  double bt = 1;
  for (int t = 0; t < 60; ++t) {
    occ += (1 - m.beta) * bt * mu;
    RVec nx = RVec::Zero(3);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) nx(y) += mdp.p(y, x, 0) * mu(x);
    mu = nx;
    bt *= m.beta;
  }
  CHECK((lp.nu.nu.col(0) - occ).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("disintegration conventions") {
  RMat nu(2, 2);
  nu << 0.1, 0.3, 0.0, 0.0;
  nu /= nu.sum();
  auto k = disintegrate(OccupancyMeasure(nu));
  CHECK(k.pi(0, 0) == doctest::Approx(0.25));
  CHECK(k.pi(1, 0) == doctest::Approx(0.5));
  CHECK(k.pi(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("embedding commutes with the d-mdp step") {
  oracle::Rng rng(48);
  for (int i = 0; i < 10; ++i) {
    auto m = oracle::random_mdp(3, 2, 0.5, rng);
    auto mdp = m.mdp();
    RVec mu0 = RVec::Constant(3, 1.0 / 3);
    QmdpInstance q = embed_to_qmdp(mdp, mu0);
    RMat nu = RMat::Random(3, 2).cwiseAbs();
    nu /= nu.sum();
    RVec flat(6);
    for (int x = 0; x < 3; ++x)
      for (int a = 0; a < 2; ++a) flat(x * 2 + a) = nu(x, a);
    auto out = apply_kraus(q.channel(), HermitianOperator::diagonal(flat));
    CHECK((out.mat() - CMat(HermitianOperator::diagonal(dmdp_step(nu, mdp)).mat())).norm() < 1e-10);
    double cost = 0;
    for (int x = 0; x < 3; ++x)
      for (int a = 0; a < 2; ++a) cost += m.c(x, a) * nu(x, a);
    CHECK(hs_inner(q.cost(), HermitianOperator::diagonal(flat)) == doctest::Approx(cost));
  }
}

TEST_CASE("classical mdp validation") {
  CHECK_THROWS_AS(ClassicalMdp(1, 1, {0.9}, RMat::Constant(1, 1, 1.0), 0.5), InvalidInput);
  CHECK_THROWS_AS(ClassicalMdp(1, 1, {1.0}, RMat::Constant(1, 1, 1.0), 1.0), InvalidInput);
  CHECK_THROWS_AS(ClassicalMdp(1, 1, {1.0, 0.0}, RMat::Constant(1, 1, 1.0), 0.5), DimensionError);
  CHECK_THROWS_AS(StationaryKernel(RMat::Constant(1, 2, 0.4)), InvalidInput);
  CHECK_THROWS_AS(OccupancyMeasure(RMat::Constant(1, 2, 0.4)), InvalidInput);
}
