#include <doctest.h>

#include "oracles.hpp"
#include "qmdp/conic.hpp"
#include "qmdp/random.hpp"

using namespace qmdp;

namespace {

// Random strictly feasible, bounded problem: X0 = Id is feasible and C is positive
// definite, so both sides have interior points.
SdpProblem random_problem(int n, int m, oracle::Rng& rng) {
  SdpProblem p;
  p.dim = n;
  CMat g = oracle::gaussian(n, n, rng);
  p.objective = HermitianOperator(CMat(g * g.adjoint() + 0.1 * CMat::Identity(n, n)));
  for (int i = 0; i < m; ++i) {
    HermitianOperator a(oracle::herm(n, rng));
    p.constraints.push_back({a, a.trace()});
  }
  return p;
}

void check_kkt(const SdpProblem& p, const SdpSolution& s, double tol) {
  CHECK(min_eig(s.x) >= -10 * tol);
  CMat slack = p.objective.mat();
  for (size_t i = 0; i < p.constraints.size(); ++i) {
    CHECK(std::abs(hs_inner(p.constraints[i].a, s.x) - p.constraints[i].b) < 1e-6 * (1 + std::abs(p.constraints[i].b)));
    slack -= s.y[i] * p.constraints[i].a.mat();
  }
  CHECK(oracle::min_eig(slack) >= -10 * tol * (1 + p.objective.mat().norm()));
  CHECK(s.dual_obj <= s.primal_obj + 10 * tol * (1 + std::abs(s.primal_obj)));
}

}  // namespace

TEST_CASE("real embedding") {
  auto d = herm_to_real(HermitianOperator::diagonal((RVec(2) << 1, 2).finished()));
  CHECK((d - RVec((RVec(4) << 1, 2, 1, 2).finished()).asDiagonal().toDenseMatrix()).norm() < 1e-15);
  CMat y(2, 2);
  y << 0, cd(0, -1), cd(0, 1), 0;
  Eigen::SelfAdjointEigenSolver<RMat> es(herm_to_real(HermitianOperator(y)));
  CHECK((es.eigenvalues() - (RVec(4) << -1, -1, 1, 1).finished()).norm() < 1e-14);
  oracle::Rng rng(31);
  for (int i = 0; i < 10; ++i) {
    HermitianOperator h(oracle::herm(4, rng)), k(oracle::herm(4, rng));
    Eigen::SelfAdjointEigenSolver<RMat> e2(herm_to_real(h));
    CHECK(std::abs(e2.eigenvalues()(0) - oracle::min_eig(h.mat())) < 1e-10);
    CHECK(std::abs((herm_to_real(h).cwiseProduct(herm_to_real(k))).sum() - 2 * hs_inner(h, k)) < 1e-10);
  }
}

TEST_CASE("trivial one-dimensional problem") {
  SdpProblem p;
  p.dim = 1;
  p.objective = HermitianOperator::identity(1);
  p.constraints.push_back({HermitianOperator::identity(1), 1.0});
  auto s = solve(p);
  REQUIRE(s.status == SdpStatus::optimal);
  CHECK(s.x(0, 0).real() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.primal_obj == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("contradictory equalities are infeasible") {
  SdpProblem p;
  p.dim = 2;
  p.objective = HermitianOperator::identity(2);
  p.constraints.push_back({HermitianOperator::identity(2), 1.0});
  p.constraints.push_back({HermitianOperator::identity(2), 2.0});
  CHECK(solve(p).status == SdpStatus::infeasible);
}

TEST_CASE("infeasible and unbounded detection") {
  SdpProblem p;
  p.dim = 2;
  p.objective = HermitianOperator::identity(2);
  p.constraints.push_back({HermitianOperator::basis_projector(2, 0), -1.0});
  CHECK(solve(p).status == SdpStatus::infeasible);

  SdpProblem u;
  u.dim = 2;
  u.objective = HermitianOperator::diagonal((RVec(2) << 0, -1).finished());
  u.constraints.push_back({HermitianOperator::basis_projector(2, 0), 1.0});
  CHECK(solve(u).status == SdpStatus::unbounded);
}

TEST_CASE("minimum eigenvalue as an sdp") {
  oracle::Rng rng(32);
  for (int i = 0; i < 10; ++i) {
    SdpProblem p;
    p.dim = 4;
    p.objective = HermitianOperator(oracle::herm(4, rng));
    p.constraints.push_back({HermitianOperator::identity(4), 1.0});
    auto s = solve(p);
    REQUIRE(s.status == SdpStatus::optimal);
    CHECK(std::abs(s.primal_obj - oracle::min_eig_power(p.objective.mat(), rng)) < 1e-7);
  }
}

TEST_CASE("random problems satisfy kkt and duality") {
  oracle::Rng rng(33);
  for (int i = 0; i < 15; ++i) {
    auto p = random_problem(3 + i % 4, 2 + i % 5, rng);
    auto s = solve(p);
    REQUIRE(s.status == SdpStatus::optimal);
    CHECK(std::max({s.primal_residual, s.dual_residual, s.gap}) <= 1e-8);
    check_kkt(p, s, 1e-8);
  }
}

TEST_CASE("redundant constraints are pruned") {
  oracle::Rng rng(34);
  auto p = random_problem(4, 3, rng);
  auto base = solve(p);
  p.constraints.push_back({p.constraints[0].a * 2.0 - p.constraints[1].a, 2.0 * p.constraints[0].b - p.constraints[1].b});
  auto s = solve(p);
  REQUIRE(s.status == SdpStatus::optimal);
  CHECK(s.primal_obj == doctest::Approx(base.primal_obj).epsilon(1e-7));
  check_kkt(p, s, 1e-8);
}

TEST_CASE("objective scaling covariance and determinism") {
  oracle::Rng rng(35);
  auto p = random_problem(4, 3, rng);
  auto s1 = solve(p);
  auto q = p;
  q.objective = p.objective * 2.0;
  auto s2 = solve(q);
  REQUIRE(s1.status == SdpStatus::optimal);
  REQUIRE(s2.status == SdpStatus::optimal);
  CHECK(std::abs(s2.primal_obj - 2 * s1.primal_obj) < 1e-7 * (1 + std::abs(s1.primal_obj)));
  CHECK((s1.x.mat() - s2.x.mat()).norm() < 1e-4);
  auto s3 = solve(p);
  CHECK(s3.iterations == s1.iterations);
  CHECK((s3.x.mat() - s1.x.mat()).norm() == 0.0);
}

TEST_CASE("complex data and block structure") {
  oracle::Rng rng(36);
  // two independent eigenvalue problems in one block-diagonal program
  CMat a = oracle::herm(3, rng), b = oracle::herm(2, rng);
  CMat c = CMat::Zero(5, 5);
  c.block(0, 0, 3, 3) = a;
  c.block(3, 3, 2, 2) = b;
  SdpProblem p;
  p.dim = 5;
  p.blocks = {3, 2};
  p.objective = HermitianOperator(c);
  RVec d1 = RVec::Zero(5), d2 = RVec::Zero(5);
  d1.head(3).setOnes();
  d2.tail(2).setOnes();
  p.constraints.push_back({HermitianOperator::diagonal(d1), 1.0});
  p.constraints.push_back({HermitianOperator::diagonal(d2), 1.0});
  auto s = solve(p);
  REQUIRE(s.status == SdpStatus::optimal);
  CHECK(std::abs(s.primal_obj - oracle::min_eig(a) - oracle::min_eig(b)) < 1e-7);
  CHECK(s.x.mat().block(0, 3, 3, 2).norm() == 0.0);
}
